import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sielab.calderon import (CauchyData, apply_calderon, apply_K, apply_Kdual, apply_V, apply_W,
                             assemble_calderon, calderon_symbol, dual_pairing, garding_functional)
from sielab.errors import DomainError
from sielab.fem import WaveContext
from sielab.mesh import GeometrySpec, build_background_mesh
from sielab.potentials import INNER, OUTER, PotentialSetup
from sielab.studies import calderon_study, ratios

SPEC = GeometrySpec(2.0, (1.0,))


@pytest.fixture(scope="module", params=[(1.0, INNER), (2j, INNER), (1 + 1j, OUTER)])
def cmat(request):
    s, side = request.param
    bg = build_background_mesh(SPEC, 0.25)
    st_ = PotentialSetup(bg, [(0, side)], 1.5, 2.0, WaveContext(s, 2.0))
    return assemble_calderon(0, st_)


def rand_data(rng, n):
    return CauchyData(0, rng.standard_normal(n) + 1j * rng.standard_normal(n),
                      rng.standard_normal(n) + 1j * rng.standard_normal(n))


def test_discrete_projector_identity(cmat):
    D = cmat.projector_defect()
    assert np.abs(D).max() <= 1e-10 * np.abs(cmat.matrix).max()


def test_blocks_match_matrix_free_application(cmat, rng):
    g = rand_data(rng, cmat.n)
    st_ = cmat.setup
    np.testing.assert_allclose(cmat.apply(g).stacked, np.concatenate(apply_calderon(g, st_)),
                               atol=1e-10)
    np.testing.assert_allclose(cmat.V @ g.g_N, apply_V(g.g_N, st_), atol=1e-10)
    np.testing.assert_allclose(cmat.K @ g.g_D, apply_K(g.g_D, st_), atol=1e-10)
    np.testing.assert_allclose(cmat.Kdual @ g.g_N, apply_Kdual(g.g_N, st_), atol=1e-10)
    np.testing.assert_allclose(cmat.W @ g.g_D, apply_W(g.g_D, st_), atol=1e-10)


def test_shifted_operators_give_one_sided_traces(cmat, rng):
    """(C + 1/2) g are the G-side traces of the combined potential."""
    g = rand_data(rng, cmat.n)
    st_ = cmat.setup
    gD, gDe, gN, gNe = st_.one_sided_traces(st_.combined(g.g_D, g.g_N))
    Cg = cmat.apply(g)
    np.testing.assert_allclose(Cg.g_D + 0.5 * g.g_D, gD, atol=1e-10)
    np.testing.assert_allclose(Cg.g_N + 0.5 * g.g_N, gN, atol=1e-9)
    np.testing.assert_allclose(Cg.g_D - 0.5 * g.g_D, gDe, atol=1e-10)
    np.testing.assert_allclose(Cg.g_N - 0.5 * g.g_N, -gNe, atol=1e-9)


def test_garding_functional_positive(cmat, rng):
    for _ in range(10):
        assert garding_functional(rand_data(rng, cmat.n), cmat.setup, cmat) > 0


@pytest.mark.parametrize("s", [0.7, 2.0])
@pytest.mark.parametrize("m", [0, 1, 4])
def test_symbol_single_layer_entry(m, s):
    """V on a circle of radius a acts on mode m by a I_m(s a) K_m(s a) / c."""
    a, c = 1.0, 1.5
    S = calderon_symbol(m, s, a, c, 2.0, INNER, 2.0)
    sh = s * (2.0 / c) ** 0.5
    ref = a * float(mp.besseli(m, sh * a) * mp.besselk(m, sh * a)) / c
    assert S[0, 1] == pytest.approx(ref, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(-8, 8), st.sampled_from([1.0, 2j, 1 + 1j, 0.3 - 2j]), st.sampled_from([INNER, OUTER]))
def test_symbol_is_a_projector_square_root(m, s, side):
    S = calderon_symbol(m, s, 1.0, 1.5, 2.0, side, 2.0)
    np.testing.assert_allclose(S @ S, 0.25 * np.eye(2), atol=1e-10)


def test_symbol_consistency_converges():
    rows = calderon_study(levels=3, n_random=5)
    assert min(ratios([r["symbol_error"] for r in rows])) >= 1.7
    assert max(r["projector_residual"] for r in rows) <= 1e-10
    assert min(r["garding_min"] for r in rows) > 0


def test_symbol_consistency_off_axis():
    rows = calderon_study(s=1 + 1j, levels=3, n_random=3)
    assert min(ratios([r["symbol_error"] for r in rows])) >= 1.7


def test_cauchy_data_algebra(rng):
    g, h = rand_data(rng, 5), rand_data(rng, 5)
    np.testing.assert_allclose((g + h - h).stacked, g.stacked)
    np.testing.assert_allclose((2 * g).stacked, 2 * g.stacked)
    M = np.diag(rng.uniform(1, 2, 5))
    assert dual_pairing(g, h, M) == pytest.approx(dual_pairing(h, g, M))
    with pytest.raises(DomainError):
        g + rand_data(rng, 6)
    with pytest.raises(DomainError):
        CauchyData(0, np.ones(3), np.ones(4))
