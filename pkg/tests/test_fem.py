import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sielab.errors import ConfigurationError
from sielab.fem import (CoefficientField, FeSpace, Field, WaveContext, assemble_l, field_errors,
                        load_vector, locate_and_interpolate, mass_matrix, norms, stiffness_matrix,
                        v_membership_residual)
from sielab.mesh import GeometrySpec, build_concentric_mesh, refine
from sielab.potentials import BumpWave

SPEC = GeometrySpec(2.0, (1.0,))


@pytest.fixture(scope="module")
def mesh():
    return build_concentric_mesh(SPEC, 0.25)


def test_mass_and_stiffness_integrate_exactly(mesh):
    M, K = mass_matrix(mesh), stiffness_matrix(mesh)
    one = np.ones(mesh.n_vertices)
    x, y = mesh.vertices.T
    area = mesh.areas().sum()
    assert one @ M @ one == pytest.approx(area, rel=1e-13)
    assert np.abs(K @ one).max() < 1e-12
    assert x @ K @ x == pytest.approx(area, rel=1e-13)
    assert x @ K @ y == pytest.approx(0.0, abs=1e-12)
    # int x^2 is exact for P1 mass with linear data
    ref = sum(a * (p[:, 0] @ p[:, 0] + p[:, 0].sum() ** 2) / 12
              for a, p in zip(mesh.areas(), mesh.vertices[mesh.triangles]))
    assert x @ M @ x == pytest.approx(ref, rel=1e-12)


def test_load_vector_of_constant(mesh):
    b = load_vector(mesh, lambda xq: np.ones(len(xq)))
    np.testing.assert_allclose(b, mass_matrix(mesh) @ np.ones(mesh.n_vertices), atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.floats(0.05, 3.0))
def test_coercivity_for_real_wavenumber(seed, c1, p1, s):
    """Re l(v,v) >= min(a_min, p_min) ||v||_{H1,s}^2 for every discrete v."""
    mesh = build_concentric_mesh(SPEC, 0.4)
    coeff = CoefficientField.isotropic((1.0, c1), (1.0, p1))
    L = assemble_l(FeSpace(mesh, ()), coeff, WaveContext(s, 2.0))
    v = np.array([1, 1j]) @ np.random.default_rng(seed).standard_normal((2, mesh.n_vertices))
    nrm = norms(Field(L.space, v), WaveContext(s, 2.0))["h1_s"] ** 2
    assert L.form(v, v).real >= min(coeff.a_min, coeff.p_min) * nrm * (1 - 1e-12)


def test_system_matrix_is_complex_symmetric(mesh):
    L = assemble_l(FeSpace(mesh, ()), CoefficientField.isotropic((1.0, 3.0), (1.0, 2.0)),
                   WaveContext(1 + 2j, 2.0))
    A = L.toarray()
    np.testing.assert_allclose(A, A.T, atol=1e-12)


@pytest.mark.parametrize("s", [1.0, 2j, 1 + 1j])
def test_manufactured_bump_converges(s):
    """A compactly supported smooth field solves l(u, v) = (f, v) with f = -Lap w + s^2 w."""
    w = BumpWave(1.6, [1.0, 0.5j], [[1.0, 0.5], [-0.7, 1.2]])
    f = lambda x: -w.laplacian(x) + s ** 2 * w.value(x)
    wave = WaveContext(s, 2.0)
    coeff = CoefficientField.isotropic((1.0, 1.0), (1.0, 1.0))
    mesh = build_concentric_mesh(SPEC, 0.2)
    errs, hs = [], []
    for _ in range(3):
        L = assemble_l(FeSpace(mesh, ()), coeff, wave)
        u = L.solve(load_vector(mesh, f))
        e = field_errors(mesh, u, lambda x, r: w.value(x), lambda x, r: w.gradient(x))
        errs.append(e)
        hs.append(mesh.h)
        mesh = refine(mesh)
    for key, rate in (("l2", 2.0), ("h1", 1.0)):
        eoc = math.log(errs[-2][key] / errs[-1][key]) / math.log(hs[-2] / hs[-1])
        assert abs(eoc - rate) < 0.2, (key, eoc)


def test_interpolate_reproduces_linear_fields(mesh, rng):
    x, y = mesh.vertices.T
    vals = 2 * x - 3 * y + 1
    pts = rng.uniform(-1.3, 1.3, (50, 2))
    np.testing.assert_allclose(locate_and_interpolate(mesh, vals, pts),
                               2 * pts[:, 0] - 3 * pts[:, 1] + 1, atol=1e-12)


def test_v_membership_variational_flux_vanishes_for_homogeneous_solution():
    mesh = build_concentric_mesh(SPEC, 0.2)
    wave = WaveContext(1.0, 2.0)
    L = assemble_l(FeSpace(mesh, ()), CoefficientField.isotropic((1.0, 1.0), (1.0, 1.0)), wave)
    rhs = load_vector(mesh, lambda x: np.exp(-10 * (x ** 2).sum(1)))
    u = Field(L.space, L.solve(rhs))
    assert v_membership_residual(u, L, rhs, flux="variational") < 1e-10
    assert v_membership_residual(u, L, rhs, flux="element") < 0.1


@pytest.mark.parametrize("bad", [
    lambda: WaveContext(0.0, 1.0),
    lambda: WaveContext(-1.0, 1.0),
    lambda: CoefficientField({0: 1.0}, {0: 0.0}),
    lambda: CoefficientField({0: [[1.0, 2.0], [2.0, 1.0]]}, {0: 1.0}),
])
def test_invalid_contexts(bad):
    with pytest.raises(ConfigurationError, match="C1|C2"):
        bad()
