import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from sielab.dtn import (DtnOperator, assemble_dtn_form, dtn_eigenvalue, dtn_eigenvalues,
                        exterior_eval, hat_fourier)
from sielab.errors import ConfigurationError, DomainError
from sielab.mesh import GeometrySpec, build_concentric_mesh

mp.mp.dps = 30
SIGN_S = [0.5, 1.0, 2.0, 1j, 2j, 1 + 1j]


def mp_dtn(m, s, R):
    z = mp.mpc(s) * R
    return complex(mp.mpc(s) * mp.diff(lambda t: mp.besselk(m, t), z) / mp.besselk(m, z))


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0, 1 + 1j, 0.3 - 2j, 3 + 0.1j])
@pytest.mark.parametrize("m", [0, 1, 3, 10, 40])
def test_right_half_plane_matches_mpmath(s, m):
    assert dtn_eigenvalue(m, s, 1.5) == pytest.approx(mp_dtn(m, s, 1.5), rel=1e-10)


@pytest.mark.parametrize("kappa", [0.5, 2.0, 7.5])
@pytest.mark.parametrize("sign", [1, -1])
@pytest.mark.parametrize("m", [0, 2, 9])
def test_imaginary_axis_is_the_right_half_plane_limit(kappa, sign, m):
    s = sign * 1j * kappa
    limit = mp_dtn(m, complex(1e-9, s.imag), 1.0)
    assert dtn_eigenvalue(m, s, 1.0) == pytest.approx(limit, rel=1e-7)


def test_imaginary_axis_branches_are_conjugate():
    d_minus = dtn_eigenvalues(20, -2j, 1.3)
    d_plus = dtn_eigenvalues(20, 2j, 1.3)
    np.testing.assert_allclose(d_plus, np.conj(d_minus), rtol=1e-14)
    h = lambda t: mp.besselj(3, t) + 1j * mp.bessely(3, t)
    ref = 2.0 * complex(mp.diff(h, 2.6) / h(2.6))
    assert d_minus[3] == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("s", SIGN_S)
def test_sign_properties(s):
    d = dtn_eigenvalues(64, s, 1.0)
    assert np.all(d.real <= 0)
    if complex(s).imag != 0:
        assert np.all(complex(s).imag * d.imag < 0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(-5.0, 5.0), st.floats(0.2, 4.0))
def test_sign_properties_random(re, im, R):
    s = complex(re, im)
    if abs(s) < 1e-3:
        return
    d = dtn_eigenvalues(40, s, R)
    assert np.all(d.real <= 0)
    if im != 0:
        assert np.all(np.sign(d.imag) == -np.sign(im))


def test_table_example():
    assert dtn_eigenvalue(0, 1.0, 1.0) == pytest.approx(-1.4296253982604017, rel=1e-12)


def test_rejects_invalid_wavenumbers():
    with pytest.raises(DomainError):
        dtn_eigenvalues(4, 0.0, 1.0)
    with pytest.raises(DomainError):
        dtn_eigenvalues(4, -1.0 + 1j, 1.0)


def test_hat_fourier_matches_quadrature(rng):
    theta = np.sort(rng.uniform(0, 2 * np.pi, 17))
    vals = rng.standard_normal(17)
    F = hat_fourier(theta, 6)
    ext = np.append(theta, theta[0] + 2 * np.pi)
    vext = np.append(vals, vals[0])

    def g(t):
        t = theta[0] + np.mod(t - theta[0], 2 * np.pi)
        return np.interp(t, ext, vext)

    for m in range(7):
        re = integrate.quad(lambda t: g(t) * np.cos(m * t), theta[0], theta[0] + 2 * np.pi,
                            points=ext, limit=200)[0]
        im = integrate.quad(lambda t: -g(t) * np.sin(m * t), theta[0], theta[0] + 2 * np.pi,
                            points=ext, limit=200)[0]
        assert F[m] @ vals == pytest.approx((re + 1j * im) / (2 * np.pi), abs=1e-12)


def test_form_is_complex_symmetric_and_dissipative():
    mesh = build_concentric_mesh(GeometrySpec(1.0), 0.1)
    for s in (1.0, 2j, 1 + 1j):
        dtn = DtnOperator.for_mesh(mesh, s, 1.0, M=8)
        B = assemble_dtn_form(dtn)
        np.testing.assert_allclose(B, B.T, atol=1e-13)
        if complex(s).imag == 0:
            assert np.linalg.eigvalsh(-B.real).min() > -1e-12


def test_form_reproduces_a_mode():
    """<DtN v, conj w> for v = w = cos(2 theta) is pi R Re d_2 up to the P1 trace error."""
    mesh = build_concentric_mesh(GeometrySpec(1.0), 0.05)
    dtn = DtnOperator.for_mesh(mesh, 1.0, 1.0, M=8)
    B = assemble_dtn_form(dtn)
    v = np.cos(2 * dtn.theta)
    assert v @ B @ v == pytest.approx(np.pi * dtn_eigenvalue(2, 1.0, 1.0).real, rel=5e-3)


def test_nyquist_bound():
    mesh = build_concentric_mesh(GeometrySpec(1.0), 0.25)
    n = len(mesh.tag_nodes("OUTER"))
    with pytest.raises(ConfigurationError):
        DtnOperator.for_mesh(mesh, 1.0, 1.0, M=n // 2)


def test_exterior_eval_matches_radial_solution():
    mesh = build_concentric_mesh(GeometrySpec(1.0), 0.02)
    dtn = DtnOperator.for_mesh(mesh, 1.5, 1.0, M=12)
    g = np.cos(3 * dtn.theta)
    pts = np.array([[1.7 * np.cos(0.4), 1.7 * np.sin(0.4)]])
    ref = float(mp.besselk(3, 1.5 * 1.7) / mp.besselk(3, 1.5)) * np.cos(3 * 0.4)
    assert exterior_eval(g, dtn, pts)[0] == pytest.approx(ref, abs=2e-3)
    with pytest.raises(DomainError):
        exterior_eval(g, dtn, np.array([[0.5, 0.0]]))
