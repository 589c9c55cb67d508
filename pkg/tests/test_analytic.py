import math

import mpmath as mp
import numpy as np
import pytest

from sielab.analytic import RadialProblem, MieSolution, mie_solve, mie_solve_mode
from sielab.errors import ConfigurationError, DomainError

mp.mp.dps = 30
S_VALUES = [1.0, 2j, 0.5 + 1.5j]


def radial(sol, r, region, m_angle=0.0):
    pts = np.array([[r * math.cos(m_angle), r * math.sin(m_angle)]])
    return sol.value(pts, region=region)[0], sol.radial_derivative(pts, region)[0]


def mp_dtn(m, s, R):
    z = mp.mpc(s) * R
    if abs(complex(s).real) < 1e-14:
        kappa = abs(complex(s).imag)
        h = (lambda t: mp.besselj(m, t) + 1j * mp.bessely(m, t)) if complex(s).imag < 0 else \
            (lambda t: mp.besselj(m, t) - 1j * mp.bessely(m, t))
        return complex(kappa * mp.diff(h, kappa * R) / h(kappa * R))
    return complex(mp.mpc(s) * mp.diff(lambda t: mp.besselk(m, t), z) / mp.besselk(m, z))


@pytest.mark.parametrize("s", S_VALUES)
@pytest.mark.parametrize("m", [0, 1, 3])
def test_two_region_mode_satisfies_matching_and_radiation(s, m):
    c, p = (1.0, 2.0), (1.0, 3.0)
    prob = RadialProblem(s, 2.0, (1.0,), c, p)
    a, b = 0.7 - 0.2j, 1.3 + 0.4j
    sol = MieSolution(prob, {m: mie_solve_mode(prob, m, jumps={0: (a, b)})})
    u1, d1 = radial(sol, 1.0, 1)
    u0, d0 = radial(sol, 1.0, 0)
    assert u1 - u0 == pytest.approx(a, abs=1e-12)
    assert c[1] * d1 - c[0] * d0 == pytest.approx(b, abs=1e-12)
    uR, dR = radial(sol, 2.0, 0)
    assert dR / uR == pytest.approx(mp_dtn(m, complex(s) * math.sqrt(p[0] / c[0]), 2.0), rel=1e-9)


@pytest.mark.parametrize("s", S_VALUES)
def test_radial_ode_by_finite_differences(s):
    c, p = (1.0, 2.0), (1.0, 3.0)
    m = 2
    prob = RadialProblem(s, 2.0, (1.0,), c, p)
    sol = MieSolution(prob, {m: mie_solve_mode(prob, m, jumps={0: (1.0, 0.5)})})
    h = 1e-4
    for r, j in ((0.6, 1), (1.5, 0)):
        f = [radial(sol, r + k * h, j)[0] for k in (-1, 0, 1)]
        fpp = (f[0] - 2 * f[1] + f[2]) / h ** 2
        fp = (f[2] - f[0]) / (2 * h)
        res = -c[j] * (fpp + fp / r - m ** 2 * f[1] / r ** 2) + complex(s) ** 2 * p[j] * f[1]
        assert abs(res) <= 1e-5 * (abs(f[1]) * (1 + abs(complex(s)) ** 2 * p[j]) + 1)
        assert radial(sol, r, j)[1] == pytest.approx(fp, rel=1e-6)


def test_gradient_matches_finite_differences():
    prob = RadialProblem(1 + 1j, 2.0, (1.0,), (1.0, 2.0), (1.0, 3.0))
    sol = mie_solve(prob, {0: dict(jumps={0: (1.0, 0.0)}), 3: dict(jumps={0: (0.2, 1.0)})})
    x = np.array([[0.4, 0.5], [1.2, -0.9]])
    g = sol.gradient(x)
    h = 1e-6
    for d in range(2):
        e = np.zeros(2)
        e[d] = h
        fd = (sol.value(x + e) - sol.value(x - e)) / (2 * h)
        np.testing.assert_allclose(g[:, d], fd, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("kind", ["DIRICHLET", "NEUMANN"])
def test_obstacle_boundary_condition(kind):
    prob = RadialProblem(2j, 2.0, (1.0,), (1.0, 2.0), (1.0, 3.0), obstacle=(0.5, kind))
    sol = MieSolution(prob, {1: mie_solve_mode(prob, 1, jumps={0: (1.0, 0.5)}, obstacle_value=0.3)})
    u, d = radial(sol, 0.5, 1)
    if kind == "DIRICHLET":
        assert u == pytest.approx(0.3, abs=1e-12)
    else:
        assert -2.0 * d == pytest.approx(0.3, abs=1e-12)


def test_interior_solution_is_regular_at_origin():
    prob = RadialProblem(1.0, 2.0, (1.0,), (1.0, 2.0), (1.0, 3.0))
    sol = mie_solve(prob, {0: dict(jumps={0: (1.0, 0.0)}), 2: dict(jumps={0: (1.0, 0.0)})})
    v = sol.value(np.array([[0.0, 0.0], [1e-6, 0.0]]))
    assert np.isfinite(v).all() and abs(v[0] - v[1]) < 1e-5


def test_errors():
    with pytest.raises(ConfigurationError, match="C1"):
        RadialProblem(0.0, 2.0)
    with pytest.raises(ConfigurationError, match="C2"):
        RadialProblem(1.0, 2.0, (1.0,), (1.0, -1.0), (1.0, 1.0))
    prob = RadialProblem(1.0, 2.0, (1.0,), (1.0, 2.0), (1.0, 3.0))
    with pytest.raises(DomainError):
        mie_solve_mode(prob, 65, jumps={0: (1.0, 0.0)})
    sol = mie_solve(prob, {0: dict(jumps={0: (1.0, 0.0)})})
    with pytest.raises(DomainError):
        sol.value(np.array([[2.5, 0.0]]))
