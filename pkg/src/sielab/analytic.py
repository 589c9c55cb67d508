r"""Separation-of-variables reference solutions for concentric circular geometries.

In region ``j`` with :math:`A_j = c_j I` and :math:`p_j` the Fourier mode
:math:`e^{im\theta}` of a solution of :math:`-c_j\Delta u + s^2p_ju = 0` is a
combination of a regular and a radiating radial function of
:math:`\hat s_j r`, :math:`\hat s_j = s\sqrt{p_j/c_j}`:

* ``Re s > 0``: :math:`I_m` and :math:`K_m`,
* ``s = i kappa``: :math:`J_m` and :math:`H^{(2)}_m`; ``s = -i kappa``:
  :math:`J_m` and :math:`H^{(1)}_m` (the limits of :math:`I_m, K_m` from the
  right half-plane up to constant factors).

Each radial function is normalised at one end of its annulus so that the
per-mode matching system stays well scaled; the exponential growth and decay
are carried by the scaled library functions.  Regions are numbered from the
outside: region 0 extends to infinity and carries only the radiating
function, which makes the DtN condition at ``R`` hold exactly.

Jump conventions at an interface: ``[u] = u_inner - u_outer`` and
``[c u_r] = c_inner u_r,inner - c_outer u_r,outer``.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import special

from .errors import ConfigurationError, ResonanceError, DomainError

_AXIS_TOL = 1e-8


@dataclass(frozen=True)
class RadialProblem:
    """Concentric geometry with region-wise constants.

    Parameters
    ----------
    s : complex
    R : float
        Truncation radius (only used for range checks and the DtN check).
    radii : tuple
        Ascending interface radii.
    c, p : tuple
        Coefficients per region ``0..J`` (region 0 outermost).
    obstacle : tuple or None
        ``(radius, "DIRICHLET" | "NEUMANN")`` for a full-circle obstacle.
    drives : dict, optional
        Default drive per mode, ``m -> dict(jumps=..., obstacle_value=...)``
        (see :func:`mie_solve_mode`).
    """

    s: complex
    R: float
    radii: tuple = ()
    c: tuple = (1.0,)
    p: tuple = (1.0,)
    obstacle: tuple = None
    drives: dict = None

    def __post_init__(self):
        object.__setattr__(self, "s", complex(self.s))
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        J = len(self.radii)
        if len(self.c) != J + 1 or len(self.p) != J + 1:
            raise ConfigurationError("need one (c, p) pair per region")
        if self.s == 0 or self.s.real < 0:
            raise ConfigurationError("C1: wavenumber must be nonzero with Re s >= 0")
        if any(ci <= 0 for ci in self.c) or any(pi <= 0 for pi in self.p):
            raise ConfigurationError("C2: coefficients must be positive")
        if self.s.real * max(self.radii + (self.R,)) <= _AXIS_TOL and abs(self.s.real) > 0:
            object.__setattr__(self, "s", complex(0.0, self.s.imag))

    @property
    def J(self):
        return len(self.radii)

    def shat(self, j):
        return self.s * math.sqrt(self.p[j] / self.c[j])

    def bounds(self, j):
        """``(r_in, r_out)`` of region ``j``; ``r_out = inf`` for region 0."""
        outer = [math.inf] + list(self.radii[::-1])
        inner = list(self.radii[::-1]) + [self.obstacle[0] if self.obstacle else 0.0]
        return inner[j], outer[j]

    def region_of(self, r):
        r = np.asarray(r, dtype=float)
        idx = np.zeros(r.shape, dtype=int)
        for c in self.radii:
            idx += (r < c)
        return idx


def _regular(m, z, z_ref, axis):
    """Regular radial function and its derivative w.r.t. ``z``, normalised at ``z_ref``."""
    m = abs(m)
    if axis == "real":
        # I_m(z)/I_m(z_ref) with scaled functions (ive carries exp(-|Re z|)), Re z > 0
        e = np.exp((z - z_ref).real)
        f = special.ive(m, z) / special.ive(m, z_ref) * e
        fp = (special.ive(m + 1, z) + (m / z) * special.ive(m, z)) / special.ive(m, z_ref) * e
        return f, fp
    # z = kappa r real; normalise by |H_m(z_ref)| >= |J_m(z_ref)|
    scale = abs(special.hankel1(m, z_ref))
    f = special.jv(m, z) / scale
    fp = (special.jv(m - 1, z) - special.jv(m + 1, z)) / (2 * scale)
    return f, fp


def _radiating(m, z, z_ref, axis, branch):
    """Radiating radial function normalised to 1 at ``z_ref`` and its ``z``-derivative."""
    m = abs(m)
    if axis == "real":
        k0 = special.kve(m, z_ref)
        e = np.exp(-(z - z_ref))
        f = special.kve(m, z) / k0 * e
        fp = (-special.kve(m + 1, z) + (m / z) * special.kve(m, z)) / k0 * e
        return f, fp
    hfun = special.hankel1e if branch == 1 else special.hankel2e
    sgn = 1.0 if branch == 1 else -1.0
    h0 = hfun(m, z_ref)
    e = np.exp(sgn * 1j * (z - z_ref))
    f = hfun(m, z) / h0 * e
    fp = 0.5 * (hfun(m - 1, z) - hfun(m + 1, z)) / h0 * e
    return f, fp


class _Basis:
    def __init__(self, problem, j, m):
        self.problem, self.j, self.m = problem, j, m
        sh = problem.shat(j)
        if sh.real > 0:
            self.axis, self.k, self.branch = "real", sh, None
        else:
            self.axis, self.k = "imag", abs(sh.imag)
            self.branch = 2 if sh.imag > 0 else 1
        r_in, r_out = problem.bounds(j)
        # region 0 is unbounded (radiating only); a disk without obstacle is regular only
        self.has_reg = j != 0
        self.has_rad = j == 0 or r_in > 0
        self.r_reg = r_out
        self.r_rad = r_in if r_in > 0 else problem.R

    def eval(self, r):
        """Rows ``[f_reg, f_rad]`` and their r-derivatives at radii ``r``."""
        r = np.asarray(r, dtype=float)
        out_f, out_d = [], []
        k = self.k
        if self.has_reg:
            f, fp = _regular(self.m, k * r, k * self.r_reg, self.axis)
            out_f.append(f)
            out_d.append(k * fp)
        if self.has_rad:
            f, fp = _radiating(self.m, k * r, k * self.r_rad, self.axis, self.branch)
            out_f.append(f)
            out_d.append(k * fp)
        return out_f, out_d


@dataclass
class MieSolution:
    """Per-mode coefficients of a reference solution; see :func:`mie_solve`."""

    problem: RadialProblem
    modes: dict = field(default_factory=dict)   # m -> list of per-region coefficient arrays

    def _region_sum(self, pts, j, deriv):
        x, y = pts[:, 0], pts[:, 1]
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        val = np.zeros(len(r), dtype=complex)
        dr = np.zeros(len(r), dtype=complex)
        dth = np.zeros(len(r), dtype=complex)
        rr = np.where(r > 0, r, 1e-300)
        for m, coeffs in self.modes.items():
            b = _Basis(self.problem, j, m)
            cj = coeffs[j]
            if not np.any(cj):
                continue
            with np.errstate(all="ignore"):
                f, d = b.eval(rr)
            radial = sum(ci * fi for ci, fi in zip(cj, f))
            radial_d = sum(ci * di for ci, di in zip(cj, d))
            if m != 0:
                radial = np.where(r > 0, radial, 0.0)
                radial_d = np.where(r > 0, radial_d, radial_d if abs(m) == 1 else 0.0)
            e = np.exp(1j * m * th)
            val += radial * e
            dr += radial_d * e
            dth += 1j * m * radial * e
        return val, dr, dth, r, th

    def value(self, points, region=None):
        """Field values; ``region`` forces one region's analytic continuation."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.hypot(pts[:, 0], pts[:, 1])
        if np.any(r > self.problem.R * (1 + 1e-12)):
            raise DomainError("mie_eval: points must lie in the closed disk of radius R")
        regs = self.problem.region_of(r) if region is None else np.full(len(r), region)
        out = np.zeros(len(r), dtype=complex)
        for j in np.unique(regs):
            sel = regs == j
            out[sel] = self._region_sum(pts[sel], int(j), False)[0]
        return out

    def gradient(self, points, region=None):
        """Cartesian gradient ``(n, 2)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.hypot(pts[:, 0], pts[:, 1])
        regs = self.problem.region_of(r) if region is None else np.full(len(r), region)
        out = np.zeros((len(r), 2), dtype=complex)
        for j in np.unique(regs):
            sel = regs == j
            _, dr, dth, rr, th = self._region_sum(pts[sel], int(j), True)
            rs = np.where(rr > 0, rr, 1.0)
            c, s_ = np.cos(th), np.sin(th)
            out[sel, 0] = dr * c - dth / rs * s_
            out[sel, 1] = dr * s_ + dth / rs * c
        return out

    def radial_derivative(self, points, region):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self._region_sum(pts, int(region), True)[1]


def mie_solve_mode(problem, m, jumps=None, obstacle_value=None):
    """Coefficients of mode ``m`` for the given drive.

    Parameters
    ----------
    jumps : dict, optional
        ``k -> (a, b)`` prescribing ``[u] = a`` and ``[c u_r] = b`` at
        interface ``k`` (ascending radius order).
    obstacle_value : complex
        Dirichlet value ``u`` or Neumann value ``-c u_r`` (outward conormal of
        the surrounding region) on the obstacle circle.

    Returns
    -------
    list of arrays
        Per region ``j``: coefficients of the available radial functions
        (regular first, then radiating).

    Raises
    ------
    ResonanceError
        If the matching matrix is numerically singular.
    """
    if abs(m) > 64:
        raise DomainError("mie_solve_mode: |m| <= 64 required")
    if jumps is None and obstacle_value is None and problem.drives:
        d = problem.drives.get(m, {})
        jumps, obstacle_value = d.get("jumps"), d.get("obstacle_value")
    jumps = jumps or {}
    obstacle_value = 0.0 if obstacle_value is None else obstacle_value
    P = problem
    J = P.J
    bases = [_Basis(P, j, m) for j in range(J + 1)]
    offs, n = [], 0
    for b in bases:
        offs.append(n)
        n += int(b.has_reg) + int(b.has_rad)
    A = np.zeros((n, n), dtype=complex)
    rhs = np.zeros(n, dtype=complex)
    row = 0
    for k, rk in enumerate(P.radii):
        a_reg, b_reg = J - k, J - k - 1        # inner and outer region
        fa, da = bases[a_reg].eval(np.array([rk]))
        fb, db = bases[b_reg].eval(np.array([rk]))
        for i, (f, d) in enumerate(zip(fa, da)):
            A[row, offs[a_reg] + i] += f[0]
            A[row + 1, offs[a_reg] + i] += P.c[a_reg] * d[0]
        for i, (f, d) in enumerate(zip(fb, db)):
            A[row, offs[b_reg] + i] -= f[0]
            A[row + 1, offs[b_reg] + i] -= P.c[b_reg] * d[0]
        a, b = jumps.get(k, (0.0, 0.0))
        rhs[row], rhs[row + 1] = a, b
        row += 2
    if P.obstacle is not None:
        ro, kind = P.obstacle
        f, d = bases[J].eval(np.array([ro]))
        for i in range(len(f)):
            A[row, offs[J] + i] = f[i][0] if kind.upper() == "DIRICHLET" else -P.c[J] * d[i][0]
        rhs[row] = obstacle_value
        row += 1
    if row != n:
        if not np.any(rhs) and row == 0:
            return [np.zeros(int(b.has_reg) + int(b.has_rad), dtype=complex) for b in bases]
        raise ConfigurationError("matching system is not square")
    if n == 0:
        return [np.zeros(0, dtype=complex) for _ in bases]
    try:
        cond = np.linalg.cond(A)
    except np.linalg.LinAlgError:
        cond = math.inf
    if not np.isfinite(cond) or cond > 1e13:
        raise ResonanceError(f"matching system singular for mode m={m} (cond={cond:.2e})", mode=m)
    x = np.linalg.solve(A, rhs)
    res = np.linalg.norm(A @ x - rhs)
    if res > 1e-12 * (np.linalg.norm(A) * np.linalg.norm(x) + np.linalg.norm(rhs)):
        raise ResonanceError(f"matching residual {res:.2e} too large for mode m={m}", mode=m)
    return [x[offs[j]: offs[j] + int(b.has_reg) + int(b.has_rad)] for j, b in enumerate(bases)]


def mie_solve(problem, drives=None):
    """Solve several modes at once.

    ``drives`` maps ``m -> dict(jumps=..., obstacle_value=...)``; defaults to
    ``problem.drives``.
    """
    drives = problem.drives if drives is None else drives
    sol = MieSolution(problem)
    for m, d in drives.items():
        sol.modes[int(m)] = mie_solve_mode(problem, int(m), d.get("jumps"),
                                           d.get("obstacle_value", 0.0))
    return sol


def mie_eval(problem, solution, points, region=None):
    """Evaluate a :class:`MieSolution` at ``points`` (``|x| <= R``)."""
    return solution.value(points, region=region)


def mie_errors(mesh, values, solution, select=None):
    """L2 and H1-seminorm errors of a P1 field against a :class:`MieSolution`.

    Each triangle is compared with the analytic continuation of the
    reference from the region recorded in ``mesh.regions``.
    """
    from .fem import field_errors

    def _by_region(fn):
        def wrapped(x, reg):
            out = None
            for j in np.unique(reg):
                sel = reg == j
                v = fn(x[sel], region=int(j))
                if out is None:
                    out = np.zeros((len(x),) + v.shape[1:], dtype=complex)
                out[sel] = v
            return out
        return wrapped

    return field_errors(mesh, values, _by_region(solution.value),
                        _by_region(solution.gradient), select=select)
