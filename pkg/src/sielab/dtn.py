r"""Dirichlet-to-Neumann map on the truncation circle as a Fourier multiplier.

For a radiating exterior solution of :math:`-c\Delta u + s^2 p\,u = 0` in
:math:`|x|>R` the map :math:`u|_{S_R}\mapsto c\,\partial_r u|_{S_R}` acts on the
Fourier mode :math:`e^{im\theta}` by the eigenvalue :math:`c\,d_m(\hat s,R)`
with :math:`\hat s = s\sqrt{p/c}` and

.. math::

    d_m(s,R) = s\,\frac{K_m'(sR)}{K_m(sR)} \quad (\operatorname{Re}s>0).

On the imaginary axis the limit from the right half-plane is taken.  With
:math:`s = \mp i\kappa`, :math:`\kappa>0`, the exterior solutions are
:math:`H^{(1)}_m(\kappa r)` and :math:`H^{(2)}_m(\kappa r)` respectively, so
:math:`d_m(-i\kappa) = \kappa H^{(1)\prime}_m/H^{(1)}_m` and
:math:`d_m(i\kappa) = \overline{d_m(-i\kappa)}`.

Discrete traces are continuous piecewise-linear functions of the polar angle
on the polygonal boundary.  Their Fourier coefficients are integrated exactly,
so the boundary form is free of quadrature error.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import special

from . import bessel
from .errors import DomainError, ConfigurationError

TWO_PI = 2.0 * math.pi
_AXIS_TOL = 1e-8   # Re(s R) at or below this is treated as the imaginary axis


def _axis(s):
    s = complex(s)
    if s == 0 or not np.isfinite(s):
        raise DomainError("C1: wavenumber must be nonzero and finite")
    if s.real < 0:
        raise DomainError("C1: wavenumber must have non-negative real part")
    return s


def dtn_eigenvalues(order_max, s, R):
    """Eigenvalues :math:`d_m(s,R)` for ``m = 0..order_max`` (see module docstring)."""
    s = _axis(s)
    if not R > 0:
        raise DomainError("truncation radius must be positive")
    if s.real * R > _AXIS_TOL:
        return s * bessel.k_ratio_all(order_max, s * R)
    kappa = abs(s.imag)
    d = kappa * bessel.hankel1_log_derivative_all(order_max, kappa * R)
    return np.conj(d) if s.imag > 0 else d


def dtn_eigenvalue(m, s, R):
    """Eigenvalue :math:`d_m(s,R)` of the exterior Dirichlet-to-Neumann map.

    Examples
    --------
    >>> round(dtn_eigenvalue(0, 1.0, 1.0).real, 10)
    -1.4296253983
    """
    m = abs(int(m))
    return complex(dtn_eigenvalues(m, s, R)[m])


# ---------------------------------------------------------------------------
# Fourier coefficients of piecewise-linear traces
# ---------------------------------------------------------------------------

def _ramp_integrals(mu):
    """Return ``(f1, f2) = (int_0^1 e^{-i mu t} dt, int_0^1 t e^{-i mu t} dt)``."""
    mu = np.asarray(mu, dtype=float)
    f1 = np.empty(mu.shape, dtype=complex)
    f2 = np.empty(mu.shape, dtype=complex)
    small = np.abs(mu) < 0.5
    big = ~small
    c = -1j * mu[big]
    ec = np.exp(c)
    f1[big] = (ec - 1.0) / c
    f2[big] = ec * (1.0 / c - 1.0 / c ** 2) + 1.0 / c ** 2
    x = -1j * mu[small]
    s1 = np.zeros(x.shape, dtype=complex)
    s2 = np.zeros(x.shape, dtype=complex)
    term = np.ones(x.shape, dtype=complex)  # x^n / n!
    for n in range(18):
        if n:
            term = term * x / n
        s1 += term / (n + 1)
        s2 += term / (n + 2)
    f1[small] = s1
    f2[small] = s2
    return f1, f2


def hat_fourier(theta, order_max):
    r"""Fourier coefficients of nodal hat functions on a closed angular polyline.

    Parameters
    ----------
    theta : (n,) array
        Strictly increasing node angles in ``[theta_0, theta_0 + 2 pi)``.
    order_max : int

    Returns
    -------
    (order_max + 1, n) complex array
        ``F[m, k]`` = :math:`\frac{1}{2\pi}\int_0^{2\pi}\varphi_k(\theta)e^{-im\theta}\,d\theta`
        for the hat :math:`\varphi_k` that is linear in ``theta`` between nodes.
    """
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    nxt = np.append(theta[1:], theta[0] + TWO_PI)
    L = nxt - theta                      # segment k runs from node k to node k+1
    m = np.arange(order_max + 1)[:, None]
    mu = m * L[None, :]
    f1, f2 = _ramp_integrals(mu)
    phase = np.exp(-1j * m * theta[None, :])
    rise = L * phase * f2                # part of hat k+1 on segment k
    fall = L * phase * (f1 - f2)         # part of hat k on segment k
    F = fall + np.roll(rise, 1, axis=1)
    return F / TWO_PI


# ---------------------------------------------------------------------------
# operator
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DtnOperator:
    r"""Truncated DtN multiplier bound to the boundary nodes of a mesh.

    Parameters
    ----------
    s : complex
    R : float
    nodes : (n,) int array
        Global ids of the truncation-circle nodes, ordered by angle.
    theta : (n,) float array
        Their polar angles, increasing.
    M : int
        Mode cutoff; modes ``|m| <= M`` are retained.
    c, p : float
        Exterior diffusion and mass coefficients; eigenvalues are
        :math:`c\,d_m(s\sqrt{p/c}, R)`.
    """

    s: complex
    R: float
    nodes: np.ndarray
    theta: np.ndarray
    M: int
    c: float = 1.0
    p: float = 1.0

    def __post_init__(self):
        n = len(self.nodes)
        if self.M < 0:
            raise ConfigurationError("mode cutoff must be non-negative")
        bound = n // 2 - 1
        if self.M > bound:
            raise ConfigurationError(
                f"mode cutoff M={self.M} violates the Nyquist bound M <= n/2 - 1 = {bound}")
        if not (self.c > 0 and self.p > 0):
            raise ConfigurationError("C2: exterior coefficients must be positive")
        object.__setattr__(self, "s", _axis(self.s))
        d = self.c * dtn_eigenvalues(self.M, self.s * math.sqrt(self.p / self.c), self.R)
        object.__setattr__(self, "eigenvalues", d)
        object.__setattr__(self, "_fourier", hat_fourier(self.theta, self.M))

    @classmethod
    def for_mesh(cls, mesh, s, R, M=None, c=1.0, p=1.0, tag="OUTER"):
        """Build from the ``OUTER`` polyline of ``mesh``; default ``M = min(32, n // 4)``."""
        nodes = mesh.tag_nodes(tag)
        if len(nodes) == 0:
            raise ConfigurationError("mesh has no truncation-circle edges")
        xy = mesh.vertices[nodes]
        r = np.hypot(xy[:, 0], xy[:, 1])
        if np.max(np.abs(r - R)) > 1e-12 * R:
            raise ConfigurationError("truncation polyline does not match radius R")
        theta = np.mod(np.arctan2(xy[:, 1], xy[:, 0]), TWO_PI)
        if M is None:
            M = min(32, len(nodes) // 4)
        return cls(s=s, R=float(R), nodes=nodes, theta=theta, M=int(M), c=c, p=p)

    @property
    def n_boundary(self):
        return len(self.nodes)

    def fourier(self, values):
        """Coefficients :math:`\\hat g_m`, ``m = 0..M``, of a nodal trace."""
        return self._fourier @ np.asarray(values)

    def factors(self):
        """Real ``U`` (n, 2M+1) and complex weights ``w`` with ``B = U diag(w) U^T``.

        Columns are the mode-0 coefficient and, for ``m >= 1``,
        ``sqrt(2) Re`` and ``sqrt(2) Im`` of the hat coefficients.
        """
        F = self._fourier
        cols = [F[0].real]
        w = [self.eigenvalues[0]]
        for m in range(1, self.M + 1):
            cols += [math.sqrt(2) * F[m].real, math.sqrt(2) * F[m].imag]
            w += [self.eigenvalues[m]] * 2
        U = np.column_stack(cols)
        return U, TWO_PI * self.R * np.asarray(w)

    def apply_ntd(self, values):
        """Apply the inverse multiplier (Neumann-to-Dirichlet) on resolved modes."""
        ghat = self.fourier(values)
        return ghat / self.eigenvalues


def assemble_dtn_form(dtn):
    r"""Dense boundary matrix ``B`` with ``conj(w)^T B v`` = :math:`\langle \mathrm{DtN}\,v,\bar w\rangle_{S_R}`.

    ``B`` is complex symmetric and indexed by the boundary nodes of ``dtn``.
    """
    U, w = dtn.factors()
    return (U * w) @ U.T


def _exterior_radial(m, s, r, R):
    """Ratio of the radiating radial function at ``r`` to its value at ``R`` (``r >= R``)."""
    m = abs(int(m))
    if s.real * R > _AXIS_TOL:
        z, zR = s * r, s * R
        return special.kve(m, z) / special.kve(m, zR) * np.exp(-(z - zR))
    kappa = abs(s.imag)
    h = special.hankel1e(m, kappa * r) / special.hankel1e(m, kappa * R)
    h = h * np.exp(1j * kappa * (r - R))
    return np.conj(h) if s.imag > 0 else h


def exterior_eval(boundary_trace, dtn, points):
    """Evaluate the radiating extension of a boundary trace at points with ``|x| > R``.

    Raises
    ------
    DomainError
        If any point lies in the closed disk of radius ``R``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.hypot(pts[:, 0], pts[:, 1])
    if np.any(r <= dtn.R):
        raise DomainError("exterior_eval: points must lie strictly outside the closed disk B_R")
    th = np.arctan2(pts[:, 1], pts[:, 0])
    g = np.asarray(boundary_trace, dtype=complex)
    F = dtn._fourier
    shat = dtn.s * math.sqrt(dtn.p / dtn.c)
    out = np.zeros(len(r), dtype=complex)
    for m in range(dtn.M + 1):
        rad = _exterior_radial(m, shat, r, dtn.R)
        gp = F[m] @ g
        if m == 0:
            out += gp * rad
        else:
            gm = np.conj(F[m]) @ g       # coefficient of e^{-im theta}
            out += rad * (gp * np.exp(1j * m * th) + gm * np.exp(-1j * m * th))
    return out
