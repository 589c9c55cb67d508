r"""Boundary operators and the Calderón operator of one interface.

For Cauchy data :math:`g = (g_D, g_N)` on :math:`\Gamma` and the combined
potential :math:`u = \mathcal S g_N - \mathcal D g_D`,

.. math::

    \mathcal C g = (\{u\}_D, \{u\}_N),\qquad
    \mathcal C = \begin{pmatrix} -K & V \\ -W & K' \end{pmatrix},

with :math:`V = \{\mathcal S\cdot\}_D`, :math:`K = \{\mathcal D\cdot\}_D`,
:math:`K' = \{\mathcal S\cdot\}_N` and :math:`W = \{\mathcal D\cdot\}_N`.
Since the jumps of ``u`` are ``g``, :math:`(\mathcal C + \tfrac12)g` are the
Cauchy traces of ``u`` from the side ``G`` and :math:`(\mathcal C - \tfrac12)g`
those from the other side (Neumann trace with reversed sign).

The pairing on :math:`X(\Gamma) = H^{1/2}\times H^{-1/2}` is the bilinear form
:math:`\langle g, h\rangle = \langle g_D, h_N\rangle_\Gamma + \langle h_D, g_N\rangle_\Gamma`.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .potentials import Density, PotentialSetup, INNER
from . import analytic

CHUNK = 100


@dataclass(frozen=True)
class CauchyData:
    """Dirichlet and Neumann P1 densities on one interface."""

    interface: object
    g_D: np.ndarray
    g_N: np.ndarray

    def __post_init__(self):
        gD = self.g_D.values if isinstance(self.g_D, Density) else self.g_D
        gN = self.g_N.values if isinstance(self.g_N, Density) else self.g_N
        gD = np.asarray(gD, dtype=complex)
        gN = np.asarray(gN, dtype=complex)
        if gD.shape != gN.shape:
            raise DomainError("Dirichlet and Neumann densities must live on the same interface")
        object.__setattr__(self, "g_D", gD)
        object.__setattr__(self, "g_N", gN)

    @classmethod
    def from_stacked(cls, interface, x):
        x = np.asarray(x, dtype=complex)
        n = x.shape[0] // 2
        return cls(interface, x[:n], x[n:])

    @property
    def stacked(self):
        return np.concatenate([self.g_D, self.g_N])

    def __add__(self, other):
        _same(self, other)
        return CauchyData(self.interface, self.g_D + other.g_D, self.g_N + other.g_N)

    def __sub__(self, other):
        _same(self, other)
        return CauchyData(self.interface, self.g_D - other.g_D, self.g_N - other.g_N)

    def __mul__(self, a):
        return CauchyData(self.interface, a * self.g_D, a * self.g_N)

    __rmul__ = __mul__

    def conj(self):
        return CauchyData(self.interface, np.conj(self.g_D), np.conj(self.g_N))


def _same(g, h):
    if g.interface != h.interface or g.g_D.shape != h.g_D.shape:
        raise DomainError("Cauchy data live on different interfaces")


# ---------------------------------------------------------------------------
# matrix-free application
# ---------------------------------------------------------------------------

def apply_calderon(g, setup):
    """:math:`\\mathcal C g` by one potential solve (``g`` may carry several columns)."""
    gD, gN = (g.g_D, g.g_N) if isinstance(g, CauchyData) else g
    u = setup.combined(gD, gN)
    return setup.means(u)


def apply_V(gN, setup):
    """Single layer operator :math:`V g_N = \\{\\mathcal S g_N\\}_D`."""
    return setup.means(setup.combined(np.zeros_like(_arr(gN)), _arr(gN)))[0]


def apply_K(gD, setup):
    """Double layer operator :math:`K g_D = \\{\\mathcal D g_D\\}_D`."""
    return setup.means(setup.double_layer(_arr(gD)))[0]


def apply_Kdual(gN, setup):
    """Adjoint double layer operator :math:`K' g_N = \\{\\mathcal S g_N\\}_N`."""
    return setup.means(setup.combined(np.zeros_like(_arr(gN)), _arr(gN)))[1]


def apply_W(gD, setup):
    """Hypersingular operator :math:`W g_D = \\{\\mathcal D g_D\\}_N`."""
    return setup.means(setup.double_layer(_arr(gD)))[1]


def _arr(g):
    return g.values if isinstance(g, Density) else np.asarray(g, dtype=complex)


# ---------------------------------------------------------------------------
# assembled operator
# ---------------------------------------------------------------------------

class CalderonMatrix:
    """Dense :math:`\\mathcal C` on stacked nodal vectors ``(g_D, g_N)``.

    Attributes
    ----------
    V, K, Kdual, W : (n, n) complex arrays
    matrix : (2n, 2n) complex array
    setup : PotentialSetup
    """

    def __init__(self, interface, setup, V, K, Kdual, W):
        self.interface = interface
        self.setup = setup
        self.V, self.K, self.Kdual, self.W = V, K, Kdual, W
        self.matrix = np.block([[-K, V], [-W, Kdual]])
        self.matrix.setflags(write=False)

    @property
    def n(self):
        return self.V.shape[0]

    def apply(self, g):
        """Apply to :class:`CauchyData` or a stacked vector."""
        if isinstance(g, CauchyData):
            return CauchyData.from_stacked(g.interface, self.matrix @ g.stacked)
        return self.matrix @ np.asarray(g)

    def projector_defect(self):
        """Dense :math:`\\mathcal C^2 - \\tfrac14`."""
        return self.matrix @ self.matrix - 0.25 * np.eye(2 * self.n)


def assemble_calderon(j, setup, chunk=CHUNK):
    """Assemble :math:`\\mathcal C` for interface ``j`` column by column.

    Each block of at most ``chunk`` basis densities costs one multi-column
    solve with the cached factorisation of ``setup``.
    """
    n = setup.n_gamma
    V = np.empty((n, n), dtype=complex)
    K = np.empty((n, n), dtype=complex)
    Kd = np.empty((n, n), dtype=complex)
    W = np.empty((n, n), dtype=complex)
    for start in range(0, n, chunk):
        cols = slice(start, min(start + chunk, n))
        E = np.zeros((n, cols.stop - cols.start), dtype=complex)
        E[np.arange(cols.start, cols.stop), np.arange(E.shape[1])] = 1.0
        Z = np.zeros_like(E)
        mD, mN = setup.means(setup.combined(Z, E))     # u = S e
        V[:, cols], Kd[:, cols] = mD, mN
        mD, mN = setup.means(setup.combined(-E, Z))    # u = D e
        K[:, cols], W[:, cols] = mD, mN
    return CalderonMatrix(j, setup, V, K, Kd, W)


# ---------------------------------------------------------------------------
# pairing, residuals, Garding functional
# ---------------------------------------------------------------------------

def dual_pairing(g, h, mass):
    """Bilinear pairing :math:`\\langle g_D, h_N\\rangle + \\langle h_D, g_N\\rangle`.

    ``mass`` is the interface mass matrix or a :class:`PotentialSetup`.
    """
    _same(g, h)
    M = mass.mass if isinstance(mass, PotentialSetup) else mass
    return complex(g.g_D @ (M @ h.g_N) + h.g_D @ (M @ g.g_N))


def calderon_projector_residual(g, cmat, norm_ctx):
    r""":math:`\|(\mathcal C^2 - \tfrac14)g\|_X / \|g\|_X` with the computable trace norms."""
    from .trace_norms import x_norm
    x = g.stacked if isinstance(g, CauchyData) else np.asarray(g)
    n = cmat.n
    ng = x_norm((x[:n], x[n:]), norm_ctx)
    if ng == 0:
        return 0.0
    r = cmat.matrix @ (cmat.matrix @ x) - 0.25 * x
    return x_norm((r[:n], r[n:]), norm_ctx) / ng


def garding_functional(g, setup, cmat=None):
    r"""Return :math:`\operatorname{Re}\langle(\mathcal C + T(s))g, \bar g\rangle`.

    The compact correction is
    :math:`\langle T(s)g, \bar g\rangle = 2|s|^2\int_{B_R} p\,|u|^2` for the
    combined potential ``u`` of ``g``.
    """
    u = setup.combined(g.g_D, g.g_N)
    Cg = cmat.apply(g) if cmat is not None else CauchyData(g.interface, *setup.means(u))
    val = dual_pairing(Cg, g.conj(), setup)
    s2 = abs(setup.wave.s) ** 2
    return float(val.real + 2.0 * s2 * setup.weighted_l2_sq(u))


def fourier_offdiagonal(cmat, modes):
    """Relative off-diagonal mass of :math:`\\mathcal C` in the Fourier basis.

    Densities ``e^{im theta}`` (``|m| <= modes``) are interpolated, mapped by
    ``C`` and projected back with the L2 projection; the result is the
    largest ratio of off-diagonal to diagonal coupling over all four blocks.
    """
    setup = cmat.setup
    th = setup.theta
    ms = np.arange(-modes, modes + 1)
    E = np.exp(1j * np.outer(th, ms))
    M = setup.mass
    G = np.conj(E).T @ (M @ E)                 # Gram matrix of the sampled modes
    worst = 0.0
    n = cmat.n
    for bi in range(2):
        for bj in range(2):
            B = cmat.matrix[bi * n:(bi + 1) * n, bj * n:(bj + 1) * n]
            F = np.linalg.solve(G, np.conj(E).T @ (M @ (B @ E)))
            d = np.abs(np.diag(F))
            off = np.abs(F - np.diag(np.diag(F))).max(axis=0)
            scale = max(d.max(), 1e-300)
            worst = max(worst, float(off.max() / scale))
    return worst


# ---------------------------------------------------------------------------
# continuum symbol for one circle (constant coefficients)
# ---------------------------------------------------------------------------

def calderon_symbol(m, s, radius, c=1.0, p=1.0, side=INNER, R=None):
    r"""2x2 Fourier symbol of :math:`\mathcal C` for a circle in free space.

    Mode ``m`` of ``(g_D, g_N)`` is mapped to mode ``m`` of the averages.  The
    combined potential solves the constant-coefficient problem in the whole
    plane, which is what the DtN truncation reproduces exactly.
    """
    R = 2.0 * radius if R is None else R
    prob = analytic.RadialProblem(s, max(R, radius), (radius,), (c, c), (p, p))
    sign = 1.0 if side == INNER else -1.0
    pt = np.array([[radius, 0.0]])
    out = np.empty((2, 2), dtype=complex)
    for col, (gD, gN) in enumerate([(1.0, 0.0), (0.0, 1.0)]):
        # [u]_D = g_D and [u]_N = g_N in inner-minus-outer form
        coeffs = analytic.mie_solve_mode(prob, m, jumps={0: (sign * gD, gN)})
        sol = analytic.MieSolution(prob, {m: coeffs})
        ui, uo = sol.value(pt, region=1)[0], sol.value(pt, region=0)[0]
        di, do = sol.radial_derivative(pt, 1)[0], sol.radial_derivative(pt, 0)[0]
        out[0, col] = 0.5 * (ui + uo)
        out[1, col] = 0.5 * sign * c * (di + do)
    return out


__all__ = ["CauchyData", "CalderonMatrix", "apply_calderon", "apply_V", "apply_K",
           "apply_Kdual", "apply_W", "assemble_calderon", "dual_pairing",
           "calderon_projector_residual", "garding_functional", "fourier_offdiagonal",
           "calderon_symbol"]
