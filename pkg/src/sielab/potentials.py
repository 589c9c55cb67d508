r"""Variational single and double layer potentials on a P1 crack mesh.

A :class:`PotentialSetup` fixes an interface :math:`\Gamma` (one or several
circles of a full-disk mesh), a side :math:`G` for every circle, constant
coefficients and the wavenumber.  It owns

* the continuous P1 system ``L`` on the plain mesh (factorised once),
* the crack mesh in which the nodes of :math:`\Gamma` are duplicated, its
  system ``L_c`` and the embedding ``P`` of continuous fields into it,
* the P1 mass matrix ``M`` of the polyline :math:`\Gamma`.

Densities of both kinds are nodal P1 vectors on :math:`\Gamma`; duality is
realised by ``M``.  With ``E`` the extension of interface vectors by zero,

* single layer: :math:`u = L^{-1} E M g`,
* double layer: :math:`u = P w + \ell`, where the lifting :math:`\ell` equals
  :math:`-g` on the ``G``-side copies and vanishes elsewhere, and
  :math:`w = -L^{-1} P^T L_c \ell`.

One-sided Neumann traces are extracted variationally,
:math:`\gamma_N u = M^{-1} (L_c u)|_{\text{side copies}}`, with each side's
outward conormal.  Jumps and averages follow

.. math::

    [v]_D = \gamma_D v - \gamma_D^{ext} v,\quad
    \{v\}_D = \tfrac12(\gamma_D v + \gamma_D^{ext} v),\quad
    [v]_N = \gamma_N v + \gamma_N^{ext} v,\quad
    \{v\}_N = \tfrac12(\gamma_N v - \gamma_N^{ext} v).
"""

from dataclasses import dataclass
import math

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import ConfigurationError, DomainError
from .mesh import make_crack_mesh, interface_tag, TWO_PI
from .fem import (FeSpace, Field, CoefficientField, WaveContext, SystemMatrix,
                  polyline_mass, mass_matrix, edge_conormal_flux, l2_piecewise_constant_vs_p1,
                  element_geometry, QUAD_BARY, QUAD_W)
from .dtn import DtnOperator

INNER, OUTER = "inner", "outer"


def jump_mean(gD, gD_ext, gN, gN_ext):
    """Return ``(jump_D, mean_D, jump_N, mean_N)`` from one-sided traces (both conormals outward)."""
    return (gD - gD_ext, 0.5 * (gD + gD_ext), gN + gN_ext, 0.5 * (gN - gN_ext))


@dataclass(frozen=True)
class Density:
    """Nodal P1 density on an interface; ``kind`` is ``"DIRICHLET"`` or ``"NEUMANN"``."""

    interface: object
    kind: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in ("DIRICHLET", "NEUMANN"):
            raise DomainError("density kind must be DIRICHLET or NEUMANN")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))


class PotentialSetup:
    """Layer potentials for an interface made of circles of a full-disk mesh.

    Parameters
    ----------
    mesh : Mesh
        Mesh of the whole disk ``B_R`` (no holes) resolving the circles.
    circles : sequence of (int, str)
        Interface numbers ``k`` (edge tag ``IFACE:k``) with the side of ``G``
        relative to that circle, ``"inner"`` or ``"outer"``.
    c, p : float
        Constant isotropic coefficients used on all of ``B_R``.
    wave : WaveContext
    M : int, optional
        DtN mode cutoff.
    coeff : CoefficientField, optional
        Region-wise coefficients replacing the constant pair away from the
        side of interest (an alternative extension); the DtN map then uses
        the coefficients of region 0.
    """

    def __init__(self, mesh, circles, c, p, wave, M=None, coeff=None):
        if any(t in ("DIR", "NEU") for t in mesh.edge_tags):
            raise ConfigurationError("potentials need a mesh of the full disk (no obstacle hole)")
        self.mesh = mesh
        self.circles = tuple((int(k), str(side)) for k, side in circles)
        for _, side in self.circles:
            if side not in (INNER, OUTER):
                raise ConfigurationError("circle side must be 'inner' or 'outer'")
        self.c, self.p = float(c), float(p)
        self.wave = wave
        regions = np.unique(mesh.regions).tolist()
        self.coeff = coeff if coeff is not None else CoefficientField.constant(
            self.c, self.p, regions)
        c_ext, p_ext = self.coeff.exterior()
        self.space = FeSpace(mesh, dirichlet_tags=())
        self.dtn = DtnOperator.for_mesh(mesh, wave.s, wave.R, M=M, c=c_ext, p=p_ext)
        self.L = SystemMatrix(self.space, self.coeff, wave, self.dtn)

        ids = [k for k, _ in self.circles]
        self.crack = make_crack_mesh(mesh, ids)
        cm = self.crack.mesh
        self.crack_space = FeSpace(cm, dirichlet_tags=())
        crack_dtn = DtnOperator(s=wave.s, R=wave.R, nodes=self.dtn.nodes, theta=self.dtn.theta,
                                M=self.dtn.M, c=c_ext, p=p_ext)
        self.Lc = SystemMatrix(self.crack_space, self.coeff, wave, crack_dtn)
        n, nc = mesh.n_vertices, cm.n_vertices
        rows = np.arange(nc)
        cols = np.arange(nc)
        for k in ids:
            cols[self.crack.outer[k]] = self.crack.inner[k]
        self.P = sp.csr_matrix((np.ones(nc), (rows, cols)), shape=(nc, n))

        self.nodes = np.concatenate([self.crack.inner[k] for k in ids])      # plain ids on Gamma
        g_side, e_side, blocks, self.segments = [], [], [], []
        start = 0
        for k, side in self.circles:
            inn, out = self.crack.inner[k], self.crack.outer[k]
            g_side.append(inn if side == INNER else out)
            e_side.append(out if side == INNER else inn)
            blocks.append(polyline_mass(mesh.vertices, inn))
            self.segments.append(slice(start, start + len(inn)))
            start += len(inn)
        self.g_copies = np.concatenate(g_side)
        self.e_copies = np.concatenate(e_side)
        self.mass = sp.block_diag(blocks, format="csr")
        self._mass_lu = sla.cho_factor(self.mass.toarray())
        self.n_gamma = len(self.nodes)

    # -- helpers ---------------------------------------------------------------
    @property
    def theta(self):
        xy = self.mesh.vertices[self.nodes]
        return np.mod(np.arctan2(xy[:, 1], xy[:, 0]), TWO_PI)

    def gamma_points(self):
        return self.mesh.vertices[self.nodes]

    def mass_solve(self, r):
        return sla.cho_solve(self._mass_lu, r)

    def _as_matrix(self, g):
        g = np.asarray(g, dtype=complex)
        if g.shape[0] != self.n_gamma:
            raise DomainError(f"density length {g.shape[0]} != interface node count {self.n_gamma}")
        return g.reshape(self.n_gamma, -1), g.ndim == 1

    # -- potentials -------------------------------------------------------------
    def combined(self, gD, gN):
        r"""Crack-mesh field :math:`\mathcal S g_N - \mathcal D g_D` (one solve per column)."""
        gD, vec = self._as_matrix(gD)
        gN, _ = self._as_matrix(gN)
        nc = self.crack.mesh.n_vertices
        lift = np.zeros((nc, gD.shape[1]), dtype=complex)
        lift[self.g_copies] = gD
        rhs = self.P.T @ (-self.Lc.matvec(lift))
        rhs[self.nodes] += self.mass @ gN
        w = self.L.solve(rhs)
        u = self.P @ w + lift
        return u[:, 0] if vec else u

    def single_layer(self, gN):
        """Route A: plain-mesh field :math:`L^{-1} E M g_N`."""
        gN, vec = self._as_matrix(gN)
        rhs = np.zeros((self.mesh.n_vertices, gN.shape[1]), dtype=complex)
        rhs[self.nodes] = self.mass @ gN
        u = self.L.solve(rhs)
        return u[:, 0] if vec else u

    def single_layer_jump(self, gN):
        """Route B: crack-mesh solve with paired interface DOFs tied.

        The tied system ``P^T L_c P`` is assembled from the crack-mesh matrices
        and factorised independently of route A; the Neumann datum enters as
        the interface functional on the ``G``-side copies.
        """
        gN, vec = self._as_matrix(gN)
        if not hasattr(self, "_tied"):
            self._tied = self.Lc.congruence(self.P, self.space)
        rc = np.zeros((self.crack.mesh.n_vertices, gN.shape[1]), dtype=complex)
        rc[self.g_copies] = self.mass @ gN
        w = self._tied.solve(self.P.T @ rc)
        u = self.P @ w
        return u[:, 0] if vec else u

    def double_layer(self, gD):
        r"""Crack-mesh field :math:`\mathcal D g_D` with Dirichlet jump :math:`-g_D` at the nodes."""
        gD, vec = self._as_matrix(gD)
        u = self.combined(-gD, np.zeros_like(gD))
        return u[:, 0] if vec else u

    def embed(self, u_plain):
        return self.P @ u_plain

    # -- traces -------------------------------------------------------------------
    def one_sided_traces(self, u):
        """``(gD, gD_ext, gN, gN_ext)`` of a crack-mesh field (variational Neumann traces)."""
        u = np.asarray(u)
        r = self.Lc.matvec(u)
        gN = self.mass_solve(r[self.g_copies])
        gN_ext = self.mass_solve(r[self.e_copies])
        return u[self.g_copies], u[self.e_copies], gN, gN_ext

    def jumps(self, u):
        """``([u]_D, [u]_N)`` of a crack-mesh field."""
        d, de, n, ne = self.one_sided_traces(u)
        return d - de, n + ne

    def means(self, u):
        """``({u}_D, {u}_N)`` of a crack-mesh field."""
        d, de, n, ne = self.one_sided_traces(u)
        return 0.5 * (d + de), 0.5 * (n - ne)

    def _side_outward(self, side):
        sgn = 1.0 if side == INNER else -1.0
        return lambda x: sgn * x

    def element_neumann_jump_error(self, u, g):
        r"""L2 distance between the element-wise conormal flux jump and a P1 density.

        The flux on each side is :math:`A_T\nabla u_h\cdot n` of the triangle
        adjacent to the interface edge, with the outward normal of that side.
        """
        cm = self.crack.mesh
        g = np.asarray(g, dtype=complex)
        total = 0.0
        for (k, side), seg in zip(self.circles, self.segments):
            inn, out = self.crack.inner[k], self.crack.outer[k]
            ei = np.column_stack([inn, np.roll(inn, -1)])
            eo = np.column_stack([out, np.roll(out, -1)])
            q_in = edge_conormal_flux(cm, u, self.coeff, ei, lambda x: x)
            q_out = edge_conormal_flux(cm, u, self.coeff, eo, lambda x: -x)
            jump = q_in + q_out            # the jump is symmetric in the two sides
            total += l2_piecewise_constant_vs_p1(self.mesh.vertices, inn, jump, g[seg]) ** 2
        return math.sqrt(total)

    def element_neumann_jump(self, u):
        """Element-flux Neumann jump projected onto P1 densities (L2 projection)."""
        cm = self.crack.mesh
        out_vals = []
        for (k, side), seg in zip(self.circles, self.segments):
            inn, out = self.crack.inner[k], self.crack.outer[k]
            ei = np.column_stack([inn, np.roll(inn, -1)])
            eo = np.column_stack([out, np.roll(out, -1)])
            q = (edge_conormal_flux(cm, u, self.coeff, ei, lambda x: x)
                 + edge_conormal_flux(cm, u, self.coeff, eo, lambda x: -x))
            xy = self.mesh.vertices[inn]
            L = np.hypot(*(np.roll(xy, -1, axis=0) - xy).T)
            out_vals.append(0.5 * (L * q + np.roll(L * q, 1)))
        return self.mass_solve(np.concatenate(out_vals))

    def l2_norm(self, u):
        """L2 norm of a crack-mesh field over ``B_R``."""
        u = np.asarray(u)
        if not hasattr(self, "_mass_c"):
            self._mass_c = mass_matrix(self.crack.mesh)
        return math.sqrt(max(float(np.real(np.conj(u) @ (self._mass_c @ u))), 0.0))

    def weighted_l2_sq(self, u):
        r""":math:`\int_{B_R} p|u|^2` of a crack-mesh field."""
        u = np.asarray(u)
        return max(float(np.real(np.conj(u) @ (self.Lc.Mp @ u))), 0.0)

    def gamma_l2(self, g):
        g = np.asarray(g)
        return math.sqrt(max(float(np.real(np.conj(g) @ (self.mass @ g))), 0.0))


# ---------------------------------------------------------------------------
# named operations
# ---------------------------------------------------------------------------

def single_layer_variational(g, setup):
    """Single layer potential as a plain-mesh :class:`~sielab.fem.Field`."""
    return Field(setup.space, setup.single_layer(_values(g)))


def single_layer_jump(g, setup):
    """Single layer potential on the crack mesh via the tied jump system."""
    return Field(setup.crack_space, setup.single_layer_jump(_values(g)))


def double_layer(g, setup):
    """Double layer potential on the crack mesh."""
    return Field(setup.crack_space, setup.double_layer(_values(g)))


def green_reconstruct(u, setup, flux="variational"):
    r"""Recombine :math:`\mathcal S[u]_N - \mathcal D[u]_D` from the discrete jumps of ``u``.

    ``flux="element"`` uses the element-wise conormal flux jump (L2-projected)
    instead of the variational Neumann jump.
    """
    vals = u.values if isinstance(u, Field) else np.asarray(u)
    jD, jN = setup.jumps(vals)
    if flux == "element":
        jN = setup.element_neumann_jump(vals)
    elif flux != "variational":
        raise DomainError("flux must be 'variational' or 'element'")
    return Field(setup.crack_space, setup.combined(jD, jN))


def _values(g):
    return g.values if isinstance(g, Density) else np.asarray(g, dtype=complex)


# ---------------------------------------------------------------------------
# ultraweak identity
# ---------------------------------------------------------------------------

class BumpWave:
    r"""Smooth compactly supported test function :math:`w = b(|x|)\sum_l a_l e^{i k_l\cdot x}`.

    ``b(r) = (1 - r^2/\rho^2)^4`` for ``r < rho`` and 0 otherwise (C^3), so
    :math:`w \in V(B_R)` whenever ``rho < R``.  Values, gradients and the
    Laplacian are evaluated in closed form.
    """

    def __init__(self, rho, amplitudes, wavevectors):
        self.rho = float(rho)
        self.a = np.asarray(amplitudes, dtype=complex)
        self.k = np.asarray(wavevectors, dtype=float).reshape(-1, 2)

    @classmethod
    def random(cls, rng, rho, n_waves=3, k_max=3.0):
        a = rng.standard_normal(n_waves) + 1j * rng.standard_normal(n_waves)
        ang = rng.uniform(0, TWO_PI, n_waves)
        mag = rng.uniform(0, k_max, n_waves)
        return cls(rho, a, np.column_stack([mag * np.cos(ang), mag * np.sin(ang)]))

    def _parts(self, x):
        x = np.atleast_2d(x)
        r2 = (x ** 2).sum(1)
        rho2 = self.rho ** 2
        t = np.clip(1.0 - r2 / rho2, 0.0, None)
        b = t ** 4
        gb = (-8.0 * t ** 3 / rho2)[:, None] * x
        lb = (48.0 * t ** 2 * r2 / rho2 - 16.0 * t ** 3) / rho2
        ph = np.exp(1j * x @ self.k.T)                     # (n, nw)
        e = ph @ self.a
        ge = (ph * self.a) @ (1j * self.k)                 # (n, 2)
        le = -(ph * self.a) @ (self.k ** 2).sum(1)
        return b, gb, lb, e, ge, le

    def value(self, x):
        b, _, _, e, _, _ = self._parts(x)
        return b * e

    def gradient(self, x):
        b, gb, _, e, ge, _ = self._parts(x)
        return gb * e[:, None] + b[:, None] * ge

    def laplacian(self, x):
        b, gb, lb, e, ge, le = self._parts(x)
        return lb * e + 2 * (gb * ge).sum(1) + b * le


def ultraweak_residual(g, u, setup, trial_count=5, seed=0, tests=None):
    r"""Defect of the ultraweak identity :math:`\langle u, \mathcal L w\rangle = \langle g, \gamma_N^G w\rangle`.

    For ``trial_count`` random :class:`BumpWave` functions ``w`` (supported in
    ``B_R``), with :math:`\mathcal L w = -c\Delta w + s^2 p w` evaluated exactly,
    returns the largest relative defect

    .. math::

        \frac{|\int_{B_R} u\,\mathcal L w - \int_\Gamma g\,c\,\partial_{\nu_G} w|}
             {\|u\|\,\|\mathcal L w\| + \|g\|_\Gamma\|c\,\partial_{\nu_G}w\|_\Gamma}.

    Volume integrals use a degree-4 rule on the crack mesh, interface
    integrals a 4-point Gauss rule on each polygon edge with its own normal.
    """
    uvals = u.values if isinstance(u, Field) else np.asarray(u)
    g = _values(g)
    if tests is None:
        rng = np.random.default_rng(seed)
        r_gamma = max(np.hypot(*setup.mesh.vertices[setup.nodes].T))
        rho = 0.5 * (r_gamma + setup.wave.R) if r_gamma < setup.wave.R else setup.wave.R
        rho = min(rho, 0.95 * setup.wave.R)
        tests = [BumpWave.random(rng, rho) for _ in range(trial_count)]
    cm = setup.crack.mesh
    area, _ = element_geometry(cm)
    Pts = cm.vertices[cm.triangles]
    s2 = setup.wave.s ** 2
    gl_x, gl_w = np.polynomial.legendre.leggauss(4)
    gl_t = 0.5 * (gl_x + 1.0)
    gl_w = 0.5 * gl_w
    worst = 0.0
    for w in tests:
        vol = 0j
        nu2 = nLw2 = 0.0
        for q, wq in zip(QUAD_BARY, QUAD_W):
            xq = np.einsum("k,tkd->td", q, Pts)
            Lw = -setup.c * w.laplacian(xq) + s2 * setup.p * w.value(xq)
            uq = uvals[cm.triangles] @ q
            vol += np.sum(wq * area * uq * Lw)
            nu2 += np.sum(wq * area * np.abs(uq) ** 2)
            nLw2 += np.sum(wq * area * np.abs(Lw) ** 2)
        bnd = 0j
        ng2 = nflux2 = 0.0
        for (k, side), seg in zip(setup.circles, setup.segments):
            nodes = setup.crack.inner[k]
            gv = g[seg]
            a, b = cm.vertices[nodes], cm.vertices[np.roll(nodes, -1)]
            ga, gb = gv, np.roll(gv, -1)
            e = b - a
            L = np.hypot(e[:, 0], e[:, 1])
            n = np.column_stack([e[:, 1], -e[:, 0]]) / L[:, None]
            mid = 0.5 * (a + b)
            n *= np.sign((n * mid).sum(1))[:, None] * (1.0 if side == INNER else -1.0)
            for t, wt in zip(gl_t, gl_w):
                x = a + t * e
                gx = (1 - t) * ga + t * gb
                flux = setup.c * (w.gradient(x) * n).sum(1)
                bnd += np.sum(wt * L * gx * flux)
                ng2 += np.sum(wt * L * np.abs(gx) ** 2)
                nflux2 += np.sum(wt * L * np.abs(flux) ** 2)
        scale = math.sqrt(nu2 * nLw2) + math.sqrt(ng2 * nflux2)
        if scale == 0:
            continue
        worst = max(worst, abs(vol - bnd) / scale)
    return worst
