r"""Transmission problem on concentric layers: direct solve and skeleton formulations.

The layers are numbered from the outside: region 0 touches the truncation
circle, region ``J`` is the innermost disk or the annulus around the
obstacle.  Interface ``k`` (ascending radius) separates its inner region
``J - k`` from its outer region ``J - k - 1``.  The boundary
:math:`\Gamma_j = \partial\Omega_j \setminus S_R` consists of

* ``j = 0``: interface ``J - 1`` (or the obstacle circle if ``J = 0``),
* ``1 <= j < J``: interfaces ``J - j`` and ``J - j - 1``,
* ``j = J``: interface ``0`` and, if present, the obstacle circle.

Cauchy data on :math:`\Gamma_j` are taken with the outward conormal of
:math:`\Omega_j`.  The potentials of :math:`\Gamma_j` live on the background
mesh of the whole disk with the constant pair ``(c_j, p_j)`` (the default
extension); ``G`` is :math:`\Omega_j` itself.

A multi-trace ``u`` is a solution of the transmission problem with data
``g`` iff :math:`(\mathcal C_j - \tfrac12) u_j = 0` for all ``j`` and
:math:`u - g \in X_0(\Sigma)`, the single-trace space: equal Dirichlet and
opposite Neumann traces on every interface, :math:`u_D = 0` on
:math:`\Gamma_D` and :math:`u_N = 0` on :math:`\Gamma_N`.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .errors import ConfigurationError, SolverError, DomainError
from .mesh import build_background_mesh, strip_obstacle, make_crack_mesh, interface_tag
from .fem import (CoefficientField, FeSpace, SystemMatrix, WaveContext, assemble_l,
                  polyline_mass, locate_and_interpolate)
from .dtn import DtnOperator
from .potentials import PotentialSetup, INNER, OUTER
from .trace_norms import NormContext, submesh
from .calderon import CauchyData, assemble_calderon, garding_functional

NEAR_KERNEL = 1e-10


# ---------------------------------------------------------------------------
# skeleton
# ---------------------------------------------------------------------------

class Skeleton:
    """Interfaces, layer coefficients and the single-trace injection.

    Parameters
    ----------
    spec : GeometrySpec
    c, p : sequence of float
        Isotropic coefficients ``A_j = c_j I`` and ``p_j`` for regions ``0..J``.
    wave : WaveContext
    target_h : float, optional
        Mesh size; ignored if ``background`` is given.
    background : Mesh, optional
        Mesh of the whole disk from :func:`~sielab.mesh.build_background_mesh`
        (possibly refined).
    M : int, optional
        DtN mode cutoff.
    extensions : dict, optional
        ``j -> CoefficientField`` on the background regions, replacing the
        constant extension of ``(c_j, p_j)`` for the potentials of
        :math:`\\Gamma_j`; it must agree with ``(c_j, p_j)`` on region ``j``.
    """

    def __init__(self, spec, c, p, wave, target_h=None, background=None, M=None,
                 extensions=None):
        self.spec = spec
        self.J = J = len(spec.interface_radii)
        if len(c) != J + 1 or len(p) != J + 1:
            raise ConfigurationError("need one coefficient pair (c_j, p_j) per region")
        self.c = tuple(float(x) for x in c)
        self.p = tuple(float(x) for x in p)
        self.coeff = CoefficientField.isotropic(self.c, self.p)
        if abs(wave.R - spec.R) > 1e-14 * spec.R:
            raise ConfigurationError("wave context and geometry disagree on R")
        self.wave = wave
        self.M = M
        if background is None:
            if target_h is None:
                raise ConfigurationError("either target_h or a background mesh is required")
            background = build_background_mesh(spec, target_h)
        self.background = background
        self.mesh = strip_obstacle(background, spec)
        self.obstacle = spec.obstacle
        if J == 0 and self.obstacle is None:
            raise ConfigurationError("the skeleton is empty: no interface and no obstacle")
        tree = cKDTree(self.mesh.vertices)
        d, idx = tree.query(background.vertices)
        self.bg_to_phys = np.where(d < 1e-12 * spec.R, idx, -1)

        self.circles = []
        for j in range(J + 1):
            cj = []
            if j >= 1:
                cj.append((J - j, INNER))
            if j < J:
                cj.append((J - j - 1, OUTER))
            elif self.obstacle is not None:
                cj.append((J, OUTER))
            self.circles.append(cj)
        extensions = extensions or {}
        for j, ext in extensions.items():
            if abs(ext.A[j][0, 0] - self.c[j]) > 1e-14 or abs(ext.p[j] - self.p[j]) > 1e-14:
                raise ConfigurationError(f"extension for region {j} must agree with (c_j, p_j)")
        self.setups = [PotentialSetup(background, self.circles[j], self.c[j], self.p[j], wave,
                                      M=M, coeff=extensions.get(j))
                       for j in range(J + 1)]
        self.sizes = [s.n_gamma for s in self.setups]
        self.offsets = np.concatenate([[0], np.cumsum([2 * n for n in self.sizes])])
        self._norms = None
        self._build_injection()

    # -- layout ------------------------------------------------------------------
    @property
    def n_multi(self):
        return int(self.offsets[-1])

    def region_side_mesh(self, j):
        """Bounded side domain used by the trace norms of :math:`\\Gamma_j`."""
        bg = self.background
        return submesh(bg, bg.regions >= 1 if j == 0 else bg.regions == j)

    @property
    def norm_contexts(self):
        if self._norms is None:
            self._norms = [NormContext(self.region_side_mesh(j),
                                       [s.gamma_points()[seg] for seg in s.segments], self.wave)
                           for j, s in enumerate(self.setups)]
        return self._norms

    def circle_nodes(self, k):
        """Background ids of circle ``k`` ordered by angle."""
        return self.background.tag_nodes(interface_tag(k))

    def obstacle_node_kinds(self):
        """Boolean mask over the obstacle-circle nodes: True where the node is Dirichlet."""
        J = self.J
        nodes = self.circle_nodes(J)
        edges = self.background.tag_edges(interface_tag(J))
        xy = self.background.vertices
        mid = 0.5 * (xy[edges[:, 0]] + xy[edges[:, 1]])
        is_dir = self.obstacle.kind_at(np.arctan2(mid[:, 1], mid[:, 0])) == "DIR"
        dir_nodes = np.unique(edges[is_dir])
        return np.isin(nodes, dir_nodes)

    def _build_injection(self):
        J = self.J
        cols = 0
        self.trace_dofs = {}        # k -> (tD column ids per node or -1, tN column ids or -1)
        for k in range(J):
            n = len(self.circle_nodes(k))
            self.trace_dofs[k] = (np.arange(cols, cols + n), np.arange(cols + n, cols + 2 * n))
            cols += 2 * n
        if self.obstacle is not None:
            is_dir = self.obstacle_node_kinds()
            tD = -np.ones(len(is_dir), dtype=np.int64)
            tN = -np.ones(len(is_dir), dtype=np.int64)
            nd = int(np.count_nonzero(~is_dir))
            tD[~is_dir] = np.arange(cols, cols + nd)
            cols += nd
            nn = int(np.count_nonzero(is_dir))
            tN[is_dir] = np.arange(cols, cols + nn)
            cols += nn
            self.trace_dofs[J] = (tD, tN)
        rows, cc, vals = [], [], []
        for j, setup in enumerate(self.setups):
            off, n = self.offsets[j], self.sizes[j]
            for (k, side), seg in zip(self.circles[j], setup.segments):
                tD, tN = self.trace_dofs[k]
                idx = np.arange(seg.start, seg.stop)
                sgn = 1.0 if (k == J and self.obstacle is not None) or side == INNER else -1.0
                m = tD >= 0
                rows.append(off + idx[m]); cc.append(tD[m]); vals.append(np.ones(m.sum()))
                m = tN >= 0
                rows.append(off + n + idx[m]); cc.append(tN[m]); vals.append(sgn * np.ones(m.sum()))
        self.n_single = cols
        self.Q = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cc))),
                               shape=(self.n_multi, cols))

    # -- multi-trace helpers ------------------------------------------------------
    def zero(self):
        return MultiTrace(tuple(CauchyData(j, np.zeros(n), np.zeros(n))
                                for j, n in enumerate(self.sizes)))

    def from_stacked(self, x):
        x = np.asarray(x, dtype=complex)
        return MultiTrace(tuple(CauchyData.from_stacked(j, x[self.offsets[j]:self.offsets[j + 1]])
                                for j in range(self.J + 1)))

    def inject(self, t):
        """Multi-trace of a single-trace vector."""
        return self.from_stacked(self.Q @ np.asarray(t, dtype=complex))

    def single_trace_defect(self, u):
        """Distance of a multi-trace from the single-trace space (least squares, l2)."""
        x = u.stacked
        t = np.linalg.lstsq(self.Q.toarray(), x, rcond=None)[0]
        return float(np.linalg.norm(self.Q @ t - x))

    def multitrace_from_functions(self, fn):
        """Build a multi-trace from ``fn(j, points) -> (u, c_j du/dr)`` per region.

        The Dirichlet part is ``u`` and the Neumann part the outward conormal
        derivative of :math:`\\Omega_j` (``+`` on its outer, ``-`` on its inner circle).
        """
        data = []
        for j, setup in enumerate(self.setups):
            pts = setup.gamma_points()
            u, du = fn(j, pts)
            gN = np.empty(len(pts), dtype=complex)
            for (k, side), seg in zip(self.circles[j], setup.segments):
                gN[seg] = du[seg] if side == INNER else -du[seg]
            data.append(CauchyData(j, np.asarray(u, dtype=complex), gN))
        return MultiTrace(tuple(data))


@dataclass(frozen=True)
class MultiTrace:
    """Cauchy data on every :math:`\\Gamma_j`, ``j = 0..J``."""

    data: tuple

    @property
    def stacked(self):
        return np.concatenate([d.stacked for d in self.data])

    def __getitem__(self, j):
        return self.data[j]

    def __len__(self):
        return len(self.data)

    def __add__(self, other):
        return MultiTrace(tuple(a + b for a, b in zip(self.data, other.data)))

    def __sub__(self, other):
        return MultiTrace(tuple(a - b for a, b in zip(self.data, other.data)))

    def __mul__(self, a):
        return MultiTrace(tuple(a * d for d in self.data))

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# direct finite element solve
# ---------------------------------------------------------------------------

def _edge_mass(vertices, edges, n):
    """P1 mass matrix of a set of straight edges (global node numbering)."""
    a, b = edges[:, 0], edges[:, 1]
    L = np.hypot(*(vertices[b] - vertices[a]).T)
    rows = np.concatenate([a, a, b, b])
    cols = np.concatenate([a, b, a, b])
    vals = np.concatenate([L / 3, L / 6, L / 6, L / 3])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


@dataclass(eq=False)
class DirectSolution:
    """Crack-mesh field of the direct solve and its Cauchy traces."""

    skeleton: object
    crack: object
    space: FeSpace
    values: np.ndarray
    system: SystemMatrix

    def cauchy_traces(self):
        """Multi-trace of the discrete solution (variational conormal fluxes)."""
        sk = self.skeleton
        r = self.system.matvec(self.values)
        out = []
        for j, setup in enumerate(sk.setups):
            gD = np.empty(setup.n_gamma, dtype=complex)
            gN = np.empty(setup.n_gamma, dtype=complex)
            for (k, side), seg in zip(sk.circles[j], setup.segments):
                if k == sk.J:                       # obstacle circle
                    ids = sk.bg_to_phys[sk.circle_nodes(k)]
                else:
                    ids = self.crack.outer[k] if side == OUTER else self.crack.inner[k]
                M = polyline_mass(self.crack.mesh.vertices, ids)
                gD[seg] = self.values[ids]
                gN[seg] = sla.solve(M.toarray(), r[ids], assume_a="pos")
            out.append(CauchyData(j, gD, gN))
        return MultiTrace(tuple(out))


def direct_solve(skeleton, g):
    """Finite element solution of the transmission problem with data ``g``.

    Dirichlet jumps are imposed at the nodes of a crack mesh, Neumann jumps
    and obstacle Neumann data enter as interface functionals, Dirichlet
    obstacle data are imposed at the nodes and the DtN map closes the problem
    at ``R``.

    Raises
    ------
    SolverError
        If the discrete system is numerically singular.
    """
    sk = skeleton
    J = sk.J
    pm = sk.mesh
    if J:
        crack = make_crack_mesh(pm, list(range(J)))
        cm = crack.mesh
    else:
        crack = _TrivialCrack(pm)
        cm = pm
    n, nc = pm.n_vertices, cm.n_vertices
    cols = np.arange(nc)
    for k in range(J):
        cols[crack.outer[k]] = crack.inner[k]
    P = sp.csr_matrix((np.ones(nc), (np.arange(nc), cols)), shape=(nc, n))
    plain_space = FeSpace(pm, dirichlet_tags=("DIR",))
    L = assemble_l(plain_space, sk.coeff, sk.wave, M=sk.M)
    crack_space = FeSpace(cm, dirichlet_tags=("DIR",))
    c0, p0 = sk.coeff.exterior()
    cdtn = DtnOperator(s=sk.wave.s, R=sk.wave.R, nodes=L.dtn.nodes, theta=L.dtn.theta,
                       M=L.dtn.M, c=c0, p=p0)
    Lc = SystemMatrix(crack_space, sk.coeff, sk.wave, cdtn)

    lift = np.zeros(nc, dtype=complex)
    rhs_c = np.zeros(nc, dtype=complex)
    for k in range(J):
        a_reg, b_reg = J - k, J - k - 1
        ga, gb = _circle_data(sk, g, a_reg, k), _circle_data(sk, g, b_reg, k)
        ids = crack.inner[k]
        if not np.array_equal(ids, sk.bg_to_phys[sk.circle_nodes(k)]):
            raise ConfigurationError("interface node ordering mismatch")
        lift[ids] = ga[0] - gb[0]
        rhs_c[ids] += polyline_mass(pm.vertices, ids) @ (ga[1] + gb[1])
    dirichlet = None
    if sk.obstacle is not None:
        gD, gN = _circle_data(sk, g, J, J)
        ids = sk.bg_to_phys[sk.circle_nodes(J)]
        full_D = np.zeros(n, dtype=complex)
        full_D[ids] = gD
        full_N = np.zeros(n, dtype=complex)
        full_N[ids] = gN
        neu = pm.tag_edges("NEU")
        if len(neu):
            rhs_c[:n] += _edge_mass(pm.vertices, neu, n) @ full_N
        dirichlet = full_D[plain_space.constrained]
    rhs = P.T @ (rhs_c - Lc.matvec(lift))
    u0 = L.solve(rhs, dirichlet=dirichlet)
    u = P @ u0 + lift
    return DirectSolution(sk, crack, crack_space, u, Lc)


class _TrivialCrack:
    def __init__(self, mesh):
        self.mesh = mesh
        self.inner, self.outer = {}, {}


def _circle_data(sk, g, j, k):
    """``(g_D, g_N)`` of region ``j`` restricted to circle ``k``."""
    for (kk, _), seg in zip(sk.circles[j], sk.setups[j].segments):
        if kk == k:
            return g[j].g_D[seg], g[j].g_N[seg]
    raise DomainError(f"circle {k} is not part of Gamma_{j}")


# ---------------------------------------------------------------------------
# skeleton integral equations
# ---------------------------------------------------------------------------

class CalderonSet:
    """Calderón matrices of all :math:`\\Gamma_j` with the trace-norm Gram matrices."""

    def __init__(self, skeleton, metric="trace"):
        if metric not in ("trace", "l2"):
            raise ConfigurationError("metric must be 'trace' or 'l2'")
        self.skeleton = skeleton
        self.metric = metric
        self.matrices = [assemble_calderon(j, s) for j, s in enumerate(skeleton.setups)]
        self.A = sla.block_diag(*[C.matrix for C in self.matrices]) - 0.5 * np.eye(
            skeleton.n_multi)
        pis = []
        for s in skeleton.setups:
            Mg = s.mass.toarray()
            Z = np.zeros_like(Mg)
            pis.append(np.block([[Z, Mg], [Mg, Z]]))
        self.Pi = sla.block_diag(*pis)
        self._G = None

    def __getitem__(self, j):
        return self.matrices[j]

    @property
    def gram(self):
        """Gram matrix of the residual metric on stacked multi-traces."""
        if self._G is None:
            sk = self.skeleton
            if self.metric == "trace":
                self._G = sla.block_diag(*[ctx.x_gram() for ctx in sk.norm_contexts])
            else:
                blocks = []
                for s in sk.setups:
                    Mg = s.mass.toarray()
                    blocks.append(sla.block_diag(Mg, Mg))
                self._G = sla.block_diag(*blocks)
        return self._G


def x_norm_multi(u, cset):
    """:math:`\\|u\\|_{X(\\Sigma)}` of a stacked multi-trace in the set's metric."""
    x = u.stacked if isinstance(u, MultiTrace) else np.asarray(u)
    return math.sqrt(max(float(np.real(np.conj(x) @ cset.gram @ x)), 0.0))


def multi_trace_residual(u_sigma, cset):
    """Per-interface :math:`\\|(\\mathcal C_j - \\tfrac12)u_j\\|_X`."""
    out = []
    sk = cset.skeleton
    for j, C in enumerate(cset.matrices):
        x = u_sigma[j].stacked
        r = C.matrix @ x - 0.5 * x
        ctx = sk.norm_contexts[j]
        n = C.n
        if cset.metric == "trace":
            val = ctx.h_half_norm(r[:n]) ** 2 + ctx.h_minus_half_norm(r[n:]) ** 2
        else:
            Mg = sk.setups[j].mass
            val = float(np.real(np.conj(r[:n]) @ (Mg @ r[:n]) + np.conj(r[n:]) @ (Mg @ r[n:])))
        out.append(math.sqrt(max(val, 0.0)))
    return out


def _sqrt_factor(G):
    """Symmetric square root and inverse square root of an SPD matrix."""
    w, V = np.linalg.eigh(0.5 * (G + G.conj().T))
    w = np.maximum(w, w.max() * 1e-300)
    return (V * np.sqrt(w)) @ V.conj().T, (V / np.sqrt(w)) @ V.conj().T


@dataclass
class SingleTraceResult:
    """Single-trace solution ``t`` with ``u_Sigma = Q t + g`` and diagnostics."""

    t: np.ndarray
    u_sigma: MultiTrace
    sigma_min: float
    sigma_max: float
    residual: float
    near_kernel: bool = False
    info: dict = field(default_factory=dict)


def ls_operator(skeleton, cset):
    """``G^{1/2} A Q G_0^{-1/2}`` whose singular values are those of the LS problem."""
    G = cset.gram
    Q = skeleton.Q.toarray()
    G0 = Q.T @ G @ Q
    Gh, _ = _sqrt_factor(G)
    _, G0ih = _sqrt_factor(G0)
    return Gh @ cset.A @ Q @ G0ih, G0ih


def solve_single_trace_ls(skeleton, g, cset, rank_tol=1e-12):
    r"""Least-squares single-trace formulation.

    Minimises :math:`\|A(Qt + g)\|_X` over ``t``; the normal equations are
    the variational least-squares equations with the metric of ``cset``.

    Raises
    ------
    SolverError
        If the least-squares operator is rank deficient relative to ``rank_tol``.
    """
    B, G0ih = ls_operator(skeleton, cset)
    Gh, _ = _sqrt_factor(cset.gram)
    rhs = -Gh @ (cset.A @ g.stacked)
    U, sv, Vh = np.linalg.svd(B, full_matrices=False)
    if sv[-1] <= rank_tol * sv[0]:
        raise SolverError(f"least-squares operator is rank deficient "
                          f"(sigma_min/sigma_max = {sv[-1] / sv[0]:.2e})",
                          diagnostic=float(sv[-1] / sv[0]))
    y = Vh.conj().T @ ((U.conj().T @ rhs) / sv)
    t = G0ih @ y
    u = skeleton.inject(t) + g
    res = float(np.linalg.norm(B @ y - rhs))
    return SingleTraceResult(t, u, float(sv[-1]), float(sv[0]), res)


def first_kind_matrix(skeleton, cset):
    """Galerkin matrix ``Q^T Pi A Q`` of the first-kind single-trace formulation."""
    Q = skeleton.Q.toarray()
    return Q.T @ cset.Pi @ cset.A @ Q


def solve_single_trace_first_kind(skeleton, g, cset):
    r"""First-kind single-trace formulation with the self-dual pairing.

    Solves :math:`\langle A t, h\rangle = -\langle A g, h\rangle` for all
    single-trace ``h``.  The smallest singular value is measured in the trace
    norms (``G_0^{-1/2} F G_0^{-1/2}``).  Below ``1e-10`` times the largest
    the result is flagged as near-kernel and computed by a pseudo-inverse.
    """
    F = first_kind_matrix(skeleton, cset)
    Q = skeleton.Q.toarray()
    G0 = Q.T @ cset.gram @ Q
    _, G0ih = _sqrt_factor(G0)
    Fs = G0ih @ F @ G0ih
    sv = np.linalg.svd(Fs, compute_uv=False)
    rhs = -Q.T @ (cset.Pi @ (cset.A @ g.stacked))
    near = bool(sv[-1] < NEAR_KERNEL * sv[0])
    if near:
        warnings.warn("first-kind single-trace system is numerically singular "
                      f"(sigma_min/sigma_max = {sv[-1] / sv[0]:.2e}); pseudo-solve used",
                      RuntimeWarning, stacklevel=2)
        y = np.linalg.lstsq(Fs, G0ih @ rhs, rcond=NEAR_KERNEL)[0]
        t = G0ih @ y
    else:
        t = np.linalg.solve(F, rhs)
    u = skeleton.inject(t) + g
    res = float(np.linalg.norm(F @ t - rhs) / max(np.linalg.norm(rhs), 1e-300))
    return SingleTraceResult(t, u, float(sv[-1]), float(sv[0]), res, near_kernel=near)


def garding_single_trace(t, skeleton, cset):
    r""":math:`\operatorname{Re}\langle(A + T)h, \bar h\rangle` for ``h = Q t`` (sum over interfaces)."""
    h = skeleton.inject(t)
    total = 0.0
    for j, C in enumerate(cset.matrices):
        hj = h[j]
        total += garding_functional(hj, skeleton.setups[j], C)
        # the -1/2 part: <h_j, conj h_j> summed over j cancels on X_0
        total -= 0.5 * float(np.real(2 * hj.g_D @ (skeleton.setups[j].mass @ np.conj(hj.g_N))))
    return total


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Reconstruction:
    """Per-region fields :math:`\\mathcal S_j u_{N,j} - \\mathcal D_j u_{D,j}`.

    ``fields[j]`` is a nodal vector on ``skeleton.setups[j].crack.mesh``;
    only its restriction to the triangles of region ``j`` is meaningful.
    """

    skeleton: object
    fields: list

    def region_mask(self, j):
        return self.skeleton.setups[j].crack.mesh.regions == j

    def value(self, j, points):
        """Evaluate the region-``j`` field at points inside :math:`\\Omega_j` (P1 interpolation)."""
        setup = self.skeleton.setups[j]
        return locate_and_interpolate(setup.crack.mesh, self.fields[j], points,
                                      mask=self.region_mask(j))

    def exterior(self, points):
        """Radiating extension beyond ``R`` of the region-0 field."""
        from .dtn import exterior_eval
        setup = self.skeleton.setups[0]
        dtn = setup.Lc.dtn
        return exterior_eval(self.fields[0][dtn.nodes], dtn, points)


def reconstruct_solution(t, g, skeleton):
    """Region-wise fields from ``u_Sigma = Q t + g`` (or from a multi-trace if ``t`` is None)."""
    u = g if t is None else skeleton.inject(t) + g
    fields = [s.combined(u[j].g_D, u[j].g_N) for j, s in enumerate(skeleton.setups)]
    return Reconstruction(skeleton, fields)


# ---------------------------------------------------------------------------
# kernel probe
# ---------------------------------------------------------------------------

def single_trace_operator(skeleton, chunk=100):
    """Dense ``A Q`` by potential solves on the nonzero columns of each block of ``Q``.

    Cheaper than assembling every Calderón matrix when ``Q`` is sparse in
    some blocks (a Dirichlet obstacle carries Neumann unknowns only).
    """
    sk = skeleton
    Q = sk.Q.toarray()
    AQ = -0.5 * Q.astype(complex)
    for j, setup in enumerate(sk.setups):
        off, n = sk.offsets[j], sk.sizes[j]
        Qj = Q[off:off + 2 * n]
        nz = np.flatnonzero(np.any(Qj != 0, axis=0))
        for start in range(0, len(nz), chunk):
            cols = nz[start:start + chunk]
            mD, mN = setup.means(setup.combined(Qj[:n, cols], Qj[n:, cols]))
            AQ[off:off + n, cols] += mD
            AQ[off + n:off + 2 * n, cols] += mN
    return AQ


@dataclass
class ProbeRow:
    kappa: float
    sigma_min_first_kind: float
    ls_residual: float


def kernel_probe(spec, kappas, c, p, target_h=None, background=None, M=None, axis="imag",
                 workers=1):
    """Sweep ``s = i kappa`` (or ``s = kappa`` for ``axis="real"``) and record singular values.

    Returns rows ``(kappa, sigma_min_first_kind, ls_residual)``: the smallest
    singular value, relative to the largest, of the first-kind system and of
    the least-squares operator, both measured in the trace norms.  Sweep
    points are independent; with ``workers > 1`` they run on a thread pool
    and the rows keep the order of ``kappas``.
    """
    if axis not in ("imag", "real"):
        raise ConfigurationError("axis must be 'imag' or 'real'")
    if background is None:
        background = build_background_mesh(spec, target_h)

    def point(kappa):
        s = 1j * float(kappa) if axis == "imag" else float(kappa)
        sk = Skeleton(spec, c, p, WaveContext(s, spec.R), background=background, M=M)
        AQ = single_trace_operator(sk)
        Q = sk.Q.toarray()
        G = sla.block_diag(*[ctx.x_gram() for ctx in sk.norm_contexts])
        Pi = sla.block_diag(*[np.block([[np.zeros((n, n)), Mg], [Mg, np.zeros((n, n))]])
                              for n, Mg in ((st.n_gamma, st.mass.toarray()) for st in sk.setups)])
        Gh, _ = _sqrt_factor(G)
        _, G0ih = _sqrt_factor(Q.T @ G @ Q)
        sv_f = np.linalg.svd(G0ih @ (Q.T @ Pi @ AQ) @ G0ih, compute_uv=False)
        sv_l = np.linalg.svd(Gh @ AQ @ G0ih, compute_uv=False)
        return ProbeRow(float(kappa), float(sv_f[-1] / sv_f[0]), float(sv_l[-1] / sv_l[0]))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(point, kappas))
    return [point(k) for k in kappas]
