r"""P1 finite elements for :math:`-\operatorname{div}(A\nabla u) + s^2 p\,u` with DtN truncation.

All forms are linear in the first and conjugate-linear in the second
argument, so a matrix ``L`` realises :math:`\ell(v, w) = \bar w^T L v`.  With
real coefficients ``A`` and ``p`` the matrices are complex symmetric.

The dense DtN block is never formed inside the sparse matrix.  It is kept
as real factors ``U`` and weights ``w`` and eliminated through the bordered
system

.. math::

    \begin{pmatrix} S & U \\ U^T & \operatorname{diag}(w)^{-1} \end{pmatrix}
    \begin{pmatrix} x \\ y \end{pmatrix} = \begin{pmatrix} b \\ 0 \end{pmatrix},
    \qquad S = K_A + s^2 M_p,

whose first block row gives :math:`(S - U\operatorname{diag}(w)U^T)x = b`.
One sparse LU factorisation serves any number of right-hand sides.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, SolverError, DomainError
from .dtn import DtnOperator, TWO_PI

# degree-4 six-point rule on the reference triangle (barycentric, weights sum to 1)
_QA, _QB = 0.445948490915965, 0.091576213509771
_QWA, _QWB = 0.223381589678011, 0.109951743655322
QUAD_BARY = np.array([
    [_QA, _QA, 1 - 2 * _QA], [_QA, 1 - 2 * _QA, _QA], [1 - 2 * _QA, _QA, _QA],
    [_QB, _QB, 1 - 2 * _QB], [_QB, 1 - 2 * _QB, _QB], [1 - 2 * _QB, _QB, _QB]])
QUAD_W = np.array([_QWA] * 3 + [_QWB] * 3)


# ---------------------------------------------------------------------------
# context objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WaveContext:
    """Wavenumber ``s`` (``Re s >= 0``, ``s != 0``) and truncation radius ``R``."""

    s: complex
    R: float

    def __post_init__(self):
        s = complex(self.s)
        if s == 0:
            raise ConfigurationError("C1: wavenumber must be nonzero")
        if s.real < 0:
            raise ConfigurationError("C1: wavenumber must have non-negative real part")
        if not self.R > 0:
            raise ConfigurationError("C3: truncation radius R must be positive")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "R", float(self.R))

    @property
    def s_low(self):
        return min(1.0, abs(self.s))

    @property
    def s_Low(self):
        return 1.0 / self.s_low

    def conjugate(self):
        return WaveContext(self.s.conjugate(), self.R)


class CoefficientField:
    """Region-wise constant coefficients ``A_j`` (SPD 2x2) and ``p_j > 0``.

    Parameters
    ----------
    A : mapping region -> 2x2 array_like or positive scalar
    p : mapping region -> positive float
    """

    def __init__(self, A, p):
        self.A = {}
        self.p = {}
        for j, a in A.items():
            a = np.asarray(a, dtype=float)
            if a.ndim == 0:
                a = float(a) * np.eye(2)
            if a.shape != (2, 2) or not np.allclose(a, a.T, rtol=0, atol=1e-14):
                raise ConfigurationError(f"C2: A in region {j} must be a symmetric 2x2 matrix")
            ev = np.linalg.eigvalsh(a)
            if not ev[0] > 0:
                raise ConfigurationError(f"C2: A in region {j} must be positive definite")
            self.A[int(j)] = a
        for j, pj in p.items():
            pj = float(pj)
            if not pj > 0:
                raise ConfigurationError(f"C2: p in region {j} must be positive (p_min > 0)")
            self.p[int(j)] = pj
        if set(self.A) != set(self.p):
            raise ConfigurationError("A and p must be given for the same regions")
        eig = np.concatenate([np.linalg.eigvalsh(a) for a in self.A.values()])
        self.a_min, self.a_max = float(eig.min()), float(eig.max())
        pv = np.array(list(self.p.values()))
        self.p_min, self.p_max = float(pv.min()), float(pv.max())

    @classmethod
    def isotropic(cls, c, p):
        """Coefficients ``A_j = c[j] I`` and ``p_j = p[j]`` for regions ``0..len(c)-1``."""
        return cls({j: cj for j, cj in enumerate(c)}, {j: pj for j, pj in enumerate(p)})

    @classmethod
    def constant(cls, c, p, regions):
        """The same isotropic pair on every listed region."""
        return cls({j: c for j in regions}, {j: p for j in regions})

    def per_triangle(self, regions):
        regions = np.asarray(regions)
        missing = set(np.unique(regions).tolist()) - set(self.A)
        if missing:
            raise ConfigurationError(f"no coefficients for mesh region(s) {sorted(missing)}")
        A = np.stack([self.A[j] for j in range(max(self.A) + 1)] if
                     set(self.A) == set(range(max(self.A) + 1)) else
                     [self.A.get(j, np.eye(2)) for j in range(max(self.A) + 1)])
        P = np.array([self.p.get(j, 1.0) for j in range(max(self.p) + 1)])
        return A[regions], P[regions]

    def exterior(self):
        """``(c, p)`` of region 0, which must be isotropic (it meets the truncation circle)."""
        a = self.A[0]
        if abs(a[0, 1]) > 1e-14 or abs(a[0, 0] - a[1, 1]) > 1e-14:
            raise ConfigurationError("C3: region 0 must be isotropic near the truncation circle")
        return float(a[0, 0]), self.p[0]

    def is_isotropic(self, j):
        a = self.A[j]
        return abs(a[0, 1]) < 1e-14 and abs(a[0, 0] - a[1, 1]) < 1e-14


# ---------------------------------------------------------------------------
# element matrices
# ---------------------------------------------------------------------------

def element_geometry(mesh):
    """Areas and constant gradients of the three barycentric functions per triangle."""
    p = mesh.vertices[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
                  - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    grad = np.stack([b, c], axis=2) / (2 * area)[:, None, None]   # (nt, 3, 2)
    return area, grad


def _scatter(mesh, local):
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def stiffness_matrix(mesh, A=None):
    """``K[i, k] = sum_T |T| (A_T grad phi_k) . grad phi_i``; ``A`` per triangle or identity."""
    area, grad = element_geometry(mesh)
    if A is None:
        Ag = grad
    else:
        Ag = np.einsum("tab,tkb->tka", A, grad)
    local = np.einsum("tia,tka->tik", grad, Ag) * area[:, None, None]
    return _scatter(mesh, local)


def mass_matrix(mesh, p=None):
    """Consistent P1 mass matrix with element weights ``p`` (default 1)."""
    area, _ = element_geometry(mesh)
    w = area if p is None else area * p
    ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = w[:, None, None] * ref[None]
    return _scatter(mesh, local)


def polyline_mass(vertices, nodes):
    """P1 mass matrix of a closed polyline through ``vertices[nodes]`` (in order)."""
    n = len(nodes)
    xy = vertices[nodes]
    L = np.hypot(*(np.roll(xy, -1, axis=0) - xy).T)
    i = np.arange(n)
    j = (i + 1) % n
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    vals = np.concatenate([L / 3, L / 3, L / 6, L / 6])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def load_vector(mesh, f, p=None):
    """``b_i = int f phi_i`` with a degree-4 rule; ``f`` maps ``(npts, 2)`` points to values."""
    area, _ = element_geometry(mesh)
    P = mesh.vertices[mesh.triangles]
    b = np.zeros(mesh.n_vertices, dtype=complex)
    for q, wq in zip(QUAD_BARY, QUAD_W):
        xq = np.einsum("k,tkd->td", q, P)
        fq = np.asarray(f(xq), dtype=complex) * wq * area
        if p is not None:
            fq = fq * p
        for k in range(3):
            np.add.at(b, mesh.triangles[:, k], fq * q[k])
    return b


# ---------------------------------------------------------------------------
# spaces and fields
# ---------------------------------------------------------------------------

class FeSpace:
    """Nodal P1 space on a (crack) mesh with homogeneous Dirichlet DOFs on ``DIR`` edges."""

    def __init__(self, mesh, dirichlet_tags=("DIR",)):
        self.mesh = mesh
        self.n = mesh.n_vertices
        dn = np.unique(mesh.tag_edges(tuple(dirichlet_tags))) if dirichlet_tags else []
        mask = np.zeros(self.n, dtype=bool)
        mask[np.asarray(dn, dtype=np.int64)] = True
        self.constrained = np.flatnonzero(mask)
        self.free = np.flatnonzero(~mask)
        self.is_free = ~mask

    def trace_nodes(self, tag):
        return self.mesh.tag_nodes(tag)


@dataclass(frozen=True, eq=False)
class Field:
    """Complex nodal coefficient vector on a space."""

    space: FeSpace
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.space.n,):
            raise ConfigurationError("field length must equal the number of DOFs")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


# ---------------------------------------------------------------------------
# system matrix
# ---------------------------------------------------------------------------

class SystemMatrix:
    r"""Realisation of :math:`\ell` on P1: sparse ``K_A + s^2 M_p`` minus the DtN block.

    Attributes
    ----------
    K, Mp : scipy.sparse.csr_matrix
        Real stiffness (with ``A``) and weighted mass (with ``p``) matrices.
    dtn : DtnOperator or None
    """

    def __init__(self, space, coeff, wave, dtn=None, K=None, Mp=None, U=None, w=None):
        self.space = space
        self.coeff = coeff
        self.wave = wave
        mesh = space.mesh
        if K is None or Mp is None:
            A, P = coeff.per_triangle(mesh.regions)
            K = stiffness_matrix(mesh, A)
            Mp = mass_matrix(mesh, P)
        self.K = sp.csr_matrix(K)
        self.Mp = sp.csr_matrix(Mp)
        self.S = (self.K + wave.s ** 2 * self.Mp).tocsr()
        self.dtn = dtn
        n = space.n
        if U is not None:
            self.U, self.w = sp.csr_matrix(U), np.asarray(w, dtype=complex)
        elif dtn is not None:
            Ud, self.w = dtn.factors()
            self.U = sp.csr_matrix((Ud.ravel(),
                                    (np.repeat(dtn.nodes, Ud.shape[1]),
                                     np.tile(np.arange(Ud.shape[1]), len(dtn.nodes)))),
                                   shape=(n, Ud.shape[1]))
        else:
            self.U = sp.csr_matrix((n, 0))
            self.w = np.zeros(0, dtype=complex)
        self._lu = None

    def congruence(self, P, space):
        """The system ``P^T L P`` on ``space`` (used to tie crack-mesh DOFs)."""
        P = sp.csr_matrix(P)
        return SystemMatrix(space, self.coeff, self.wave, self.dtn,
                            K=P.T @ self.K @ P, Mp=P.T @ self.Mp @ P,
                            U=P.T @ self.U, w=self.w)

    # -- products ------------------------------------------------------------
    def matvec(self, x):
        """Full (unconstrained) product ``L x``."""
        x = np.asarray(x)
        y = self.S @ x
        if self.w.size:
            y = y - self.U @ (self.w[:, None] * (self.U.T @ x.reshape(x.shape[0], -1))).reshape(
                (-1,) + x.shape[1:])
        return y

    def form(self, v, w):
        """:math:`\\ell(v, w) = \\bar w^T L v`."""
        return complex(np.conj(w) @ self.matvec(v))

    def toarray(self):
        """Dense ``L`` (small meshes only)."""
        L = self.S.toarray().astype(complex)
        if self.w.size:
            U = self.U.toarray()
            L -= (U * self.w) @ U.T
        return L

    # -- factorisation -------------------------------------------------------
    def _factor(self):
        if self._lu is not None:
            return self._lu
        f = self.space.free
        Sff = self.S[f][:, f]
        Uf = self.U[f]
        nb = self.w.size
        if nb:
            big = sp.bmat([[Sff, Uf], [Uf.T, sp.diags(1.0 / self.w)]], format="csc")
        else:
            big = Sff.tocsc()
        try:
            self._lu = spla.splu(big.astype(complex))
        except RuntimeError as exc:
            raise SolverError(f"sparse factorisation failed: {exc}", diagnostic=str(exc)) from None
        self._nfree = len(f)
        return self._lu

    def solve(self, rhs, dirichlet=None, check=True):
        """Solve ``L u = rhs`` on free DOFs; constrained DOFs take ``dirichlet`` (default 0).

        ``rhs`` may be a vector or an ``(n, k)`` array of right-hand sides.
        """
        lu = self._factor()
        rhs = np.asarray(rhs, dtype=complex)
        vec = rhs.ndim == 1
        b = rhs.reshape(rhs.shape[0], -1)
        f = self.space.free
        u = np.zeros_like(b)
        if dirichlet is not None and len(self.space.constrained):
            c = self.space.constrained
            u[c] = np.asarray(dirichlet, dtype=complex).reshape(len(c), -1)
            b = b - self.matvec(u)
        bf = b[f]
        nb = self.w.size
        full = np.vstack([bf, np.zeros((nb, bf.shape[1]), dtype=complex)]) if nb else bf
        xf = lu.solve(full)[: len(f)]
        if check:
            for _ in range(3):
                r = bf - self.matvec(self._embed(xf))[f]
                scale = np.linalg.norm(bf, axis=0) + 1e-300
                res = np.linalg.norm(r, axis=0) / scale
                if np.all(res <= 1e-12) or not np.all(np.isfinite(res)):
                    break
                full = np.vstack([r, np.zeros((nb, r.shape[1]), dtype=complex)]) if nb else r
                xf = xf + lu.solve(full)[: len(f)]
            r = bf - self.matvec(self._embed(xf))[f]
            res = np.linalg.norm(r, axis=0) / (np.linalg.norm(bf, axis=0) + 1e-300)
            worst = float(np.max(res, initial=0.0))
            if not np.isfinite(worst) or (worst > 1e-10 and np.any(np.linalg.norm(bf, axis=0) > 0)):
                raise SolverError(
                    f"solve residual {worst:.3e} exceeds 1e-10 (numerically singular system)",
                    diagnostic=worst)
        u[f] = xf
        return u[:, 0] if vec else u

    def _embed(self, xf):
        x = np.zeros((self.space.n, xf.shape[1]), dtype=complex)
        x[self.space.free] = xf
        return x


def assemble_l(space, coeff, wave, dtn=None, M=None):
    """Assemble the system matrix of :math:`\\ell` on ``space``.

    If ``dtn`` is omitted it is built from the ``OUTER`` polyline with the
    exterior coefficients of region 0 and mode cutoff ``M``.
    """
    if dtn is None:
        c0, p0 = coeff.exterior()
        dtn = DtnOperator.for_mesh(space.mesh, wave.s, wave.R, M=M, c=c0, p=p0)
    elif abs(dtn.R - wave.R) > 1e-14 * wave.R or dtn.s != wave.s:
        raise ConfigurationError("DtN operator does not match the wave context")
    return SystemMatrix(space, coeff, wave, dtn)


def solve_newton(matrix, rhs):
    """Discrete Newton potential: the field ``u`` with ``L u = rhs`` (homogeneous Dirichlet)."""
    return Field(matrix.space, matrix.solve(rhs))


# ---------------------------------------------------------------------------
# diagnostics and norms
# ---------------------------------------------------------------------------

def _edge_owner(mesh):
    """Map sorted edge -> list of (triangle, local edge index)."""
    tri = mesh.triangles
    owner = {}
    for t, (a, b, c) in enumerate(tri.tolist()):
        for k, (p, q) in enumerate(((a, b), (b, c), (c, a))):
            owner.setdefault((min(p, q), max(p, q)), []).append(t)
    return owner


def apply_L_strong(field, coeff, wave, source=None):
    r"""Region-wise residual indicator of the strong equation for a P1 field.

    For P1 the broken divergence vanishes, so the residual consists of the
    element term :math:`s^2 p u_h - f` and the conormal flux jumps across
    interior edges of each region:

    .. math::

        \eta_j^2 = \sum_{T\subset\Omega_j} h_T^2\|s^2pu_h - f\|_T^2
                 + \sum_{E\subset\Omega_j} h_E\|[A\nabla u_h\cdot n]\|_E^2.

    Returns a dict ``region -> eta_j``.  Only used as a diagnostic.
    """
    mesh = field.space.mesh
    u = field.values
    area, grad = element_geometry(mesh)
    A, P = coeff.per_triangle(mesh.regions)
    gu = np.einsum("tk,tkd->td", u[mesh.triangles], grad)
    flux = np.einsum("tab,tb->ta", A, gu)
    s2 = wave.s ** 2
    # element term with the degree-4 rule
    Pts = mesh.vertices[mesh.triangles]
    el = np.zeros(mesh.n_triangles)
    for q, wq in zip(QUAD_BARY, QUAD_W):
        uq = u[mesh.triangles] @ q
        rq = s2 * P * uq
        if source is not None:
            rq = rq - np.asarray(source(np.einsum("k,tkd->td", q, Pts)))
        el += wq * np.abs(rq) ** 2
    hT = np.sqrt((np.diff(Pts[:, [0, 1, 2, 0]], axis=1) ** 2).sum(-1)).max(1)
    eta = {int(j): 0.0 for j in np.unique(mesh.regions)}
    contrib = hT ** 2 * el * area
    for j in eta:
        eta[j] += float(contrib[mesh.regions == j].sum())
    for (a, b), ts in _edge_owner(mesh).items():
        if len(ts) != 2 or mesh.regions[ts[0]] != mesh.regions[ts[1]]:
            continue
        e = mesh.vertices[b] - mesh.vertices[a]
        hE = math.hypot(*e)
        n = np.array([e[1], -e[0]]) / hE
        jump = (flux[ts[0]] - flux[ts[1]]) @ n
        eta[int(mesh.regions[ts[0]])] += hE * hE * abs(jump) ** 2
    return {j: math.sqrt(v) for j, v in eta.items()}


def norms(field, wave, coeff=None):
    r"""Weighted norms of a P1 field.

    Returns a dict with

    ``h1_s``  :math:`(\|\nabla v\|^2 + |s|^2\|v\|^2)^{1/2}`,
    ``l2``    :math:`\|v\|`,
    ``hdiv_s`` :math:`(\|A\nabla v\|^2 + |s|^{-2}\|\operatorname{div}_h A\nabla v\|^2)^{1/2}`,
    ``v_norm`` :math:`(\|A\nabla v\|_{H(\operatorname{div}),s}^2 + \|v\|_{H^1,s}^2)^{1/2}`.

    The discrete divergence is the lumped-mass representative
    :math:`-D^{-1}K_A v` of the distributional divergence at nodes off all tagged
    boundaries (zero at tagged nodes); it replaces the broken divergence,
    which vanishes identically for P1.
    """
    mesh = field.space.mesh
    v = field.values
    K = stiffness_matrix(mesh)
    M = mass_matrix(mesh)
    grad2 = float(np.real(np.conj(v) @ (K @ v)))
    l22 = float(np.real(np.conj(v) @ (M @ v)))
    s2 = abs(wave.s) ** 2
    out = {"h1_s": math.sqrt(max(grad2 + s2 * l22, 0.0)), "l2": math.sqrt(max(l22, 0.0))}
    if coeff is None:
        coeff = CoefficientField.constant(1.0, 1.0, np.unique(mesh.regions).tolist())
    A, _ = coeff.per_triangle(mesh.regions)
    area, grad = element_geometry(mesh)
    gu = np.einsum("tk,tkd->td", v[mesh.triangles], grad)
    Ag = np.einsum("tab,tb->ta", A, gu)
    flux2 = float(np.sum(area * np.sum(np.abs(Ag) ** 2, axis=1)))
    KA = stiffness_matrix(mesh, A)
    lump = np.asarray(M.sum(axis=1)).ravel()
    div = -(KA @ v) / lump
    div[np.unique(mesh.edges)] = 0.0
    div2 = float(np.real(np.conj(div) @ (M @ div)))
    hdiv = math.sqrt(flux2 + div2 / s2)
    out["hdiv_s"] = hdiv
    out["v_norm"] = math.sqrt(hdiv ** 2 + out["h1_s"] ** 2)
    return out


def edge_conormal_flux(mesh, u, coeff, edges, outward):
    r"""Element-wise conormal flux :math:`A_T\nabla u_h\cdot n` on boundary-type edges.

    Parameters
    ----------
    edges : (ne, 2) int array
        Each edge must belong to exactly one triangle of ``mesh`` (a boundary
        edge, or one side of a crack).
    outward : callable
        Maps edge midpoints ``(ne, 2)`` to the unit normals to use.

    Returns
    -------
    (ne,) complex array of piecewise-constant flux values.
    """
    owner = _edge_owner(mesh)
    tri = np.array([owner[(min(a, b), max(a, b))][0] for a, b in edges.tolist()])
    _, grad = element_geometry(mesh)
    A, _ = coeff.per_triangle(mesh.regions)
    gu = np.einsum("tk,tkd->td", u[mesh.triangles[tri]], grad[tri])
    Ag = np.einsum("tab,tb->ta", A[tri], gu)
    e = mesh.vertices[edges[:, 1]] - mesh.vertices[edges[:, 0]]
    n = np.column_stack([e[:, 1], -e[:, 0]])
    n /= np.hypot(n[:, 0], n[:, 1])[:, None]
    mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    ref = outward(mid)
    n *= np.sign(np.sum(n * ref, axis=1))[:, None]
    return np.sum(Ag * n, axis=1)


def l2_piecewise_constant_vs_p1(vertices, nodes, const_on_edges, p1_values):
    """L2 distance on a closed polyline between edge-wise constants and a P1 density.

    ``const_on_edges[k]`` lives on the edge from ``nodes[k]`` to ``nodes[k+1]``.
    """
    xy = vertices[nodes]
    L = np.hypot(*(np.roll(xy, -1, axis=0) - xy).T)
    a = const_on_edges - p1_values
    b = const_on_edges - np.roll(p1_values, -1)
    # Simpson is exact for the quadratic |linear|^2
    mid = 0.5 * (a + b)
    return math.sqrt(float(np.sum(L / 6 * (np.abs(a) ** 2 + 4 * np.abs(mid) ** 2 + np.abs(b) ** 2))))


def v_membership_residual(field, matrix, source_load=None, flux="element"):
    r"""Surrogate for :math:`\|(\gamma_N - \mathrm{DtN})u\|` on the truncation circle.

    The Neumann datum :math:`c\,\partial_r u` is recovered either from the
    gradients of the triangles along the circle (``flux="element"``) or
    variationally from the residual functional of the volume form
    (``flux="variational"``).  The difference to ``DtN u`` is measured
    mode-wise in the weighted :math:`H^{-1/2}` norm with weights
    :math:`(1 + |s|^2 + m^2/R^2)^{-1/2}` on the retained modes.

    For discrete Newton potentials the variational variant vanishes up to
    round-off, because the extraction uses the same form as the solve.
    """
    mesh = field.space.mesh
    dtn = matrix.dtn
    u = field.values
    nodes = dtn.nodes
    Mb = polyline_mass(mesh.vertices, nodes)
    U, w = dtn.factors()
    dtn_functional = U @ (w * (U.T @ u[nodes]))
    if flux == "variational":
        r = (matrix.S @ u)[nodes]
        if source_load is not None:
            r = r - source_load[nodes]
        resid = spla.spsolve(Mb.tocsc(), r - dtn_functional)
    elif flux == "element":
        edges = np.column_stack([nodes, np.roll(nodes, -1)])
        q = edge_conormal_flux(mesh, u, matrix.coeff, edges, lambda x: x)
        # nodal flux density: L2 projection of the edge constants onto P1
        xy = mesh.vertices[nodes]
        L = np.hypot(*(np.roll(xy, -1, axis=0) - xy).T)
        load = 0.5 * (L * q + np.roll(L * q, 1))
        resid = spla.spsolve(Mb.tocsc(), load - dtn_functional)
    else:
        raise DomainError("flux must be 'element' or 'variational'")
    F = dtn.fourier(resid)
    m = np.arange(dtn.M + 1)
    wt = 1.0 / np.sqrt(1.0 + abs(dtn.s) ** 2 + (m / dtn.R) ** 2)
    mult = np.where(m == 0, 1.0, 2.0)
    val = TWO_PI * dtn.R * np.sum(mult * wt * np.abs(F) ** 2)
    return math.sqrt(float(val))


# ---------------------------------------------------------------------------
# evaluation against reference fields
# ---------------------------------------------------------------------------

def locate_and_interpolate(mesh, values, points, mask=None):
    """P1 interpolation of nodal ``values`` at ``points``.

    Only triangles selected by the boolean ``mask`` are searched.

    Raises
    ------
    DomainError
        If a point lies in none of the searched triangles.
    """
    from scipy.spatial import cKDTree
    tri_ids = np.arange(mesh.n_triangles) if mask is None else np.flatnonzero(mask)
    P = mesh.vertices[mesh.triangles[tri_ids]]
    tree = cKDTree(P.mean(axis=1))
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    k = min(16, len(tri_ids))
    _, cand = tree.query(pts, k=k)
    cand = np.asarray(cand).reshape(len(pts), k)
    vals = np.asarray(values)
    out = np.empty(len(pts), dtype=complex)
    for i, x in enumerate(pts):
        for t in cand[i]:
            lam = _barycentric(P[t], x)
            if lam.min() >= -1e-10:
                out[i] = lam @ vals[mesh.triangles[tri_ids[t]]]
                break
        else:
            raise DomainError(f"point {x.tolist()} is not covered by the selected triangles")
    return out


def _barycentric(tri, x):
    T = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
    l12 = np.linalg.solve(T, x - tri[0])
    return np.array([1.0 - l12.sum(), l12[0], l12[1]])


def field_errors(mesh, values, exact, exact_grad, select=None):
    r"""L2 and H1-seminorm errors of a P1 field against a reference.

    ``exact(points, regions)`` and ``exact_grad(points, regions)`` receive the
    quadrature points and the region index of their triangle, so a reference
    can be continued analytically across a polygonal interface.  ``select``
    restricts the integration to a boolean mask of triangles.

    Returns
    -------
    dict with ``l2`` and ``h1`` (seminorm) error values.
    """
    keep = np.ones(mesh.n_triangles, dtype=bool) if select is None else np.asarray(select)
    tri = mesh.triangles[keep]
    reg = mesh.regions[keep]
    sub = type(mesh)(mesh.vertices, tri, reg, mesh.edges, mesh.edge_tags)
    area, grad = element_geometry(sub)
    P = mesh.vertices[tri]
    u = np.asarray(values)[tri]                      # (nt, 3)
    gu = np.einsum("tk,tkd->td", u, grad)            # constant gradient per triangle
    e0 = e1 = 0.0
    for q, wq in zip(QUAD_BARY, QUAD_W):
        xq = np.einsum("k,tkd->td", q, P)
        uq = u @ q
        e0 += float(np.sum(wq * area * np.abs(uq - exact(xq, reg)) ** 2))
        e1 += float(np.sum(wq * area * np.sum(np.abs(gu - exact_grad(xq, reg)) ** 2, axis=1)))
    return {"l2": math.sqrt(e0), "h1": math.sqrt(e1)}
