r"""Computable weighted trace norms on a side domain ``G`` of an interface.

With ``A_s = K + |s|^2 M`` the P1 matrix of the energy norm
:math:`\|v\|_{H^1,s}^2 = \|\nabla v\|^2 + |s|^2\|v\|^2` on ``G`` (plain gradient,
no coefficients), the discrete minimal extension of a trace ``g`` is the
``A_s``-harmonic extension and its squared energy is ``g^H S g`` with the
Schur complement ``S`` of ``A_s`` onto the interface nodes.

The dual norm of a P1 density ``h`` acting through the interface mass
matrix ``M_G`` is the Riesz value

.. math::

    \|h\|_{-1/2,s}^2 = (M_\Gamma h)^H S^{-1} (M_\Gamma h),

i.e. the energy of the field ``w`` solving ``-Δw + |s|^2 w = 0`` in ``G``
with Neumann datum ``h``.  Both are exact for the discrete spaces, so the
Cauchy-Schwarz inequality between them holds with equality for Riesz pairs.
"""

import math

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.spatial import cKDTree

from .errors import ConfigurationError
from .fem import stiffness_matrix, mass_matrix, polyline_mass
from .mesh import Mesh


def submesh(mesh, keep):
    """Mesh made of the triangles selected by the boolean mask ``keep`` (renumbered)."""
    tris = mesh.triangles[keep]
    used = np.unique(tris)
    new = -np.ones(mesh.n_vertices, dtype=np.int64)
    new[used] = np.arange(len(used))
    ok = np.all(new[mesh.edges] >= 0, axis=1)
    tags = [t for t, o in zip(mesh.edge_tags, ok) if o]
    return Mesh(mesh.vertices[used], new[tris], mesh.regions[keep], new[mesh.edges[ok]], tags)


class NormContext:
    """Trace norms for an interface whose nodes are given by coordinates.

    Parameters
    ----------
    side_mesh : Mesh
        Triangulation of the side domain ``G`` (bounded), whose boundary
        contains the interface.
    segments : sequence of (n_k, 2) arrays
        Interface node coordinates, one closed polyline per circle, in the
        order used by density vectors.
    wave : WaveContext
    """

    def __init__(self, side_mesh, segments, wave):
        self.mesh = side_mesh
        self.wave = wave
        tree = cKDTree(side_mesh.vertices)
        ids, blocks = [], []
        scale = float(np.abs(side_mesh.vertices).max())
        for seg in segments:
            d, idx = tree.query(np.asarray(seg))
            if np.any(d > 1e-10 * scale):
                raise ConfigurationError("interface nodes are not nodes of the side mesh")
            ids.append(idx)
            blocks.append(polyline_mass(side_mesh.vertices, idx))
        self.gamma = np.concatenate(ids)
        self.mass = sp.block_diag(blocks, format="csr").toarray()
        s2 = abs(wave.s) ** 2
        A = (stiffness_matrix(side_mesh) + s2 * mass_matrix(side_mesh)).tocsc()
        n = side_mesh.n_vertices
        mask = np.ones(n, dtype=bool)
        mask[self.gamma] = False
        self.interior = np.flatnonzero(mask)
        Aii = A[self.interior][:, self.interior].tocsc()
        Aig = A[self.interior][:, self.gamma].toarray()
        Agg = A[self.gamma][:, self.gamma].toarray()
        self._Aii = spla.splu(Aii) if len(self.interior) else None
        X = self._Aii.solve(Aig) if self._Aii is not None else np.zeros((0, len(self.gamma)))
        S = Agg - Aig.T @ X
        self.schur = 0.5 * (S + S.T)
        self._harm = X
        self._S_cho = sla.cho_factor(self.schur)
        self.gram_N = self.mass @ sla.cho_solve(self._S_cho, self.mass)
        self.gram_N = 0.5 * (self.gram_N + self.gram_N.T)

    @property
    def n_gamma(self):
        return len(self.gamma)

    def extension(self, g):
        """Nodal values on the side mesh of the discrete minimal extension of ``g``."""
        g = np.asarray(g, dtype=complex)
        v = np.zeros(self.mesh.n_vertices, dtype=complex)
        v[self.gamma] = g
        v[self.interior] = -self._harm @ g
        return v

    def riesz(self, h):
        """Trace density ``S^{-1} M h`` of the Riesz field of ``h`` (its Dirichlet trace)."""
        return sla.cho_solve(self._S_cho, self.mass @ np.asarray(h, dtype=complex))

    def h_half_norm(self, g):
        g = np.asarray(g, dtype=complex)
        return math.sqrt(max(float(np.real(np.conj(g) @ self.schur @ g)), 0.0))

    def h_minus_half_norm(self, h):
        h = np.asarray(h, dtype=complex)
        return math.sqrt(max(float(np.real(np.conj(h) @ self.gram_N @ h)), 0.0))

    def energy_norm(self, v):
        """:math:`\\|v\\|_{H^1(G),s}` of a nodal vector on the side mesh."""
        s2 = abs(self.wave.s) ** 2
        A = stiffness_matrix(self.mesh) + s2 * mass_matrix(self.mesh)
        v = np.asarray(v, dtype=complex)
        return math.sqrt(max(float(np.real(np.conj(v) @ (A @ v))), 0.0))

    def pairing(self, h, g):
        """Bilinear interface pairing :math:`\\langle h, g\\rangle_\\Gamma`."""
        return complex(np.asarray(h) @ self.mass @ np.asarray(g))

    def x_gram(self):
        """Gram matrix of the Cauchy-trace norm on stacked ``(g_D, g_N)``."""
        return sla.block_diag(self.schur, self.gram_N)


def h_half_norm(g, ctx):
    """Minimal-extension :math:`H^{1/2}` norm of a P1 trace."""
    return ctx.h_half_norm(g)


def h_minus_half_norm(h, ctx):
    """Dual :math:`H^{-1/2}` norm of a P1 density (Riesz realisation)."""
    return ctx.h_minus_half_norm(h)


def x_norm(data, ctxs):
    r"""Cauchy-trace norm :math:`(\|g_D\|^2 + \|g_N\|^2)^{1/2}`, summed over interfaces.

    ``data`` is a pair ``(g_D, g_N)`` with a single context or a sequence of
    pairs with one context each.
    """
    if isinstance(ctxs, NormContext):
        data, ctxs = [data], [ctxs]
    total = 0.0
    for (gD, gN), ctx in zip(data, ctxs):
        total += ctx.h_half_norm(gD) ** 2 + ctx.h_minus_half_norm(gN) ** 2
    return math.sqrt(total)
