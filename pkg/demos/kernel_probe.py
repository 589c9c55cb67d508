"""Spurious kernel of the first-kind skeleton equation near a Dirichlet eigenvalue.

A sound-soft unit disk sits inside B_R.  For purely imaginary wavenumbers
s = i kappa the first-kind single-trace operator loses injectivity when
kappa hits a Dirichlet eigenvalue of the disk (j_{0,1} = 2.4048 for the
continuum problem, the P1 eigenvalue kappa_h for the mesh).  The
least-squares operator does not notice.

The sweep prints the smallest relative singular value of both operators.
The dip of the first-kind column is limited by how close the kappa grid
comes to kappa_h; pass a finer step to see it deepen.

Run::

    python demos/kernel_probe.py [target_h] [points]
"""

import math
import sys

import numpy as np
import scipy.linalg as sla

from sielab.fem import mass_matrix, stiffness_matrix
from sielab.mesh import GeometrySpec, Obstacle, build_background_mesh
from sielab.trace_norms import submesh
from sielab.transmission import kernel_probe

h = float(sys.argv[1]) if len(sys.argv) > 1 else 0.05
points = int(sys.argv[2]) if len(sys.argv) > 2 else 21
spec = GeometrySpec(1.5, (), Obstacle(1.0))
bg = build_background_mesh(spec, h)

# P1 Dirichlet eigenvalue of the disk on the same mesh
disk = submesh(bg, bg.regions == 1)
inner = np.setdiff1d(np.arange(disk.n_vertices), np.unique(disk.edges))
K = stiffness_matrix(disk).toarray()[np.ix_(inner, inner)]
M = mass_matrix(disk).toarray()[np.ix_(inner, inner)]
kappa_h = math.sqrt(sla.eigh(K, M, eigvals_only=True, subset_by_index=[0, 0])[0])
print(f"{bg.n_triangles} triangles; j01 = 2.404826, discrete kappa_h = {kappa_h:.6f}")

kappas = np.linspace(2.3, 2.5, points)
rows = kernel_probe(spec, kappas, (1.0,), (1.0,), background=bg)
print(f"{'kappa':>7} {'first kind':>11} {'least sq.':>10}")
for r in rows:
    print(f"{r.kappa:7.3f} {r.sigma_min_first_kind:11.3e} {r.ls_residual:10.3e}")
