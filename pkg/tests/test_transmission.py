import math
import warnings

import numpy as np
import pytest
import scipy.linalg as sla

from sielab.errors import ConfigurationError
from sielab.fem import WaveContext, mass_matrix, stiffness_matrix
from sielab.mesh import GeometrySpec, Obstacle, build_background_mesh, refine
from sielab.studies import (direct_convergence, drive_multitrace, exact_multitrace,
                            full_convergence, mie_reference)
from sielab.trace_norms import submesh
from sielab.transmission import (CalderonSet, Skeleton, direct_solve, kernel_probe,
                                 multi_trace_residual, reconstruct_solution,
                                 solve_single_trace_first_kind, solve_single_trace_ls,
                                 x_norm_multi)

DRIVE = {0: (1.0, 0.5), 2: (0.5, -1.0)}
HALF = ((0.0, math.pi, "DIRICHLET"), (math.pi, 2 * math.pi, "NEUMANN"))

GEOMETRIES = {
    "two_region": (GeometrySpec(2.0, (1.0,)), (1.0, 2.0), (1.0, 3.0)),
    "three_region": (GeometrySpec(2.5, (0.8, 1.6)), (1.0, 2.0, 0.5), (1.0, 3.0, 2.0)),
    "dirichlet_obstacle": (GeometrySpec(2.0, (1.2,), Obstacle(0.5)), (1.0, 2.0), (1.0, 3.0)),
    "neumann_obstacle": (GeometrySpec(2.0, (1.2,), Obstacle(0.5, ((0, 2 * math.pi, "NEUMANN"),))),
                         (1.0, 2.0), (1.0, 3.0)),
    "mixed_obstacle": (GeometrySpec(2.0, (1.2,), Obstacle(0.5, HALF)), (1.0, 2.0), (1.0, 3.0)),
}


def solve_all(name, s, h=0.2, interface=0):
    spec, c, p = GEOMETRIES[name]
    sk = Skeleton(spec, c, p, WaveContext(s, spec.R), target_h=h)
    g = drive_multitrace(sk, DRIVE, interface)
    cset = CalderonSet(sk)
    return sk, g, cset, direct_solve(sk, g), solve_single_trace_ls(sk, g, cset)


@pytest.mark.parametrize("name", sorted(set(GEOMETRIES) - {"mixed_obstacle"}))
@pytest.mark.parametrize("s", [1.0, 2j])
def test_least_squares_reproduces_direct_traces(name, s):
    sk, g, cset, d, ls = solve_all(name, s)
    tr = d.cauchy_traces()
    assert x_norm_multi(ls.u_sigma - tr, cset) <= 1e-9 * x_norm_multi(tr, cset)
    assert max(multi_trace_residual(tr, cset)) <= 1e-9 * x_norm_multi(tr, cset)
    assert sk.single_trace_defect(ls.u_sigma - g) <= 1e-12


def test_mixed_obstacle_traces_approach_direct_traces():
    """At Dirichlet/Neumann junctions the two discretisations differ; the gap decays like h^(1/2)."""
    spec, c, p = GEOMETRIES["mixed_obstacle"]
    bg = build_background_mesh(spec, 0.2)
    dist = []
    for _ in range(3):
        sk = Skeleton(spec, c, p, WaveContext(1.0, spec.R), background=bg)
        g = drive_multitrace(sk, DRIVE)
        cset = CalderonSet(sk)
        tr = direct_solve(sk, g).cauchy_traces()
        ls = solve_single_trace_ls(sk, g, cset)
        dist.append(x_norm_multi(ls.u_sigma - tr, cset) / x_norm_multi(tr, cset))
        bg = refine(bg)
    assert dist[0] < 0.1
    assert all(a / b > 1.3 for a, b in zip(dist, dist[1:]))


@pytest.mark.parametrize("name", ["two_region", "mixed_obstacle"])
def test_first_kind_agrees_with_least_squares(name):
    sk, g, cset, d, ls = solve_all(name, 1.0)
    fk = solve_single_trace_first_kind(sk, g, cset)
    assert not fk.near_kernel
    assert x_norm_multi(fk.u_sigma - ls.u_sigma, cset) <= 1e-8 * x_norm_multi(ls.u_sigma, cset)


def test_l2_metric_gives_the_same_solution():
    spec, c, p = GEOMETRIES["two_region"]
    sk = Skeleton(spec, c, p, WaveContext(1.0, 2.0), target_h=0.25)
    g = drive_multitrace(sk, DRIVE)
    a = solve_single_trace_ls(sk, g, CalderonSet(sk, "trace")).u_sigma
    b = solve_single_trace_ls(sk, g, CalderonSet(sk, "l2")).u_sigma
    assert np.abs(a.stacked - b.stacked).max() <= 1e-9 * np.abs(a.stacked).max()


def test_drive_on_second_interface():
    sk, g, cset, d, ls = solve_all("three_region", 2j, h=0.15, interface=1)
    spec, c, p = GEOMETRIES["three_region"]
    sol = mie_reference(spec, c, p, 2j, DRIVE, interface=1)
    ex = exact_multitrace(sk, sol)
    assert x_norm_multi(ls.u_sigma - ex, cset) <= 0.05 * x_norm_multi(ex, cset)


@pytest.mark.parametrize("name", ["two_region", "dirichlet_obstacle", "neumann_obstacle"])
def test_direct_solve_converges_to_reference(name):
    spec, c, p = GEOMETRIES[name]
    rows = direct_convergence(spec, c, p, 1.0, DRIVE, 0.2, 3)
    assert 1.7 <= rows[-1]["eoc_l2_error"] <= 2.3
    assert 0.85 <= rows[-1]["eoc_h1_error"] <= 1.15


def test_sie_traces_converge_to_reference():
    spec, c, p = GEOMETRIES["two_region"]
    rows = full_convergence(spec, c, p, 2j, DRIVE, 0.25, 3)
    assert rows[-1]["eoc_x_error_ls"] > 1.7
    assert all(r["sie_direct_distance"] < 1e-9 for r in rows)


def test_reconstruction_matches_direct_solution():
    sk, g, cset, d, ls = solve_all("two_region", 1.0, h=0.15)
    rec = reconstruct_solution(None, ls.u_sigma, sk)
    from sielab.fem import locate_and_interpolate
    rng = np.random.default_rng(0)
    r = np.concatenate([rng.uniform(0.1, 0.9, 10), rng.uniform(1.1, 1.9, 10)])
    th = rng.uniform(0, 2 * np.pi, 20)
    pts = np.column_stack([r * np.cos(th), r * np.sin(th)])
    ref = locate_and_interpolate(d.crack.mesh, d.values, pts)
    got = np.empty(len(pts), dtype=complex)
    got[r < 1] = rec.value(1, pts[r < 1])
    got[r > 1] = rec.value(0, pts[r > 1])
    assert np.abs(got - ref).max() <= 1e-8 * np.abs(ref).max()


def test_homogeneous_data_give_zero():
    spec, c, p = GEOMETRIES["two_region"]
    sk = Skeleton(spec, c, p, WaveContext(1.0, 2.0), target_h=0.3)
    g = sk.zero()
    ls = solve_single_trace_ls(sk, g, CalderonSet(sk))
    assert np.abs(ls.u_sigma.stacked).max() == 0.0


def obstacle_kernel_kappa(bg):
    """Smallest P1 Dirichlet eigenvalue (as a wavenumber) of the obstacle interior."""
    sub = submesh(bg, bg.regions == 1)
    inner = np.setdiff1d(np.arange(sub.n_vertices), np.unique(sub.edges))
    K = stiffness_matrix(sub).toarray()[np.ix_(inner, inner)]
    M = mass_matrix(sub).toarray()[np.ix_(inner, inner)]
    return math.sqrt(sla.eigh(K, M, eigvals_only=True, subset_by_index=[0, 0])[0])


def test_first_kind_flags_the_discrete_kernel():
    spec = GeometrySpec(1.5, (), Obstacle(1.0))
    bg = build_background_mesh(spec, 0.1)
    kappa = obstacle_kernel_kappa(bg)
    assert abs(kappa - 2.404825557695773) < 0.05
    sk = Skeleton(spec, (1.0,), (1.0,), WaveContext(1j * kappa, 1.5), background=bg)
    g = sk.multitrace_from_functions(lambda j, pts: (np.zeros(len(pts)), np.cos(np.arctan2(
        pts[:, 1], pts[:, 0]))))
    cset = CalderonSet(sk)
    with pytest.warns(RuntimeWarning, match="singular"):
        fk = solve_single_trace_first_kind(sk, g, cset)
    assert fk.near_kernel
    ls = solve_single_trace_ls(sk, g, cset)
    assert ls.sigma_min / ls.sigma_max > 1e-3
    away = Skeleton(spec, (1.0,), (1.0,), WaveContext(1j * (kappa + 0.1), 1.5), background=bg)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not solve_single_trace_first_kind(away, away.zero(), CalderonSet(away)).near_kernel


def test_kernel_probe_real_axis_has_no_dip():
    spec = GeometrySpec(1.5, (), Obstacle(1.0))
    rows = kernel_probe(spec, np.linspace(0.9, 1.1, 3), (1.0,), (1.0,), target_h=0.1, axis="real")
    vals = [r.sigma_min_first_kind for r in rows]
    assert max(vals) / min(vals) <= 10


def test_kernel_probe_dip_at_discrete_eigenvalue():
    spec = GeometrySpec(1.5, (), Obstacle(1.0))
    bg = build_background_mesh(spec, 0.1)
    kappa = obstacle_kernel_kappa(bg)
    rows = kernel_probe(spec, [kappa - 0.1, kappa, kappa + 0.1], (1.0,), (1.0,), background=bg)
    f = [r.sigma_min_first_kind for r in rows]
    assert f[1] < 1e-8 * min(f[0], f[2])
    l = [r.ls_residual for r in rows]
    assert max(l) / min(l) < 10


def test_coefficient_count_is_checked():
    spec, c, p = GEOMETRIES["two_region"]
    with pytest.raises(ConfigurationError):
        Skeleton(spec, (1.0,), (1.0,), WaveContext(1.0, 2.0), target_h=0.3)
