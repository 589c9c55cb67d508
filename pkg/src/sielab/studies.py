"""Refinement studies and verification checks shared by the CLI and the demos.

Every study takes explicit parameters and a seed and returns plain rows
(lists of dicts), so results are reproducible and easy to tabulate.
"""

import math

import numpy as np

from . import bessel
from .analytic import RadialProblem, mie_solve, mie_errors
from .calderon import (CauchyData, assemble_calderon, calderon_projector_residual,
                       garding_functional, calderon_symbol)
from .dtn import dtn_eigenvalues
from .errors import ResonanceError
from .fem import (CoefficientField, FeSpace, WaveContext, assemble_l, stiffness_matrix,
                  mass_matrix)
from .mesh import build_background_mesh, build_concentric_mesh, refine
from .potentials import PotentialSetup, ultraweak_residual, INNER
from .trace_norms import NormContext, submesh
from .transmission import (Skeleton, MultiTrace, CalderonSet, direct_solve,
                           solve_single_trace_ls, solve_single_trace_first_kind,
                           multi_trace_residual, x_norm_multi, reconstruct_solution)

SIGN_TEST_S = (0.5, 1.0, 2.0, 1j, 2j, 1 + 1j)


def eoc(errors, hs):
    """Experimental orders between consecutive levels (first entry NaN)."""
    out = [math.nan]
    for (e0, h0), (e1, h1) in zip(zip(errors, hs), zip(errors[1:], hs[1:])):
        if e0 > 0 and e1 > 0 and np.isfinite(e0) and np.isfinite(e1):
            out.append(math.log(e0 / e1) / math.log(h0 / h1))
        else:
            out.append(math.nan)
    return out


def ratios(values):
    """Successive ratios ``v[i] / v[i+1]``."""
    return [a / b if b > 0 else math.inf for a, b in zip(values, values[1:])]


def background_levels(spec, target_h, levels):
    """Nested background meshes: one build followed by uniform refinements."""
    bg = build_background_mesh(spec, target_h)
    out = [bg]
    for _ in range(levels - 1):
        bg = refine(bg)
        out.append(bg)
    return out


def smooth_density(rng, n_modes=3):
    """Random trigonometric polynomial ``theta -> sum a_m e^{i m theta}``, ``|m| <= n_modes``."""
    ms = np.arange(-n_modes, n_modes + 1)
    a = (rng.standard_normal(len(ms)) + 1j * rng.standard_normal(len(ms))) / (1 + np.abs(ms))
    return lambda th: np.exp(1j * np.outer(th, ms)) @ a


# ---------------------------------------------------------------------------
# oracle problems
# ---------------------------------------------------------------------------

def mie_reference(spec, c, p, s, drive, interface=0):
    """Reference solution for jump data ``drive = {m: (a_m, b_m)}`` on ``interface``.

    Returns None when the geometry has no separable reference (an obstacle
    with mixed boundary arcs).
    """
    obstacle = None
    if spec.obstacle is not None:
        kinds = {k for _, _, k in spec.obstacle.arcs}
        if len(kinds) != 1:
            return None
        obstacle = (spec.obstacle.radius, kinds.pop())
    prob = RadialProblem(s, spec.R, spec.interface_radii, tuple(c), tuple(p), obstacle=obstacle,
                         drives={m: dict(jumps={interface: ab}) for m, ab in drive.items()})
    return mie_solve(prob)


def drive_multitrace(sk, drive, interface=0):
    """Multi-trace carrying the jump data on the inner side of ``interface``, zero elsewhere."""
    data = []
    a_reg = sk.J - interface
    for j, setup in enumerate(sk.setups):
        gD = np.zeros(setup.n_gamma, dtype=complex)
        gN = np.zeros(setup.n_gamma, dtype=complex)
        if j == a_reg:
            th = setup.theta
            for (k, side), seg in zip(sk.circles[j], setup.segments):
                if k == interface and side == INNER:
                    for m, (a, b) in drive.items():
                        gD[seg] += a * np.exp(1j * m * th[seg])
                        gN[seg] += b * np.exp(1j * m * th[seg])
        data.append(CauchyData(j, gD, gN))
    return MultiTrace(tuple(data))


def exact_multitrace(sk, sol):
    """Cauchy data of a reference solution sampled at the interface nodes."""
    return sk.multitrace_from_functions(
        lambda j, pts: (sol.value(pts, region=j), sk.c[j] * sol.radial_derivative(pts, j)))


# ---------------------------------------------------------------------------
# studies
# ---------------------------------------------------------------------------

def direct_convergence(spec, c, p, s, drive, target_h, levels, interface=0, M=None):
    """H1-seminorm and L2 errors of the direct solve against the reference."""
    wave = WaveContext(s, spec.R)
    sol = mie_reference(spec, c, p, s, drive, interface)
    rows = []
    for lev, bg in enumerate(background_levels(spec, target_h, levels)):
        sk = Skeleton(spec, c, p, wave, background=bg, M=M)
        d = direct_solve(sk, drive_multitrace(sk, drive, interface))
        err = mie_errors(d.crack.mesh, d.values, sol) if sol is not None else \
            {"l2": math.nan, "h1": math.nan}
        rows.append({"level": lev, "h": bg.h, "n_triangles": bg.n_triangles,
                     "h1_error": err["h1"], "l2_error": err["l2"]})
    _add_eoc(rows, ["h1_error", "l2_error"])
    return rows


def full_convergence(spec, c, p, s, drive, target_h, levels, interface=0, M=None,
                     metric="trace", seed=0):
    """Direct solve, least-squares and first-kind skeleton solves on nested meshes.

    Columns: errors against the reference (``h1_error``, ``l2_error`` of the
    direct solve; relative X-norm trace errors of both skeleton solutions),
    the X-distance between the least-squares traces and the direct traces,
    the largest Calderón projector residual and the first-kind flag.
    """
    wave = WaveContext(s, spec.R)
    sol = mie_reference(spec, c, p, s, drive, interface)
    rng = np.random.default_rng(seed)
    rows = []
    for lev, bg in enumerate(background_levels(spec, target_h, levels)):
        sk = Skeleton(spec, c, p, wave, background=bg, M=M)
        g = drive_multitrace(sk, drive, interface)
        d = direct_solve(sk, g)
        tr = d.cauchy_traces()
        cset = CalderonSet(sk, metric=metric)
        ls = solve_single_trace_ls(sk, g, cset)
        fk = solve_single_trace_first_kind(sk, g, cset)
        row = {"level": lev, "h": bg.h, "n_triangles": bg.n_triangles}
        if sol is not None:
            err = mie_errors(d.crack.mesh, d.values, sol)
            ex = exact_multitrace(sk, sol)
            nex = x_norm_multi(ex, cset)
            row.update(h1_error=err["h1"], l2_error=err["l2"],
                       x_error_direct=x_norm_multi(tr - ex, cset) / nex,
                       x_error_ls=x_norm_multi(ls.u_sigma - ex, cset) / nex,
                       x_error_fk=(math.nan if fk.near_kernel else
                                   x_norm_multi(fk.u_sigma - ex, cset) / nex))
        else:
            row.update(h1_error=math.nan, l2_error=math.nan, x_error_direct=math.nan,
                       x_error_ls=math.nan, x_error_fk=math.nan)
        ntr = x_norm_multi(tr, cset)
        row["sie_direct_distance"] = x_norm_multi(ls.u_sigma - tr, cset) / ntr if ntr else 0.0
        row["direct_multitrace_residual"] = (max(multi_trace_residual(tr, cset)) / ntr
                                             if ntr else 0.0)
        nls = x_norm_multi(ls.u_sigma, cset)
        row["fk_ls_distance"] = (math.nan if fk.near_kernel else
                                 x_norm_multi(fk.u_sigma - ls.u_sigma, cset) / nls if nls else 0.0)
        res = 0.0
        for j, C in enumerate(cset.matrices):
            n = C.n
            x = rng.standard_normal(2 * n) + 1j * rng.standard_normal(2 * n)
            res = max(res, calderon_projector_residual(x, C, sk.norm_contexts[j]))
        row["projector_residual"] = res
        row["first_kind_sigma_min"] = fk.sigma_min / fk.sigma_max
        row["first_kind_flag"] = int(fk.near_kernel)
        rows.append(row)
    _add_eoc(rows, ["h1_error", "l2_error", "x_error_direct", "x_error_ls", "x_error_fk"])
    return rows


def _add_eoc(rows, keys):
    hs = [r["h"] for r in rows]
    for k in keys:
        for r, e in zip(rows, eoc([r[k] for r in rows], hs)):
            r["eoc_" + k] = e


def potential_jump_study(R=2.0, radius=1.0, c=1.0, p=1.0, s=1.0, target_h=0.2, levels=3,
                         seed=0, ultraweak_trials=5):
    """Jump conditions of the single and double layer potentials on one circle.

    For a seeded smooth density ``g`` each level records the Dirichlet jumps
    (exact constraints), the variational Neumann jump defects (exact by
    construction), the element-flux Neumann jump errors in ``L2(Gamma)`` and
    the ultraweak residual of the double layer.
    """
    from .mesh import GeometrySpec
    spec = GeometrySpec(R, (radius,))
    wave = WaveContext(s, R)
    dens = smooth_density(np.random.default_rng(seed))
    rows = []
    for lev, bg in enumerate(background_levels(spec, target_h, levels)):
        st = PotentialSetup(bg, [(0, INNER)], c, p, wave)
        g = dens(st.theta)
        uS = st.embed(st.single_layer(g))
        uD = st.double_layer(g)
        jS = st.jumps(uS)
        jD = st.jumps(uD)
        ng = st.gamma_l2(g)
        rows.append({
            "level": lev, "h": bg.h,
            "S_dirichlet_jump": float(np.abs(jS[0]).max()),
            "S_neumann_jump_variational": float(np.abs(jS[1] - g).max() / np.abs(g).max()),
            "S_neumann_jump_element": st.element_neumann_jump_error(uS, g) / ng,
            "D_dirichlet_jump": float(np.abs(jD[0] + g).max()),
            "D_neumann_jump_variational": float(np.abs(jD[1]).max() / np.abs(g).max()),
            "D_neumann_jump_element": st.element_neumann_jump_error(uD, np.zeros_like(g)) / ng,
            "D_ultraweak": ultraweak_residual(g, uD, st, trial_count=ultraweak_trials, seed=seed),
        })
    return rows


def calderon_study(R=2.0, radius=1.0, c=1.0, p=1.0, s=1.0, target_h=0.2, levels=3, seed=0,
                   n_random=20, symbol_modes=4):
    """Projector identity, symbol consistency and Gårding positivity per level.

    ``projector_residual`` is the largest relative X-norm defect of
    :math:`\\mathcal C^2 - 1/4` over random nodal data; ``symbol_error`` the
    largest relative X-norm distance between the discrete operator applied to
    interpolated smooth data and the interpolated continuum result;
    ``garding_min`` the smallest value of the Gårding functional.
    """
    from .mesh import GeometrySpec
    spec = GeometrySpec(R, (radius,))
    wave = WaveContext(s, R)
    rows = []
    syms = {m: calderon_symbol(m, s, radius, c, p, INNER, R)
            for m in range(-symbol_modes, symbol_modes + 1)}
    for lev, bg in enumerate(background_levels(spec, target_h, levels)):
        rng = np.random.default_rng(seed)
        st = PotentialSetup(bg, [(0, INNER)], c, p, wave)
        C = assemble_calderon(0, st)
        ctx = NormContext(submesh(bg, bg.regions >= 1), [st.gamma_points()], wave)
        n = C.n
        proj, gmin, serr = 0.0, math.inf, 0.0
        for _ in range(n_random):
            x = rng.standard_normal(2 * n) + 1j * rng.standard_normal(2 * n)
            proj = max(proj, calderon_projector_residual(x, C, ctx))
            gmin = min(gmin, garding_functional(CauchyData.from_stacked(0, x), st, C))
        th = st.theta
        for _ in range(n_random):
            aD = rng.standard_normal(len(syms)) + 1j * rng.standard_normal(len(syms))
            aN = rng.standard_normal(len(syms)) + 1j * rng.standard_normal(len(syms))
            gD = np.zeros(n, dtype=complex)
            gN = np.zeros(n, dtype=complex)
            eD = np.zeros(n, dtype=complex)
            eN = np.zeros(n, dtype=complex)
            for (m, S), a, b in zip(syms.items(), aD, aN):
                e = np.exp(1j * m * th)
                gD += a * e
                gN += b * e
                out = S @ np.array([a, b])
                eD += out[0] * e
                eN += out[1] * e
            Cg = C.matrix @ np.concatenate([gD, gN])
            num = math.hypot(ctx.h_half_norm(Cg[:n] - eD), ctx.h_minus_half_norm(Cg[n:] - eN))
            den = math.hypot(ctx.h_half_norm(gD), ctx.h_minus_half_norm(gN))
            serr = max(serr, num / den)
        rows.append({"level": lev, "h": bg.h, "projector_residual": proj,
                     "symbol_error": serr, "garding_min": gmin})
    return rows


def trace_norm_study(s=1.0, target_h=0.2, levels=5):
    """Minimal-extension norm of ``g = 1`` on the unit circle, unit-disk side."""
    from .mesh import GeometrySpec
    spec = GeometrySpec(1.0, ())
    rows = []
    wave = WaveContext(s, 1.0)
    for lev, bg in enumerate(background_levels(spec, target_h, levels)):
        nodes = bg.tag_nodes("OUTER")
        ctx = NormContext(bg, [bg.vertices[nodes]], wave)
        one = np.ones(len(nodes))
        rows.append({"level": lev, "h": bg.h, "h_half_sq": ctx.h_half_norm(one) ** 2,
                     "h_minus_half": ctx.h_minus_half_norm(one)})
    return rows


def trace_norm_checks(ctx, n_samples=20, seed=0):
    """Duality and trace-inequality defects of one :class:`NormContext`.

    Returns ``(cs_violation, riesz_defect, trace_ratio)``: the largest
    relative excess of ``|<h, g>|`` over ``||h||_{-1/2} ||g||_{1/2}`` for
    random pairs, the largest relative gap from equality when ``g`` is the
    Riesz trace of ``h``, and the largest ratio
    ``||v|_Gamma||_{1/2} / ||v||_{H1,s}`` over random side-mesh fields.
    """
    rng = np.random.default_rng(seed)
    n = ctx.n_gamma
    cs, rz, tr = -math.inf, 0.0, 0.0
    for _ in range(n_samples):
        h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        bound = ctx.h_minus_half_norm(h) * ctx.h_half_norm(g)
        cs = max(cs, (abs(ctx.pairing(h, g)) - bound) / bound)
        gr = ctx.riesz(np.conj(h))
        bound = ctx.h_minus_half_norm(h) * ctx.h_half_norm(gr)
        rz = max(rz, abs(abs(ctx.pairing(h, gr)) - bound) / bound)
        v = rng.standard_normal(ctx.mesh.n_vertices) + 1j * rng.standard_normal(ctx.mesh.n_vertices)
        tr = max(tr, ctx.h_half_norm(v[ctx.gamma]) / ctx.energy_norm(v))
    return cs, rz, tr


def coercivity_check(spec, c, p, s, target_h, n_samples=100, seed=0, M=None):
    """Smallest ratio ``Re l(v,v) / (min(a_min, p_min) ||v||_{H1,s}^2)`` over random ``v``."""
    mesh = build_concentric_mesh(spec, target_h)
    coeff = CoefficientField.isotropic(c, p)
    wave = WaveContext(s, spec.R)
    space = FeSpace(mesh, dirichlet_tags=())
    L = assemble_l(space, coeff, wave, M=M)
    K, Mm = stiffness_matrix(mesh), mass_matrix(mesh)
    rng = np.random.default_rng(seed)
    lo = min(coeff.a_min, coeff.p_min)
    worst = math.inf
    for _ in range(n_samples):
        v = rng.standard_normal(mesh.n_vertices) + 1j * rng.standard_normal(mesh.n_vertices)
        lhs = L.form(v, v).real
        nrm = float(np.real(np.conj(v) @ (K @ v)) + abs(s) ** 2 * np.real(np.conj(v) @ (Mm @ v)))
        worst = min(worst, lhs / (lo * nrm))
    return worst


def dtn_sign_check(order_max=64, s_values=SIGN_TEST_S, R=1.0):
    """Largest ``Re d_m`` and largest ``sign(Im s) Im d_m`` over the test set.

    The first must be ``<= 0``, the second ``< 0``.
    """
    re_max, im_max = -math.inf, -math.inf
    for s in s_values:
        d = dtn_eigenvalues(order_max, s, R)
        re_max = max(re_max, float(d.real.max()))
        if complex(s).imag != 0:
            im_max = max(im_max, float((np.sign(complex(s).imag) * d.imag).max()))
    return re_max, im_max


def wronskian_check(n=200, seed=0):
    """Largest defect ``|x (I_m K_m' - I_m' K_m) + 1|`` over random real samples."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        m = int(rng.integers(0, 20))
        x = float(rng.uniform(0.1, 50.0))
        i, k = bessel.mod_bessel_i(m, x), bessel.mod_bessel_k(m, x)
        ip, kp = bessel.mod_bessel_i_prime(m, x), bessel.mod_bessel_k_prime(m, x)
        worst = max(worst, abs((i * kp - ip * k) * x + 1.0))
    return worst


def extension_independence(spec, c, p, s, drive, target_h, interface=0, alt=None):
    """Largest relative L2 difference on each region between two admissible extensions."""
    wave = WaveContext(s, spec.R)
    bg = build_background_mesh(spec, target_h)
    sk = Skeleton(spec, c, p, wave, background=bg)
    g = drive_multitrace(sk, drive, interface)
    cset = CalderonSet(sk)
    ls = solve_single_trace_ls(sk, g, cset)
    rec = reconstruct_solution(None, ls.u_sigma, sk)
    regions = np.unique(bg.regions).tolist()
    worst = 0.0
    for j in range(sk.J + 1):
        cc = {r: (c[j] if r == j else (alt or 3.0)) for r in regions}
        pp = {r: (p[j] if r == j else (alt or 3.0) / 2) for r in regions}
        if j != 0:
            cc[0], pp[0] = 1.0, 1.0
        ext = CoefficientField(cc, pp)
        st = PotentialSetup(bg, sk.circles[j], c[j], p[j], wave, coeff=ext)
        u2 = st.combined(ls.u_sigma[j].g_D, ls.u_sigma[j].g_N)
        mask = st.crack.mesh.regions == j
        tri = st.crack.mesh.triangles[mask]
        nodes = np.unique(tri)
        diff = np.abs(u2[nodes] - rec.fields[j][nodes]).max()
        worst = max(worst, float(diff / np.abs(rec.fields[j][nodes]).max()))
    return worst


# ---------------------------------------------------------------------------
# verification suite
# ---------------------------------------------------------------------------

class Check:
    """One verification row: ``value`` compared with ``threshold`` by ``relation``."""

    RELATIONS = {"<=": lambda v, t: v <= t, "<": lambda v, t: v < t,
                 ">=": lambda v, t: v >= t, ">": lambda v, t: v > t}

    def __init__(self, name, value, relation, threshold):
        self.name, self.value, self.relation, self.threshold = name, float(value), relation, threshold
        self.passed = bool(np.isfinite(self.value) and self.RELATIONS[relation](self.value, threshold))


def verify_suite(cfg, levels=None, seed=None, metric=None):
    """Run every assertable check for the configured problem.

    Ratio checks need at least three nested levels, so fewer configured
    levels are raised to three.  Returns a list of :class:`Check`.
    """
    levels = max(levels or cfg.levels, 3)
    seed = cfg.seed if seed is None else seed
    metric = metric or cfg.metric
    spec, c, p, s = cfg.spec, cfg.c, cfg.p, cfg.s
    J = len(spec.interface_radii)
    out = []

    def add(*args):
        out.append(Check(*args))

    add("bessel_wronskian_defect", wronskian_check(seed=seed), "<=", 1e-10)
    re_max, im_max = dtn_sign_check()
    add("dtn_re_max", re_max, "<=", 0.0)
    add("dtn_im_sign_max", im_max, "<", 0.0)
    s_real = s.real if s.imag == 0 else 1.0
    for i, h in enumerate((cfg.target_h, cfg.target_h / 2)):
        add(f"coercivity_min_ratio_mesh{i}",
            coercivity_check(spec, c, p, s_real, h, seed=seed + i, M=cfg.M), ">=", 1.0)

    # layer potentials on the first interface (or a circle of radius R/2)
    radius = spec.interface_radii[0] if J else spec.R / 2
    cj, pj = (c[J], p[J]) if J else (c[0], p[0])
    rows = potential_jump_study(spec.R, radius, cj, pj, s, cfg.target_h, levels, seed=seed)
    add("single_layer_dirichlet_jump", max(r["S_dirichlet_jump"] for r in rows), "<=", 0.0)
    add("single_layer_neumann_jump_variational",
        max(r["S_neumann_jump_variational"] for r in rows), "<=", 1e-10)
    add("single_layer_neumann_jump_ratio",
        min(ratios([r["S_neumann_jump_element"] for r in rows])), ">=", 1.7)
    add("double_layer_dirichlet_jump_defect", max(r["D_dirichlet_jump"] for r in rows), "<=", 1e-13)
    add("double_layer_neumann_jump_ratio",
        min(ratios([r["D_neumann_jump_element"] for r in rows])), ">=", 1.7)
    add("double_layer_ultraweak_ratio", min(ratios([r["D_ultraweak"] for r in rows])), ">=", 1.7)

    rows = calderon_study(spec.R, radius, cj, pj, s, cfg.target_h, levels, seed=seed)
    add("calderon_projector_residual", max(r["projector_residual"] for r in rows), "<=", 1e-10)
    add("calderon_symbol_error_ratio", min(ratios([r["symbol_error"] for r in rows])), ">=", 1.7)
    add("calderon_garding_min", min(r["garding_min"] for r in rows), ">", 0.0)

    bg = build_background_mesh(spec, cfg.target_h)
    inside = bg.regions >= 1 if J else np.ones(bg.n_triangles, bool)
    nodes = bg.tag_nodes("IFACE:0") if J else bg.tag_nodes("OUTER")
    ctx = NormContext(submesh(bg, inside), [bg.vertices[nodes]], WaveContext(s, spec.R))
    cs, rz, tr = trace_norm_checks(ctx, seed=seed)
    add("trace_cauchy_schwarz_excess", cs, "<=", 1e-12)
    add("trace_riesz_equality_defect", rz, "<=", 1e-10)
    add("trace_inequality_ratio", tr, "<=", 1.0 + 1e-12)

    if J and cfg.drive:
        rows = full_convergence(spec, c, p, s, cfg.drive, cfg.target_h, levels,
                                cfg.drive_interface, cfg.M, metric, seed)
        dist = [r["sie_direct_distance"] for r in rows]
        if spec.obstacle is not None and len({k for _, _, k in spec.obstacle.arcs}) > 1:
            # the two discretizations differ at Dirichlet/Neumann junctions
            add("sie_direct_distance_ratio", min(ratios(dist)), ">=", 1.3)
        else:
            add("sie_direct_distance", max(dist), "<=", 1e-8)
        add("direct_multitrace_residual",
            max(r["direct_multitrace_residual"] for r in rows), "<=", 1e-8)
        add("calderon_projector_residual_all_regions",
            max(r["projector_residual"] for r in rows), "<=", 1e-10)
        if s.real > 0:
            add("first_kind_vs_least_squares", max(r["fk_ls_distance"] for r in rows), "<=", 1e-8)
        last = rows[-1]
        if np.isfinite(last["h1_error"]):
            add("mie_h1_eoc_deviation", abs(last["eoc_h1_error"] - 1.0), "<=", 0.15)
            add("mie_l2_eoc_deviation", abs(last["eoc_l2_error"] - 2.0), "<=", 0.3)
            add("mie_x_error_ratio", min(ratios([r["x_error_ls"] for r in rows])), ">=", 1.7)
    return out


__all__ = [n for n in dir() if not n.startswith("_")]
