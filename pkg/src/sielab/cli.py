"""Command-line front end ``sie``.

::

    sie verify|solve|convergence|dtn-table|calderon-test|kernel-probe
        [--config FILE] [--out DIR] [--levels N] [--seed S] [--metric trace|l2] [--dat]

Every subcommand writes one CSV table into ``--out`` (and, with ``--dat``, a
whitespace-separated copy for gnuplot).  Tables start with a comment line
naming the table and its schema version.  Exit codes: 0 success, 1 failed
check, 2 configuration error, 3 solver error.
"""

import argparse
import math
import os
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .config import DEFAULT_CONFIG, load_config, parse_config
from .dtn import dtn_eigenvalues
from .errors import ConfigurationError, DomainError, MeshError, NumericError, SolverError
from .fem import WaveContext
from .mesh import GeometrySpec, Obstacle, build_background_mesh, check_mesh, load_mesh
from . import studies

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# table output
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v) + 0.0          # no negative zeros in tables
    return "nan" if math.isnan(v) else f"{v:.12e}"


def write_table(out_dir, name, columns, rows, dat=False, meta=""):
    """Write ``rows`` (sequences matching ``columns``) as ``name.csv`` (and ``name.dat``)."""
    os.makedirs(out_dir, exist_ok=True)
    head = f"# sielab {name} v{SCHEMA_VERSION}" + (f" {meta}" if meta else "")
    path = os.path.join(out_dir, name + ".csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(head + "\n")
        fh.write(",".join(columns) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(v) for v in r) + "\n")
    if dat:
        with open(os.path.join(out_dir, name + ".dat"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(head + "\n# " + " ".join(columns) + "\n")
            for r in rows:
                fh.write(" ".join(_fmt(v) for v in r) + "\n")
    return path


def _dict_rows(rows, columns):
    return [[r[c] for c in columns] for r in rows]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_verify(cfg, args):
    checks = studies.verify_suite(cfg, levels=args.levels, seed=args.seed, metric=args.metric)
    seed = cfg.seed if args.seed is None else args.seed
    write_table(args.out, "verify_report", ["name", "value", "threshold", "pass"],
                [[c.name, c.value, f"{c.relation}{_fmt(c.threshold)}", c.passed] for c in checks],
                dat=args.dat, meta=f"seed={seed}")
    failed = [c for c in checks if not c.passed]
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.value:.3e} {c.relation} {c.threshold:g}")
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


CONVERGENCE_COLUMNS = [
    "level", "h", "n_triangles", "h1_error", "eoc_h1_error", "l2_error", "eoc_l2_error",
    "x_error_direct", "eoc_x_error_direct", "x_error_ls", "eoc_x_error_ls",
    "x_error_fk", "eoc_x_error_fk", "sie_direct_distance", "projector_residual",
    "first_kind_sigma_min", "first_kind_flag",
]


def cmd_convergence(cfg, args):
    rows = _convergence_rows(cfg, args)
    write_table(args.out, "convergence", CONVERGENCE_COLUMNS, _dict_rows(rows, CONVERGENCE_COLUMNS),
                dat=args.dat, meta=f"s={cfg.s}")
    for r in rows:
        print(f"level {r['level']}: h={r['h']:.4f}  H1 {r['h1_error']:.3e}  L2 {r['l2_error']:.3e}  "
              f"X(LS) {r['x_error_ls']:.3e}")
    return EXIT_OK


def _convergence_rows(cfg, args):
    levels = args.levels or cfg.levels
    if not cfg.spec.interface_radii or not cfg.drive:
        # without interfaces or jump data the solution vanishes identically
        return [dict({k: 0.0 for k in CONVERGENCE_COLUMNS}, level=lev, h=bg.h,
                     n_triangles=bg.n_triangles, first_kind_flag=0,
                     **{k: math.nan for k in CONVERGENCE_COLUMNS if k.startswith("eoc_")})
                for lev, bg in enumerate(studies.background_levels(cfg.spec, cfg.target_h, levels))]
    return studies.full_convergence(cfg.spec, cfg.c, cfg.p, cfg.s, cfg.drive, cfg.target_h, levels,
                                    cfg.drive_interface, cfg.M, args.metric or cfg.metric,
                                    cfg.seed if args.seed is None else args.seed)


def cmd_solve(cfg, args):
    from .transmission import Skeleton, CalderonSet, direct_solve, solve_single_trace_ls
    from .transmission import x_norm_multi
    wave = WaveContext(cfg.s, cfg.spec.R)
    bg = _background(cfg)
    sk = Skeleton(cfg.spec, cfg.c, cfg.p, wave, background=bg, M=cfg.M)
    g = studies.drive_multitrace(sk, cfg.drive, cfg.drive_interface)
    d = direct_solve(sk, g)
    cm = d.crack.mesh
    write_table(args.out, "solution", ["node", "x", "y", "re_u", "im_u"],
                [[i, x, y, u.real, u.imag] for i, ((x, y), u) in enumerate(zip(cm.vertices, d.values))],
                dat=args.dat, meta=f"s={cfg.s}")
    cset = CalderonSet(sk, metric=args.metric or cfg.metric)
    ls = solve_single_trace_ls(sk, g, cset)
    rows = []
    for j, setup in enumerate(sk.setups):
        pts = setup.gamma_points()
        for (k, side), seg in zip(sk.circles[j], setup.segments):
            for (x, y), a, b in zip(pts[seg], ls.u_sigma[j].g_D[seg], ls.u_sigma[j].g_N[seg]):
                rows.append([j, k, side, x, y, a.real, a.imag, b.real, b.imag])
    write_table(args.out, "traces",
                ["region", "interface", "side", "x", "y", "re_gD", "im_gD", "re_gN", "im_gN"],
                rows, dat=args.dat, meta=f"s={cfg.s}")
    tr = d.cauchy_traces()
    ntr = x_norm_multi(tr, cset)
    dist = x_norm_multi(ls.u_sigma - tr, cset) / ntr if ntr else 0.0
    print(f"{cm.n_triangles} triangles, {sk.n_single} single-trace unknowns")
    print(f"least-squares residual {ls.residual:.3e}, relative distance to direct traces {dist:.3e}")
    return EXIT_OK


def cmd_dtn_table(cfg, args):
    M = cfg.M if cfg.M is not None else 8
    d = dtn_eigenvalues(M, cfg.s, cfg.spec.R)
    write_table(args.out, "dtn_table", ["m", "re_d", "im_d"],
                [[m, v.real, v.imag] for m, v in enumerate(d)], dat=args.dat,
                meta=f"s={cfg.s} R={cfg.spec.R:g}")
    return EXIT_OK


def cmd_calderon_test(cfg, args):
    J = len(cfg.spec.interface_radii)
    radius = cfg.spec.interface_radii[0] if J else cfg.spec.R / 2
    cj, pj = (cfg.c[J], cfg.p[J]) if J else (cfg.c[0], cfg.p[0])
    rows = studies.calderon_study(cfg.spec.R, radius, cj, pj, cfg.s, cfg.target_h,
                                  args.levels or cfg.levels,
                                  seed=cfg.seed if args.seed is None else args.seed)
    cols = ["h", "projector_residual", "garding_min", "symbol_error"]
    write_table(args.out, "calderon_test", cols, _dict_rows(rows, cols), dat=args.dat,
                meta=f"s={cfg.s}")
    return EXIT_OK


def cmd_kernel_probe(cfg, args):
    from .transmission import kernel_probe
    pr = cfg.probe
    spec = cfg.spec
    c, p = cfg.c, cfg.p
    if spec.obstacle is None:
        spec = GeometrySpec(pr["R"], (), Obstacle(1.0))
        c, p = (c[0],), (p[0],)
    kappas = np.linspace(pr["kappa_min"], pr["kappa_max"], pr["points"])
    workers = min(len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else 1, 8)
    rows = kernel_probe(spec, kappas, c, p, target_h=pr["target_h"], M=cfg.M, axis=pr["axis"],
                        workers=workers)
    write_table(args.out, "kernel_probe", ["kappa", "sigma_min_first_kind", "ls_residual"],
                [[r.kappa, r.sigma_min_first_kind, r.ls_residual] for r in rows], dat=args.dat,
                meta=f"axis={pr['axis']}")
    best = min(rows, key=lambda r: r.sigma_min_first_kind)
    print(f"smallest first-kind singular value {best.sigma_min_first_kind:.3e} at kappa={best.kappa:.4f}")
    return EXIT_OK


def _background(cfg):
    if cfg.mesh_file:
        mesh = load_mesh(cfg.mesh_file)
        problems = check_mesh(mesh, cfg.spec)
        if problems:
            raise MeshError("mesh file: " + "; ".join(problems))
        return mesh
    return build_background_mesh(cfg.spec, cfg.target_h)


COMMANDS = {
    "verify": cmd_verify,
    "solve": cmd_solve,
    "convergence": cmd_convergence,
    "dtn-table": cmd_dtn_table,
    "calderon-test": cmd_calderon_test,
    "kernel-probe": cmd_kernel_probe,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="sie", description="Layer potentials and skeleton integral "
                                 "equations for 2D Helmholtz transmission problems.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="configuration file (default: built-in two-region problem)")
    ap.add_argument("--out", help="output directory (default: [output] dir, else the current "
                    "directory)")
    ap.add_argument("--levels", type=int, help="number of refinement levels")
    ap.add_argument("--seed", type=int, help="seed for randomized checks")
    ap.add_argument("--metric", choices=("trace", "l2"), help="least-squares residual metric")
    ap.add_argument("--dat", action="store_true", help="also write gnuplot-compatible .dat files")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else parse_config(DEFAULT_CONFIG)
        args.out = args.out or cfg.out or "."
        if args.levels is not None and args.levels < 1:
            raise ConfigurationError("--levels must be at least 1")
    except ConfigurationError as exc:
        print(f"sie: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with threadpool_limits(limits=1):
            return COMMANDS[args.command](cfg, args)
    except (ConfigurationError, MeshError, DomainError) as exc:
        print(f"sie: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, NumericError) as exc:
        print(f"sie: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
