import csv
import math
import subprocess
import sys

import numpy as np
import pytest
import scipy.linalg as sla

from sielab import cli, studies
from sielab.config import DEFAULT_CONFIG, parse_config
from sielab.errors import SolverError
from sielab.fem import mass_matrix, stiffness_matrix
from sielab.trace_norms import submesh


def read_table(path):
    with open(path, encoding="utf-8") as fh:
        head = fh.readline()
        rows = list(csv.DictReader(fh))
    return head, rows


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(tmp_path, *argv):
    return cli.main([*argv, "--out", str(tmp_path / "out")])


def test_console_script_is_installed():
    out = subprocess.run([sys.executable, "-m", "sielab.cli", "--version"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.startswith("sie ")


@pytest.mark.parametrize("text, code", [
    ("[wave]\ns_re = 0\ns_im = 0\n", "C1: wavenumber must be nonzero"),
    ("[coefficients]\nc = 1\np = 0\n", "C2"),
    ("[geometry]\nR = 1\ninterfaces = 1.5\n[coefficients]\nc = 1,1\np = 1,1\n", "C3"),
])
def test_config_errors_exit_2_and_name_the_assumption(tmp_path, capsys, text, code):
    assert run(tmp_path, "verify", "--config", write_cfg(tmp_path, text)) == cli.EXIT_CONFIG
    assert code in capsys.readouterr().err
    assert not (tmp_path / "out" / "verify_report.csv").exists()


def test_bad_levels_and_missing_config_exit_2(tmp_path):
    assert run(tmp_path, "dtn-table", "--levels", "0") == cli.EXIT_CONFIG
    assert run(tmp_path, "dtn-table", "--config", str(tmp_path / "nope.cfg")) == cli.EXIT_CONFIG


def test_unusable_mesh_file_exits_2(tmp_path):
    mesh = tmp_path / "broken.mesh"
    mesh.write_text("not a mesh\n")
    cfg = write_cfg(tmp_path, DEFAULT_CONFIG.replace("interfaces = 1.0",
                                                     f"interfaces = 1.0\nmesh_file = {mesh}"))
    assert run(tmp_path, "solve", "--config", cfg) == cli.EXIT_CONFIG


def test_solver_errors_exit_3(tmp_path, monkeypatch, capsys):
    def boom(cfg, args):
        raise SolverError("factorization failed")
    monkeypatch.setitem(cli.COMMANDS, "solve", boom)
    assert run(tmp_path, "solve") == cli.EXIT_SOLVER
    assert "factorization failed" in capsys.readouterr().err


def test_failed_check_exits_1(tmp_path, monkeypatch):
    monkeypatch.setattr(studies, "verify_suite",
                        lambda *a, **k: [studies.Check("ok", 0.0, "<=", 1.0),
                                         studies.Check("bad", 2.0, "<=", 1.0)])
    assert run(tmp_path, "verify") == cli.EXIT_FAIL
    _, rows = read_table(tmp_path / "out" / "verify_report.csv")
    assert [r["pass"] for r in rows] == ["1", "0"]
    assert rows[1]["threshold"] == "<=1.000000000000e+00"


def test_verify_default_config_passes_and_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["verify", "--out", str(a), "--seed", "3"]) == cli.EXIT_OK
    assert cli.main(["verify", "--out", str(b), "--seed", "3"]) == cli.EXIT_OK
    assert (a / "verify_report.csv").read_bytes() == (b / "verify_report.csv").read_bytes()
    head, rows = read_table(a / "verify_report.csv")
    assert head.startswith("# sielab verify_report v1") and "seed=3" in head
    assert len(rows) >= 20 and all(r["pass"] == "1" for r in rows)
    names = " ".join(r["name"] for r in rows)
    for topic in ("dtn", "coerciv", "garding", "jump", "projector", "trace"):
        assert topic in names.lower()


def test_dtn_table(tmp_path):
    cfg = write_cfg(tmp_path, "[geometry]\nR = 1.0\n[solver]\nM = 8\n")
    assert run(tmp_path, "dtn-table", "--config", cfg, "--dat") == cli.EXIT_OK
    _, rows = read_table(tmp_path / "out" / "dtn_table.csv")
    assert [int(r["m"]) for r in rows] == list(range(9))
    # -K_1(1)/K_0(1), independently from mpmath in the bessel tests
    assert math.isclose(float(rows[0]["re_d"]), -1.4296253982604017, rel_tol=1e-10)
    assert float(rows[0]["im_d"]) == 0.0
    assert all(float(r["re_d"]) < 0 for r in rows)
    assert (tmp_path / "out" / "dtn_table.dat").exists()


def test_convergence_single_region_without_data_is_zero(tmp_path):
    assert run(tmp_path, "convergence", "--config", write_cfg(tmp_path, ""),
               "--levels", "2") == cli.EXIT_OK
    _, rows = read_table(tmp_path / "out" / "convergence.csv")
    assert len(rows) == 2
    for r in rows:
        for k in ("h1_error", "l2_error", "x_error_direct", "x_error_ls", "x_error_fk",
                  "sie_direct_distance", "projector_residual"):
            assert float(r[k]) == 0.0


def test_convergence_two_region(tmp_path):
    assert run(tmp_path, "convergence", "--levels", "3") == cli.EXIT_OK
    _, rows = read_table(tmp_path / "out" / "convergence.csv")
    assert rows[0]["eoc_l2_error"] == "nan"
    assert 1.6 < float(rows[-1]["eoc_l2_error"]) < 2.4
    assert 0.8 < float(rows[-1]["eoc_h1_error"]) < 1.2
    assert all(r["first_kind_flag"] == "0" for r in rows)


def test_convergence_flags_first_kind_at_the_obstacle_kernel(tmp_path):
    spec_text = """
[geometry]
R = 2.0
interfaces = 1.5
obstacle_radius = 1.0
[coefficients]
c = 1, 1
p = 1, 1
[mesh]
target_h = 0.15
[data]
modes = 0, 1
jump_D = 1, 0.5
jump_N = 0.5, 1
"""
    cfg = parse_config(spec_text)
    bg = studies.background_levels(cfg.spec, cfg.target_h, 1)[0]
    sub = submesh(bg, bg.regions == cfg.J + 1)
    inner = np.setdiff1d(np.arange(sub.n_vertices), np.unique(sub.edges))
    K = stiffness_matrix(sub).toarray()[np.ix_(inner, inner)]
    M = mass_matrix(sub).toarray()[np.ix_(inner, inner)]
    kappa = math.sqrt(sla.eigh(K, M, eigvals_only=True, subset_by_index=[0, 0])[0])
    path = write_cfg(tmp_path, spec_text + f"[wave]\ns_re = 0\ns_im = {kappa!r}\n")
    with pytest.warns(RuntimeWarning, match="singular"):
        assert run(tmp_path, "convergence", "--config", path, "--levels", "2") == cli.EXIT_OK
    _, rows = read_table(tmp_path / "out" / "convergence.csv")
    assert rows[0]["first_kind_flag"] == "1"
    assert rows[0]["x_error_fk"] == "nan" and rows[1]["eoc_x_error_fk"] == "nan"
    assert rows[1]["first_kind_flag"] == "0"
    assert rows[1]["x_error_ls"] != "nan"


def test_solve_writes_solution_and_traces(tmp_path):
    assert run(tmp_path, "solve", "--metric", "l2") == cli.EXIT_OK
    _, sol = read_table(tmp_path / "out" / "solution.csv")
    _, tr = read_table(tmp_path / "out" / "traces.csv")
    assert len(sol) > 100 and {r["region"] for r in tr} == {"0", "1"}


def test_calderon_test_table(tmp_path):
    assert run(tmp_path, "calderon-test", "--levels", "3") == cli.EXIT_OK
    _, rows = read_table(tmp_path / "out" / "calderon_test.csv")
    assert all(float(r["projector_residual"]) < 1e-12 for r in rows)
    sym = [float(r["symbol_error"]) for r in rows]
    assert all(a / b >= 1.7 for a, b in zip(sym, sym[1:]))
    assert all(float(r["garding_min"]) > 0 for r in rows)


PROBE = """
[probe]
R = 1.5
target_h = 0.08
kappa_min = {lo}
kappa_max = {hi}
points = 11
axis = {axis}
"""


def test_kernel_probe_dips_near_the_first_bessel_zero(tmp_path):
    cfg = write_cfg(tmp_path, PROBE.format(lo=2.3, hi=2.5, axis="imag"))
    assert run(tmp_path, "kernel-probe", "--config", cfg) == cli.EXIT_OK
    head, rows = read_table(tmp_path / "out" / "kernel_probe.csv")
    assert "axis=imag" in head
    sig = np.array([float(r["sigma_min_first_kind"]) for r in rows])
    kap = np.array([float(r["kappa"]) for r in rows])
    assert abs(kap[np.argmin(sig)] - 2.404825557695773) <= 0.02 + 1e-12
    ls = np.array([float(r["ls_residual"]) for r in rows])
    assert ls.max() / ls.min() < 10


def test_kernel_probe_real_axis_has_no_dip(tmp_path):
    cfg = write_cfg(tmp_path, PROBE.format(lo=0.9, hi=1.1, axis="real"))
    assert run(tmp_path, "kernel-probe", "--config", cfg) == cli.EXIT_OK
    _, rows = read_table(tmp_path / "out" / "kernel_probe.csv")
    sig = [float(r["sigma_min_first_kind"]) for r in rows]
    assert max(sig) / min(sig) <= 10


def test_table_format_has_no_negative_zero(tmp_path):
    path = cli.write_table(str(tmp_path), "t", ["a", "b", "c"], [[-0.0, math.nan, True]], dat=True)
    lines = open(path).read().splitlines()
    assert lines[0] == "# sielab t v1" and lines[2] == "0.000000000000e+00,nan,1"
    assert (tmp_path / "t.dat").read_text().splitlines()[1] == "# a b c"
