import json
import subprocess
import sys

import numpy as np
import pytest

from morawetz.cli import main


def run_cli(args):
    return main(list(args))


def read_csv(path):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    assert lines[0].startswith("# morawetz ")
    header = lines[1].split(",")
    rows = [dict(zip(header, ln.split(","))) for ln in lines[2:]]
    return header, rows


def test_help_exits_zero():
    proc = subprocess.run(
        [sys.executable, "-m", "morawetz.cli", "solve", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "--problem" in proc.stdout


def test_usage_error_exit_code():
    proc = subprocess.run(
        [sys.executable, "-m", "morawetz.cli", "converge", "--problem", "p1"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2


def test_solve_summary(tmp_path):
    out = tmp_path / "solve.csv"
    rc = run_cli(["solve", "--problem", "p1", "--nx", "8", "--nt", "8",
                  "--aq", "0.01", "--ao0", "1", "--out", str(out)])
    assert rc == 0
    header, rows = read_csv(out)
    assert header == ["Problem", "Nx", "Nt", "Dofs", "L2errors", "H1errors", "Verrors", "Kconds"]
    assert len(rows) == 1
    assert float(rows[0]["L2errors"]) < 1e-3


def test_solve_singular_exit_code():
    rc = run_cli(["solve", "--problem", "p1", "--nx", "4", "--nt", "4", "--ao0", "0"])
    assert rc == 3


def test_converge_schema_and_determinism(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    args = ["converge", "--problem", "p1", "--n-list", "2,4", "--seed", "0"]
    assert run_cli(args + ["--out", str(out1)]) == 0
    assert run_cli(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    header, rows = read_csv(out1)
    assert header == ["H", "Hx", "Ht", "Dofs", "L2errors", "H1errors", "Verrors",
                      "L2projErrors", "H1projErrors", "VprojErrors", "QOconstEst", "Kconds"]
    assert len(rows) == 2
    assert int(rows[0]["Dofs"]) == 36


def test_converge_single_row(tmp_path):
    out = tmp_path / "one.csv"
    assert run_cli(["converge", "--problem", "p1", "--n-list", "4", "--out", str(out)]) == 0
    _, rows = read_csv(out)
    assert len(rows) == 1


def test_empty_n_list_is_usage_error():
    proc = subprocess.run(
        [sys.executable, "-m", "morawetz.cli", "converge", "--problem", "p1",
         "--n-list", "", "--out", "/tmp/x.csv"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2


def test_cfl_rows_in_input_order(tmp_path):
    out = tmp_path / "cfl.csv"
    assert run_cli(["cfl", "--problem", "p1", "--nt", "2", "--nx-list", "8,2,4",
                    "--no-best", "--out", str(out)]) == 0
    _, rows = read_csv(out)
    assert [float(r["Hx"]) for r in rows] == [0.25, 1.0, 0.5]


def test_sweep_flags_and_nonsolved_rows(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run_cli(["sweep", "--problem", "p1", "--nx", "2", "--nt", "2",
                    "--sweep", "beta-xi", "--grid1=-1:1:2", "--grid2=0:0:1",
                    "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["Beta", "Xi", "L2errors", "Kconds", "coercive"]
    flags = [int(r["coercive"]) for r in rows]
    assert flags == [0, 1]  # beta=0.1 violates the bound, beta=10 satisfies it
    # non-coercive points are still solved
    assert all(np.isfinite(float(r["L2errors"])) for r in rows)


def test_sweep_aq_ao0_includes_singular_corner(tmp_path):
    out = tmp_path / "sweep2.csv"
    assert run_cli(["sweep", "--problem", "p1", "--nx", "2", "--nt", "2",
                    "--sweep", "aq-ao0", "--grid1=0:0:1", "--grid2=-30:0:2",
                    "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["AQ", "AO0", "L2errors", "Kconds", "coercive"]
    assert len(rows) == 2


def test_sweep_matches_direct_assembly(tmp_path):
    # the affine component recombination must reproduce a direct assembly
    from morawetz import FormulationParams, build_mesh
    from morawetz.analysis import _assemble_system
    from morawetz.problems import DEFAULT_GEOMETRY, catalog

    mesh = build_mesh(DEFAULT_GEOMETRY, 3, 3)
    prob = catalog("p1")

    def system(xi, beta, aq, ao0):
        p = FormulationParams(xi=xi, beta=beta, nu=2.0, A_Q=aq, A_O0=ao0, c=1.0, theta=1.0)
        return _assemble_system(prob, mesh, p)

    B11, F11 = system(1, 1, 0, 0)
    B12, F12 = system(1, 2, 0, 0)
    Bq, Fq = system(1, 1, 1, 0)
    Bo, Fo = system(1, 1, 0, 1)
    xi, beta, aq, ao0 = 0.7, 3.1, 0.02, 1.4
    data = (xi * (2 * B11.data - B12.data) + beta * (B12.data - B11.data)
            + aq * (Bq.data - B11.data) + ao0 * (Bo.data - B11.data))
    F = (xi * (2 * F11 - F12) + beta * (F12 - F11) + aq * (Fq - F11) + ao0 * (Fo - F11))
    Bd, Fd = system(xi, beta, aq, ao0)
    np.testing.assert_allclose(data, Bd.data, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(F, Fd, rtol=1e-12, atol=1e-12)


def test_energy_outputs(tmp_path):
    out = tmp_path / "en.csv"
    conv = tmp_path / "en-conv.csv"
    assert run_cli(["energy", "--problem", "p2", "--n", "4", "--n-list", "2,4",
                    "--samples", "17", "--out", str(out), "--out-conv", str(conv)]) == 0
    header, rows = read_csv(out)
    assert header == ["Ts", "error"]
    assert len(rows) == 17
    header, rows = read_csv(conv)
    assert header == ["H", "EnergyNormErrors", "VprojErrors"]
    assert len(rows) == 2


def test_identity_check_deterministic(capsys):
    assert run_cli(["identity-check", "--seed", "5", "--count", "10"]) == 0
    first = capsys.readouterr().out
    assert run_cli(["identity-check", "--seed", "5", "--count", "10"]) == 0
    assert capsys.readouterr().out == first


def test_identity_check_zero_count_usage_error():
    assert run_cli(["identity-check", "--count", "0"]) == 2


def test_config_file_problem(tmp_path):
    cfg = {"name": "cfg", "c": 1.0, "theta": 1.0,
           "domain": {"x_lo": -1.0, "x_hi": 1.0, "T": 1.0},
           "f": "p1_f"}
    path = tmp_path / "prob.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "cfg.csv"
    assert run_cli(["solve", "--problem", str(path), "--nx", "4", "--nt", "4",
                    "--out", str(out)]) == 0
    _, rows = read_csv(out)
    assert rows[0]["Problem"] == "cfg"
    assert rows[0]["L2errors"] == "nan"  # no exact solution in the config


def test_jobs_worker_pool(tmp_path):
    out1 = tmp_path / "serial.csv"
    out2 = tmp_path / "pool.csv"
    base = ["converge", "--problem", "p1", "--n-list", "2,4", "--no-best"]
    assert run_cli(base + ["--out", str(out1)]) == 0
    assert run_cli(base + ["--jobs", "2", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
