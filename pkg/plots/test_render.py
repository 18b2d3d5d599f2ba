"""Tests of the plotting component; it consumes the solver only through its
CSV files (generated here with the CLI, or fabricated per schema)."""

import subprocess
import sys

import numpy as np
import pytest

import render


@pytest.fixture(scope="module")
def p1_conv_csv(tmp_path_factory):
    """Real convergence CSV produced by the solver CLI."""
    path = tmp_path_factory.mktemp("csv") / "p1-conv.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "morawetz.cli", "converge", "--problem", "p1",
         "--n-list", "2,4,8", "--out", str(path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return path


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write("# fabricated\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def test_convergence_figure_from_solver_csv(p1_conv_csv, tmp_path):
    out = tmp_path / "fig.png"
    info = render.plot_convergence(p1_conv_csv, out)
    assert info["curves"] == 6
    assert info["triangles"] == 3
    for f in info["files"]:
        assert f.endswith((".png", ".svg"))
        assert (tmp_path / f.split("/")[-1]).stat().st_size > 0

    # plotted data checksum-matches the CSV columns (no recomputation)
    cols = render.read_csv_columns(p1_conv_csv)
    expected = render.data_checksum(
        {k: cols[k] for k in
         ["H", "L2errors", "H1errors", "Verrors",
          "L2projErrors", "H1projErrors", "VprojErrors"]}
    )
    assert info["checksum"] == expected


def test_convergence_single_row_has_no_triangles(tmp_path):
    path = tmp_path / "one.csv"
    _write_csv(path, render.CONV_SCHEMA,
               [[0.5, 0.5, 0.25, 100, 1e-3, 1e-2, 1e-1, 5e-4, 5e-3, 5e-2, 40.0, 1e5]])
    info = render.plot_convergence(path, tmp_path / "one.png")
    assert info["triangles"] == 0
    assert info["curves"] == 6


def test_convergence_missing_columns_message(tmp_path):
    path = tmp_path / "bad.csv"
    _write_csv(path, ["H", "L2errors"], [[0.5, 1e-3]])
    with pytest.raises(render.SchemaError, match="missing columns"):
        render.plot_convergence(path, tmp_path / "bad.png")


def test_malformed_csv_nonzero_exit(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    rc = render.main(["convergence", str(path), "--out", str(tmp_path / "x.png")])
    assert rc != 0


def _sweep_rows(flags):
    rows = []
    k = 0
    for b in (0.1, 1.0, 10.0):
        for x in (0.5, 2.0):
            rows.append([b, x, 10.0 ** (-k - 1), float("nan"), flags[k]])
            k += 1
    return rows


def test_sweep_heatmap_with_boundary(tmp_path):
    path = tmp_path / "sweep.csv"
    _write_csv(path, ["Beta", "Xi", "L2errors", "Kconds", "coercive"],
               _sweep_rows([0, 0, 1, 0, 1, 1]))
    info = render.plot_sweep(path, tmp_path / "sweep.png")
    assert info["contour"] is True


def test_sweep_all_pass_no_contour(tmp_path):
    path = tmp_path / "sweep.csv"
    _write_csv(path, ["Beta", "Xi", "L2errors", "Kconds", "coercive"],
               _sweep_rows([1] * 6))
    info = render.plot_sweep(path, tmp_path / "sweep.png")
    assert info["contour"] is False


def test_sweep_all_fail_no_boundary_line(tmp_path):
    path = tmp_path / "sweep.csv"
    _write_csv(path, ["Beta", "Xi", "L2errors", "Kconds", "coercive"],
               _sweep_rows([0] * 6))
    info = render.plot_sweep(path, tmp_path / "sweep.png")
    assert info["contour"] is False  # entire grid marked failing, no boundary


def test_energy_two_panels(tmp_path):
    ts = tmp_path / "ts.csv"
    conv = tmp_path / "conv.csv"
    _write_csv(ts, ["Ts", "error"], [[t, 1e-5 * (1 + t)] for t in np.linspace(0, 1, 9)])
    _write_csv(conv, ["H", "EnergyNormErrors", "VprojErrors"],
               [[0.5, 1e-2, 1e-1], [0.25, 1e-4, 1e-2]])
    info = render.plot_energy([str(ts), str(conv)], tmp_path / "energy.png")
    assert info["panels"] == 2

    cols_ts = render.read_csv_columns(ts)
    cols_conv = render.read_csv_columns(conv)
    expected = render.data_checksum({**cols_ts, **cols_conv})
    assert info["checksum"] == expected


def test_energy_missing_second_csv_single_panel(tmp_path, capsys):
    ts = tmp_path / "ts.csv"
    _write_csv(ts, ["Ts", "error"], [[0.0, 1e-5], [0.5, 2e-5]])
    info = render.plot_energy([str(ts)], tmp_path / "energy.png")
    assert info["panels"] == 1


def test_energy_empty_file_errors(tmp_path):
    ts = tmp_path / "ts.csv"
    ts.write_text("")
    with pytest.raises(render.SchemaError):
        render.plot_energy([str(ts)], tmp_path / "energy.png")


def test_cli_entry_point(p1_conv_csv, tmp_path):
    out = tmp_path / "fig.png"
    proc = subprocess.run(
        [sys.executable, "plots/render.py", "convergence", str(p1_conv_csv),
         "--out", str(out)],
        capture_output=True, text=True, cwd=str(__import__("pathlib").Path(__file__).parents[1]),
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
    assert out.with_suffix(".svg").exists()
