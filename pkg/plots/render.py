#!/usr/bin/env python3
"""Render figures from the solver CLI's CSV outputs.

    python3 plots/render.py convergence <convTable.csv> --out fig.png
    python3 plots/render.py sweep       <sweep.csv>     --out fig.png
    python3 plots/render.py energy      <ts.csv> [<conv.csv>] --out fig.png

Batch-only (Agg backend); every figure is written as both PNG and SVG.
The script never recomputes science: everything drawn comes straight from
the CSV columns, and each renderer returns a checksum of exactly the data
it plotted so tests can match it against the file contents.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import math
import os
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

CONV_SCHEMA = [
    "H", "Hx", "Ht", "Dofs",
    "L2errors", "H1errors", "Verrors",
    "L2projErrors", "H1projErrors", "VprojErrors",
    "QOconstEst", "Kconds",
]

ERROR_STYLES = [
    ("L2errors", "L2projErrors", "tab:red", "relative L2 error"),
    ("H1errors", "H1projErrors", "tab:blue", "relative H1 error"),
    ("Verrors", "VprojErrors", "tab:green", "relative graph-norm error"),
]


class SchemaError(ValueError):
    pass


def read_csv_columns(path):
    """CSV -> {column: float array}; '#' comment lines are skipped."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header, data = rows[0], rows[1:]
    if not data:
        raise SchemaError(f"{path}: no data rows")
    cols = {}
    for k, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[k]) for r in data])
        except (ValueError, IndexError) as exc:
            raise SchemaError(f"{path}: column {name!r} is not numeric: {exc}")
    return cols


def data_checksum(columns: dict) -> str:
    """Order-independent digest of named float columns (17 significant
    digits, the CLI's serialisation)."""
    blob = "|".join(
        name + ":" + ",".join(format(float(v), ".17g") for v in columns[name])
        for name in sorted(columns)
    )
    return hashlib.sha256(blob.encode()).hexdigest()


def _require(cols, names, path):
    missing = [n for n in names if n not in cols]
    if missing:
        raise SchemaError(
            f"{path}: missing columns {missing}; expected schema {names}"
        )


def _slope_triangle(ax, x, y, slope, color):
    """Right triangle annotating a log-log slope next to the curve tail."""
    f = 1.6
    x0, x1 = x, x * f
    y0 = y
    y1 = y0 * f ** slope
    ax.plot([x0, x1, x1, x0], [y0, y0, y1, y0], color=color, lw=0.8)
    ax.annotate(f"{abs(slope):.2g}", (x1 * 1.05, math.sqrt(y0 * y1)),
                color=color, fontsize=8, va="center")


def plot_convergence(csv_path, out_image):
    """Log-log error curves (solid) with best-approximation curves (dashed)
    and slope triangles on the error curves."""
    cols = read_csv_columns(csv_path)
    _require(cols, CONV_SCHEMA, csv_path)
    h = cols["H"]
    order = np.argsort(h)

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    plotted = {"H": h}
    n_curves = 0
    n_triangles = 0
    for err_col, proj_col, color, label in ERROR_STYLES:
        e = cols[err_col]
        p = cols[proj_col]
        ax.loglog(h[order], e[order], "-o", color=color, ms=3, lw=1.2, label=label)
        ax.loglog(h[order], p[order], "--", color=color, lw=1.0,
                  label=label.replace("error", "best approx"))
        plotted[err_col] = e
        plotted[proj_col] = p
        n_curves += 2
        if h.size >= 2 and np.all(np.isfinite(e[order][:2])) and np.all(e[order][:2] > 0):
            h0, h1 = h[order][0], h[order][1]
            slope = (np.log(e[order][1]) - np.log(e[order][0])) / (np.log(h1) - np.log(h0))
            _slope_triangle(ax, h[order][0], e[order][0], slope, color)
            n_triangles += 1
    ax.set_xlabel("h")
    ax.set_ylabel("relative error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7, ncol=2)
    paths = _save(fig, out_image)
    return {"checksum": data_checksum(plotted), "curves": n_curves,
            "triangles": n_triangles, "files": paths}


def plot_sweep(csv_path, out_image):
    """Heatmap of the relative error over the parameter grid, with the
    failing region dotted and a white contour along the validity boundary."""
    cols = read_csv_columns(csv_path)
    names = list(read_header(csv_path))
    if len(names) < 5:
        raise SchemaError(f"{csv_path}: expected 5 sweep columns, got {names}")
    p1n, p2n = names[0], names[1]
    _require(cols, [p1n, p2n, "L2errors", "Kconds", "coercive"], csv_path)
    v1 = np.unique(cols[p1n])
    v2 = np.unique(cols[p2n])
    err = np.full((v1.size, v2.size), np.nan)
    flag = np.zeros((v1.size, v2.size))
    i1 = np.searchsorted(v1, cols[p1n])
    i2 = np.searchsorted(v2, cols[p2n])
    err[i1, i2] = cols["L2errors"]
    flag[i1, i2] = cols["coercive"]

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    with np.errstate(all="ignore"):
        mesh = ax.pcolormesh(v2, v1, np.log10(err), shading="nearest", cmap="viridis")
    ax.set_xscale("log")
    ax.set_yscale("log")
    fig.colorbar(mesh, ax=ax, label="log10 relative L2 error")
    has_contour = False
    if flag.min() != flag.max():
        ax.contour(v2, v1, flag, levels=[0.5], colors="white", linewidths=1.5)
        has_contour = True
    bad = flag == 0
    if bad.any():
        B2, B1 = np.meshgrid(v2, v1)
        ax.plot(B2[bad], B1[bad], ".", color="white", ms=1.5, alpha=0.5)
    ax.set_xlabel(p2n)
    ax.set_ylabel(p1n)
    paths = _save(fig, out_image)
    plotted = {p1n: cols[p1n], p2n: cols[p2n],
               "L2errors": cols["L2errors"], "coercive": cols["coercive"]}
    return {"checksum": data_checksum(plotted), "contour": has_contour, "files": paths}


def plot_energy(csv_paths, out_image):
    """Two stacked panels: relative energy error over time, and the
    convergence of its sup over refined meshes; with only the first CSV a
    single panel is drawn and a warning printed."""
    ts_cols = read_csv_columns(csv_paths[0])
    _require(ts_cols, ["Ts", "error"], csv_paths[0])
    conv_cols = None
    if len(csv_paths) > 1:
        conv_cols = read_csv_columns(csv_paths[1])
        _require(conv_cols, ["H", "EnergyNormErrors", "VprojErrors"], csv_paths[1])
    else:
        print("warning: no convergence CSV given, drawing the time panel only",
              file=sys.stderr)

    n_panels = 2 if conv_cols is not None else 1
    fig, axes = plt.subplots(n_panels, 1, figsize=(6.5, 3.0 * n_panels))
    axes = np.atleast_1d(axes)
    axes[0].semilogy(ts_cols["Ts"], ts_cols["error"], lw=0.8, color="tab:blue")
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("relative energy error")
    axes[0].grid(True, which="both", alpha=0.3)
    plotted = {"Ts": ts_cols["Ts"], "error": ts_cols["error"]}
    if conv_cols is not None:
        h = conv_cols["H"]
        order = np.argsort(h)
        axes[1].loglog(h[order], conv_cols["EnergyNormErrors"][order], "-*",
                       color="tab:blue", label="sup-in-time energy of the error")
        axes[1].loglog(h[order], conv_cols["VprojErrors"][order], "--",
                       color="tab:green", label="squared best-approx graph error")
        axes[1].set_xlabel("h")
        axes[1].grid(True, which="both", alpha=0.3)
        axes[1].legend(fontsize=8)
        plotted.update({"H": h, "EnergyNormErrors": conv_cols["EnergyNormErrors"],
                        "VprojErrors": conv_cols["VprojErrors"]})
    paths = _save(fig, out_image)
    return {"checksum": data_checksum(plotted), "panels": n_panels, "files": paths}


def read_header(path):
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if row and not row[0].startswith("#"):
                return row
    raise SchemaError(f"{path}: empty file")


def _save(fig, out_image):
    stem, ext = os.path.splitext(out_image)
    png = stem + ".png"
    svg = stem + ".svg"
    fig.tight_layout()
    fig.savefig(png, dpi=150)
    fig.savefig(svg)
    plt.close(fig)
    return [png, svg]


KINDS = {"convergence": plot_convergence, "sweep": plot_sweep, "energy": plot_energy}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="Render figures from solver CSVs")
    ap.add_argument("kind", choices=sorted(KINDS))
    ap.add_argument("csv", nargs="+")
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)
    try:
        if args.kind == "energy":
            info = plot_energy(args.csv, args.out)
        else:
            info = KINDS[args.kind](args.csv[0], args.out)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(" ".join(info["files"]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
