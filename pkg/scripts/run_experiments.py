#!/usr/bin/env python3
"""Reproduce the benchmark studies end to end.

Runs the CLI study commands and drops their CSVs in an output directory;
pass --fast for a small smoke-scale variant.  Figures can afterwards be
rendered from the CSVs with plots/render.py.

    python3 scripts/run_experiments.py --outdir results
    python3 plots/render.py convergence results/p1-convTable.csv --out results/p1-conv.png
"""

import argparse
import pathlib
import sys
import time

from morawetz.cli import main as cli


def run(args):
    t0 = time.time()
    print("+ morawetz " + " ".join(args), flush=True)
    rc = cli(args)
    if rc != 0:
        sys.exit(f"command failed with exit code {rc}")
    print(f"  done in {time.time() - t0:.1f}s", flush=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--fast", action="store_true", help="smoke-scale meshes")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--with-sweeps", action="store_true",
                    help="also run the two 75x75 parameter sweeps (slow)")
    args = ap.parse_args()

    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = ["--jobs", str(args.jobs)]

    conv_n = "2,4,8" if args.fast else "2,4,8,16,32,64,128"
    cond_n = "2,4,8" if args.fast else "4,8,16,32"
    cfl_nx = "2,4,8,16" if args.fast else ",".join(str(2**k) for k in range(1, 12))
    energy_n = "2,4,8" if args.fast else "2,4,8,16,32,64"
    energy_mesh = "8" if args.fast else "128"
    samples = "33" if args.fast else "768"

    # convergence + quasi-optimality data, A_Q = 1e-2 and 1
    for pid in ("p1", "p2", "p3"):
        run(["converge", "--problem", pid, "--n-list", conv_n, "--aq", "0.01",
             "--out", str(out / f"{pid}-ptypeOPT-convTable.csv")] + jobs)
        run(["converge", "--problem", pid, "--n-list", conv_n, "--aq", "1",
             "--out", str(out / f"{pid}-ptypeGEN-convTable.csv")] + jobs)

    # ablation without the volume least-squares term
    for pid in ("p1", "p2"):
        run(["converge", "--problem", pid, "--n-list", conv_n, "--aq", "0",
             "--out", str(out / f"{pid}-ptypeCUSTOM-convTable.csv")] + jobs)

    # unconditional stability (no CFL condition)
    for pid in ("p1", "p2"):
        run(["cfl", "--problem", pid, "--nt", "8", "--nx-list", cfl_nx, "--no-best",
             "--out", str(out / f"{pid}-testcfl-nt8-convTable.csv")] + jobs)

    # condition number growth
    run(["converge", "--problem", "p1", "--n-list", cond_n, "--aq", "1", "--cond",
         "--no-best", "--out", str(out / "p1-GEN-conditionTable.csv")])
    run(["converge", "--problem", "p1", "--n-list", cond_n, "--aq", "0.01", "--cond",
         "--no-best", "--out", str(out / "p1-OPT-conditionTable.csv")])

    # energy error over time and its convergence
    run(["energy", "--problem", "p2", "--n", energy_mesh, "--n-list", energy_n,
         "--samples", samples,
         "--out", str(out / f"EnergyTableTS-p2-N{energy_mesh}.csv"),
         "--out-conv", str(out / "p2-energyConvTable.csv")])

    if args.with_sweeps:
        grid = "3" if args.fast else "75"
        run(["sweep", "--problem", "p1", "--nx", "32", "--nt", "32",
             "--sweep", "aq-ao0", f"--grid1=-15:2:{grid}", f"--grid2=-7:3:{grid}",
             "--out", str(out / "p1-sweep-aq-ao0.csv")])
        run(["sweep", "--problem", "p1", "--nx", "32", "--nt", "32",
             "--sweep", "beta-xi", f"--grid1=-5:5:{grid}", f"--grid2=-3:3:{grid}",
             "--out", str(out / "p1-sweep-beta-xi.csv")])

    print(f"all studies written to {out}/")


if __name__ == "__main__":
    main()
