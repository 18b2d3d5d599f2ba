"""Command-line front end: runs the solver studies and writes CSV files
whose column names match the plotting component's expectations.

Exit codes: 0 ok, 2 usage error, 3 singular system, 4 study-level assertion
failure.  MORAWETZ_LOG sets the logging level.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import __version__, analysis, assembly
from .geometry import ConfigurationError, build_mesh
from .linalg import SingularMatrixError, cond2_estimate, lu_factor, solve
from .operators import FormulationParams, FormulationParams as _FP, Poly2, pointwise_identity_residual
from .problems import catalog

log = logging.getLogger("morawetz")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SINGULAR = 3
EXIT_STUDY_FAILED = 4

_IDENTITY_TOL = 1e-10


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: str, columns, rows) -> None:
    """Deterministic CSV: a version comment, a header row, then the data
    rows with floats at 17 significant digits, LF line endings."""
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(f"# morawetz {__version__}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")


def _add_param_flags(sp):
    sp.add_argument("--xi", type=float, default=1.0)
    beta = sp.add_mutually_exclusive_group()
    beta.add_argument("--beta", type=float, default=None)
    beta.add_argument("--beta-sharp", action="store_true", default=False,
                      help="use the certified minimal beta (default)")
    sp.add_argument("--nu", type=float, default=2.0)
    sp.add_argument("--aq", type=float, default=1e-2)
    sp.add_argument("--ao0", type=float, default=1.0)
    sp.add_argument("--asd", type=float, default=None)
    sp.add_argument("--quad-order", type=int, default=assembly.DEFAULT_NGAUSS)
    sp.add_argument("--seed", type=int, default=0)


def _params(args, prob, geom) -> FormulationParams:
    beta = args.beta
    if beta is None:
        beta = analysis.beta_sharp(geom, prob.c, prob.theta)
    asd = args.asd
    if asd is None and geom.mixed:
        asd = args.xi
    return FormulationParams(
        xi=args.xi, beta=beta, nu=args.nu, A_Q=args.aq, A_O0=args.ao0,
        A_SD=asd, c=prob.c, theta=prob.theta,
    )


def _int_list(text: str):
    vals = [int(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers")
    return vals


def _log_grid(text: str):
    """lo:hi:n decades -> n log-equispaced values 10^lo .. 10^hi."""
    try:
        lo, hi, n = text.split(":")
        return np.logspace(float(lo), float(hi), int(n))
    except ValueError:
        raise argparse.ArgumentTypeError("expected lo:hi:n (log10 decades)")


def cmd_solve(args) -> int:
    prob, geom = analysis.resolve_problem(args.problem)
    p = _params(args, prob, geom)
    mesh = build_mesh(geom, args.nx, args.nt)
    B, F = analysis._assemble_system(prob, mesh, p, args.quad_order)
    factors = lu_factor(B)
    u_h = assembly.DiscreteField(mesh, solve(factors, F))
    row = {
        "Problem": prob.name, "Nx": args.nx, "Nt": args.nt, "Dofs": mesh.dofmap.ndof,
        "L2errors": math.nan, "H1errors": math.nan, "Verrors": math.nan, "Kconds": math.nan,
    }
    if prob.exact is not None:
        errs = analysis.error_norms(u_h, prob, mesh)
        row["L2errors"] = errs["L2"]["rel"]
        row["H1errors"] = errs["H1scaled"]["rel"]
        row["Verrors"] = errs["V"]["rel"]
    if args.cond:
        row["Kconds"] = float(cond2_estimate(B, factors, seed=args.seed))
    cols = ["Problem", "Nx", "Nt", "Dofs", "L2errors", "H1errors", "Verrors", "Kconds"]
    if args.out:
        write_csv(args.out, cols, [row])
    if args.dofs:
        write_csv(args.dofs, ["dof", "value"],
                  [{"dof": i, "value": v} for i, v in enumerate(u_h.coeffs)])
    print(", ".join(f"{c}={_fmt(row[c])}" if c != "Problem" else f"{c}={row[c]}" for c in cols))
    return EXIT_OK


_STUDY_COLS = list(analysis._CSV_COLUMNS)


def cmd_converge(args) -> int:
    prob, geom = analysis.resolve_problem(args.problem)
    p = _params(args, prob, geom)
    sizes = [(n, n) for n in args.n_list]
    rows = analysis.convergence_study(
        prob, geom, sizes, p,
        with_best=not args.no_best, with_cond=args.cond,
        jobs=args.jobs, selector=args.problem,
    )
    write_csv(args.out, _STUDY_COLS, rows)
    log.info("wrote %s (%d rows)", args.out, len(rows))
    return EXIT_OK


def cmd_cfl(args) -> int:
    prob, geom = analysis.resolve_problem(args.problem)
    p = _params(args, prob, geom)
    sizes = [(nx, args.nt) for nx in args.nx_list]
    rows = analysis.convergence_study(
        prob, geom, sizes, p,
        with_best=not args.no_best, with_cond=False,
        jobs=args.jobs, selector=args.problem,
    )
    write_csv(args.out, _STUDY_COLS, rows)
    return EXIT_OK


def cmd_sweep(args) -> int:
    prob, geom = analysis.resolve_problem(args.problem)
    p = _params(args, prob, geom)
    mesh = build_mesh(geom, args.nx, args.nt)
    g1 = _log_grid(args.grid1)
    g2 = _log_grid(args.grid2)

    # b and F are affine in (xi, beta, A_Q, A_O0) at fixed nu, so the sweep
    # assembles four component systems once and combines per grid point.
    def sysc(xi, beta, aq, ao0):
        pc = _FP(xi=xi, beta=beta, nu=p.nu, A_Q=aq, A_O0=ao0, A_SD=p.A_SD, c=p.c, theta=p.theta)
        return analysis._assemble_system(prob, mesh, pc, args.quad_order)

    B11, F11 = sysc(1.0, 1.0, 0.0, 0.0)
    B12, F12 = sysc(1.0, 2.0, 0.0, 0.0)
    Bq, Fq = sysc(1.0, 1.0, 1.0, 0.0)
    Bo, Fo = sysc(1.0, 1.0, 0.0, 1.0)
    comp = {
        "beta": (B12.data - B11.data, F12 - F11),
        "xi": (2.0 * B11.data - B12.data, 2.0 * F11 - F12),
        "aq": (Bq.data - B11.data, Fq - F11),
        "ao0": (Bo.data - B11.data, Fo - F11),
    }
    n, kl, ku = B11.n, B11.kl, B11.ku

    if args.sweep == "aq-ao0":
        cols = ["AQ", "AO0", "L2errors", "Kconds", "coercive"]
        points = [(aq, ao0) for aq in g1 for ao0 in g2]

        def weights(aq, ao0):
            return p.xi, p.beta, aq, ao0
    else:
        cols = ["Beta", "Xi", "L2errors", "Kconds", "coercive"]
        points = [(beta, xi) for beta in g1 for xi in g2]

        def weights(beta, xi):
            return xi, beta, p.A_Q, p.A_O0

    rows = []
    from .linalg import BandedMatrix

    for v1, v2 in points:
        xi, beta, aq, ao0 = weights(v1, v2)
        pv = _FP(xi=xi, beta=beta, nu=p.nu, A_Q=aq, A_O0=ao0, A_SD=p.A_SD, c=p.c, theta=p.theta)
        report = analysis.validate_params(pv, geom)
        data = (xi * comp["xi"][0] + beta * comp["beta"][0]
                + aq * comp["aq"][0] + ao0 * comp["ao0"][0])
        F = (xi * comp["xi"][1] + beta * comp["beta"][1]
             + aq * comp["aq"][1] + ao0 * comp["ao0"][1])
        B = BandedMatrix(n, kl, ku, data)
        row = {cols[0]: v1, cols[1]: v2, "L2errors": math.nan, "Kconds": math.nan,
               "coercive": int(report.coercive)}
        try:
            factors = lu_factor(B)
            u_h = assembly.DiscreteField(mesh, solve(factors, F))
            if prob.exact is not None:
                row["L2errors"] = analysis.error_norms(u_h, prob, mesh, ("L2",))["L2"]["rel"]
            if args.cond:
                row["Kconds"] = float(cond2_estimate(B, factors, seed=args.seed))
        except SingularMatrixError:
            log.warning("singular system at %s=%g, %s=%g", cols[0], v1, cols[1], v2)
        rows.append(row)
    write_csv(args.out, cols, rows)
    return EXIT_OK


def cmd_energy(args) -> int:
    prob, geom = analysis.resolve_problem(args.problem)
    p = _params(args, prob, geom)
    ts, err = analysis.energy_timeseries(prob, geom, args.n, p, n_samples=args.samples)
    write_csv(args.out, ["Ts", "error"],
              [{"Ts": t, "error": e} for t, e in zip(ts, err)])
    out_conv = args.out_conv
    if out_conv is None:
        stem, ext = os.path.splitext(args.out)
        out_conv = f"{stem}-conv{ext or '.csv'}"
    rows = analysis.energy_convergence(prob, geom, args.n_list, p, n_samples=args.samples)
    write_csv(out_conv, ["H", "EnergyNormErrors", "VprojErrors"], rows)
    return EXIT_OK


def cmd_identity_check(args) -> int:
    if args.count < 1:
        print("identity-check: --count must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(args.count):
        p = _FP(
            xi=rng.uniform(0.2, 4.0), beta=rng.uniform(0.2, 6.0),
            nu=rng.uniform(1.1, 3.0), A_Q=1.0, A_O0=1.0,
            c=rng.uniform(0.3, 3.0), theta=rng.uniform(0.2, 5.0),
        )
        u = Poly2.random(rng, 4)
        v = Poly2.random(rng, 4)
        point = rng.uniform(-1.0, 1.0, size=2)
        worst = max(worst, pointwise_identity_residual(u, v, point, p, T=1.0))
    print(f"pointwise multiplier identity: max relative residual {worst:.3e} "
          f"over {args.count} random polynomial pairs (seed {args.seed})")
    return EXIT_OK if worst <= _IDENTITY_TOL else EXIT_STUDY_FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="morawetz",
        description="Coercive space-time Galerkin solver for the 1D wave equation",
    )
    ap.add_argument("--version", action="version", version=f"morawetz {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="single Galerkin solve with a summary row")
    sp.add_argument("--problem", required=True, help="p1/p2/p3 or a JSON config path")
    sp.add_argument("--nx", type=int, required=True)
    sp.add_argument("--nt", type=int, required=True)
    _add_param_flags(sp)
    sp.add_argument("--out", default=None, help="summary CSV path")
    sp.add_argument("--dofs", default=None, help="also write the DOF vector here")
    sp.add_argument("--cond", action="store_true", help="estimate kappa_2")
    sp.set_defaults(fn=cmd_solve)

    sp = sub.add_parser("converge", help="h-convergence study on square meshes")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--n-list", type=_int_list, required=True, help="e.g. 2,4,8,16")
    _add_param_flags(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--no-best", action="store_true", help="skip best-approximation columns")
    sp.add_argument("--cond", action="store_true")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(fn=cmd_converge)

    sp = sub.add_parser("cfl", help="fixed N_t, varying N_x stability study")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--nt", type=int, default=8)
    sp.add_argument("--nx-list", type=_int_list, required=True)
    _add_param_flags(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--no-best", action="store_true")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(fn=cmd_cfl)

    sp = sub.add_parser("sweep", help="parameter sweep on a log-log grid")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--nx", type=int, default=32)
    sp.add_argument("--nt", type=int, default=32)
    sp.add_argument("--sweep", choices=("aq-ao0", "beta-xi"), default="aq-ao0")
    sp.add_argument("--grid1", default="-15:2:75", help="lo:hi:n in log10 decades")
    sp.add_argument("--grid2", default="-7:3:75")
    _add_param_flags(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--cond", action="store_true")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("energy", help="energy error time series and its convergence")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--n", type=int, default=128, help="mesh for the time series")
    sp.add_argument("--n-list", type=_int_list, default=[2, 4, 8, 16, 32, 64])
    sp.add_argument("--samples", type=int, default=768)
    _add_param_flags(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--out-conv", default=None)
    sp.set_defaults(fn=cmd_energy)

    sp = sub.add_parser("identity-check", help="verify the pointwise multiplier identity")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, default=100)
    sp.set_defaults(fn=cmd_identity_check)
    return ap


def main(argv=None) -> int:
    level = os.environ.get("MORAWETZ_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except SingularMatrixError as exc:
        print(f"error: singular system: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
