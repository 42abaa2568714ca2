"""Command-line front end.

Subcommands::

    dualtraj integrate --system lorenz --method rk45
    dualtraj solve     --system memristor --n 1000 --rho0 1
    dualtraj classify  --system lorenz
    dualtraj compare   --system memristor --n 10000

Exit codes: 0 ok, 1 usage or input error, 2 iteration limit hit,
3 divergence or step underflow.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import integrate as integrate_mod
from . import plots
from .classify import (INDEFINITE_ONLY, Verdict, classify, evidence_csv,
                       verdict_to_prognosis)
from .discretize import objective, write_trajectory_csv
from .errors import (DivergenceError, Diverged, InvalidConfig, InvalidInput,
                     MinStepReached, NonConvergence, UnknownSystem)
from .model import load_system_file, registry, registry_names
from .solver import SolveConfig, solve


def _add_common(parser):
    parser.add_argument("--system", required=True,
                        help="registry name (%s) or a system file path"
                             % ", ".join(registry_names()))
    parser.add_argument("--n", type=int, help="override step count")
    parser.add_argument("--T", type=float, help="override horizon")
    parser.add_argument("--y0", help="override initial state, comma separated")
    parser.add_argument("--param", action="append", default=[],
                        metavar="KEY=VAL", help="system parameter override")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1,
                        help="cap on worker threads (computations are "
                             "vectorized in-process)")


def _add_solver_flags(parser, default_method="hybrid"):
    parser.add_argument("--method", default=default_method,
                        choices=["primal-dual", "levmarq", "hybrid"])
    parser.add_argument("--rho0", type=float, default=1.0)
    parser.add_argument("--rho-shrink", type=float, default=0.9)
    parser.add_argument("--rho-min", type=float, default=1e-8)
    parser.add_argument("--tol", type=float, default=1e-9)
    parser.add_argument("--max-iter", type=int, default=200)
    parser.add_argument("--start", default="zero",
                        help="zero | rk45 | file:PATH")


def _parse_params(pairs):
    params = {}
    for pair in pairs:
        if "=" not in pair:
            raise InvalidInput(f"--param expects KEY=VAL, got {pair!r}")
        key, _, val = pair.partition("=")
        params[key.strip()] = float(val)
    return params


def _resolve_spec(args):
    name = args.system
    if os.path.sep in name or os.path.isfile(name):
        spec = load_system_file(name)
        if args.param:
            raise InvalidInput("--param applies to registry systems only")
    else:
        params = _parse_params(args.param)
        if args.y0 is not None:
            params["y0"] = [float(v) for v in args.y0.split(",")]
        if args.T is not None:
            params["T"] = args.T
        if args.n is not None:
            params["n"] = args.n
        return registry(name, params)
    if args.y0 is not None:
        spec.y0 = np.array([float(v) for v in args.y0.split(",")])
    if args.T is not None:
        spec.T = float(args.T)
    if args.n is not None:
        spec.n = int(args.n)
    spec.__post_init__()
    return spec


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _baseline_trajectory(spec, method, rtol, atol):
    if method == "rk45":
        out = integrate_mod.rk45(spec, rtol=rtol, atol=atol)
        return integrate_mod.resample(out, spec.grid), out
    if method == "rk23":
        out = integrate_mod.rk23(spec, rtol=rtol, atol=atol)
        return integrate_mod.resample(out, spec.grid), out
    if method == "modified-euler":
        return integrate_mod.modified_euler(spec), None
    raise InvalidInput(f"unknown integration method {method!r}")


def cmd_integrate(args):
    spec = _resolve_spec(args)
    Y, out = _baseline_trajectory(spec, args.method, args.rtol, args.atol)
    path = os.path.join(_outdir(args), f"{spec.system.name}_{args.method}.csv")
    write_trajectory_csv(path, spec, Y)
    P = objective(spec, Y)
    print(f"system = {spec.system.name}  method = {args.method}  "
          f"n = {spec.n}  T = {spec.T:.6g}")
    if out is not None:
        st = out.stats
        print(f"steps accepted/rejected = {st['naccept']}/{st['nreject']}  "
              f"rhs evaluations = {st['nfev']}")
    print(f"objective P = {P:.6g}")
    print(f"trajectory -> {path}")
    return 0


def _start_trajectory(spec, start):
    if start == "zero":
        return None
    if start == "rk45":
        out = integrate_mod.rk45(spec)
        return integrate_mod.resample(out, spec.grid)
    if start.startswith("file:"):
        from .discretize import read_trajectory_csv
        _, X = read_trajectory_csv(start[5:])
        if X.shape[1] != spec.n + 1:
            raise InvalidInput("start trajectory does not match the grid")
        return X[:, 1:]
    raise InvalidInput(f"unknown start {start!r}")


def _config_from_args(args):
    return SolveConfig(rho0=args.rho0, rho_shrink=args.rho_shrink,
                       rho_min=args.rho_min, inner_tol=args.tol,
                       max_inner=args.max_iter, seed=args.seed,
                       method=args.method)


def cmd_solve(args):
    spec = _resolve_spec(args)
    cfg = _config_from_args(args)
    start = _start_trajectory(spec, args.start)
    report = solve(spec, cfg, start)
    base = os.path.join(_outdir(args), f"{spec.system.name}_solve")
    with open(base + ".txt", "w", encoding="utf-8") as fh:
        fh.write(report.serialize())
    write_trajectory_csv(base + ".csv", spec, report.final_Y)
    if args.plot:
        plots.plot_trajectory(base + ".csv", base + ".svg",
                              title=f"{spec.system.name} ({report.method})")
    print(f"system = {spec.system.name}  method = {report.method}  "
          f"status = {report.status}")
    print(f"objective P = {report.objective:.6g}  "
          f"perturbed = {report.objective_perturbed:.6g}  "
          f"rho_final = {report.rho_final:.6g}")
    print(f"certificate = {report.certificate.verdict}  "
          f"gap = {report.certificate.gap:.6g}")
    print(f"report -> {base}.txt")
    return report.exit_code()


def cmd_classify(args):
    spec = _resolve_spec(args)
    verdict = classify(spec.system, tol=args.tol, budget=args.budget,
                       seed=args.seed)
    witness = ",".join(f"{v:.6g}" for v in verdict.witness_s)
    print(f"{spec.system.name}: {verdict.kind}  mu_star = {verdict.mu_star:.6g}  "
          f"witness = [{witness}]")
    print(f"prognosis: {verdict_to_prognosis(verdict)}")
    if verdict.note:
        print(f"note: {verdict.note}")
    if args.samples_csv:
        evidence_csv(verdict, args.samples_csv)
        print(f"samples -> {args.samples_csv}")
    return 0


@dataclass
class CompareReport:
    """Benchmark protocol result: baselines against the dual solve."""

    P_rk45: float
    P_rk23: float
    P_cd: float
    verdict: Verdict
    divergence_curve: np.ndarray  # (n,) per-node separation of the baselines
    winner: str

    def serialize(self):
        return "\n".join([
            f"P_rk45 = {self.P_rk45:.17g}",
            f"P_rk23 = {self.P_rk23:.17g}",
            f"P_cd = {self.P_cd:.17g}",
            f"verdict = {self.verdict.kind}",
            f"max_separation = {float(np.max(self.divergence_curve)):.17g}",
            f"winner = {self.winner}",
        ]) + "\n"


def run_compare(spec, cfg, rtol=1e-3, atol=1e-6, tol=1e-9, budget=100_000,
                seed=0):
    """Full benchmark protocol; returns (CompareReport, trajectories, solve).

    The adaptive baseline is integrated and resampled onto the grid,
    the second baseline provides the separation curve, the system is
    classified, the dual solve is seeded with the baseline trajectory,
    and the objective decides the winner, ties going to the baseline.
    The default refinement route (``levmarq``) matches the protocol of
    seeding the dual iteration with the baseline; the perturbed
    continuation routes are available through ``cfg.method``.
    """
    out45 = integrate_mod.rk45(spec, rtol=rtol, atol=atol)
    Y45 = integrate_mod.resample(out45, spec.grid)
    out23 = integrate_mod.rk23(spec, rtol=rtol, atol=atol)
    Y23 = integrate_mod.resample(out23, spec.grid)
    P45 = objective(spec, Y45)
    P23 = objective(spec, Y23)
    curve = np.linalg.norm(Y45 - Y23, axis=0)

    verdict = classify(spec.system, tol=tol, budget=budget, seed=seed)
    report = solve(spec, cfg, Y45)
    P_cd = report.objective

    winner = "cd" if P_cd < P45 else "rk45"
    cmp_report = CompareReport(P_rk45=P45, P_rk23=P23, P_cd=P_cd,
                               verdict=verdict, divergence_curve=curve,
                               winner=winner)
    return cmp_report, {"rk45": Y45, "rk23": Y23, "cd": report.final_Y}, report


def cmd_compare(args):
    spec = _resolve_spec(args)
    cfg = _config_from_args(args)
    cmp_report, trajectories, solve_report = run_compare(
        spec, cfg, rtol=args.rtol, atol=args.atol, seed=args.seed)

    outdir = _outdir(args)
    name = spec.system.name
    paths = {}
    for label, Y in trajectories.items():
        paths[label] = os.path.join(outdir, f"{name}_{label}.csv")
        write_trajectory_csv(paths[label], spec, Y)
    curve_path = os.path.join(outdir, f"{name}_separation.csv")
    ts = spec.times()[1:]
    with open(curve_path, "w", encoding="utf-8") as fh:
        fh.write("t,separation\n")
        for t, s in zip(ts, cmp_report.divergence_curve):
            fh.write(f"{t:.17g},{s:.17g}\n")
    report_path = os.path.join(outdir, f"{name}_compare.txt")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(cmp_report.serialize())
    plots.plot_overlay([paths["rk45"], paths["cd"]], ["rk45", "cd"],
                       os.path.join(outdir, f"{name}_compare.svg"),
                       title=f"{name}: baseline vs dual solve")
    plots.plot_divergence(curve_path,
                          os.path.join(outdir, f"{name}_separation.svg"))

    print(f"system = {name}  n = {spec.n}  T = {spec.T:.6g}")
    print(f"P_rk45 = {cmp_report.P_rk45:.6g}  P_rk23 = {cmp_report.P_rk23:.6g}  "
          f"P_cd = {cmp_report.P_cd:.6g}")
    print(f"classification = {cmp_report.verdict.kind}")
    print(f"winner = {cmp_report.winner}")
    print(f"report -> {report_path}")
    return 0


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"error: {message}\n")


def build_parser():
    parser = _Parser(
        prog="dualtraj",
        description="global trajectories for quadratic ODE systems by "
                    "canonical dual optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    p_int = sub.add_parser("integrate", help="run a baseline integrator")
    _add_common(p_int)
    p_int.add_argument("--method", default="rk45",
                       choices=["rk45", "rk23", "modified-euler"])
    p_int.add_argument("--rtol", type=float, default=1e-3)
    p_int.add_argument("--atol", type=float, default=1e-6)
    p_int.set_defaults(func=cmd_integrate)

    p_solve = sub.add_parser("solve", help="run the dual/least-squares solver")
    _add_common(p_solve)
    _add_solver_flags(p_solve)
    p_solve.add_argument("--plot", action="store_true",
                         help="emit an SVG of the solved trajectory")
    p_solve.set_defaults(func=cmd_solve)

    p_cls = sub.add_parser("classify", help="structural chaos classification")
    _add_common(p_cls)
    p_cls.add_argument("--tol", type=float, default=1e-9)
    p_cls.add_argument("--budget", type=int, default=100_000)
    p_cls.add_argument("--samples-csv", help="write sampled eigenvalues here")
    p_cls.set_defaults(func=cmd_classify)

    p_cmp = sub.add_parser("compare", help="baselines vs dual solve protocol")
    _add_common(p_cmp)
    _add_solver_flags(p_cmp, default_method="levmarq")
    p_cmp.add_argument("--rtol", type=float, default=1e-3)
    p_cmp.add_argument("--atol", type=float, default=1e-6)
    p_cmp.set_defaults(func=cmd_compare)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInput, InvalidConfig, UnknownSystem) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DivergenceError, Diverged, MinStepReached) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
