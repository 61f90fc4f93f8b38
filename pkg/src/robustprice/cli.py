"""Command-line interface.

Exit codes: 0 success, 2 invalid input or schema violation, 3 infeasible
uncertainty set, 4 numerical failure inside a solver. Subcommands that
produce documents write JSON (12 significant digits) to --out or stdout;
table, sweep, and mechanisms subcommands write CSV files into --outdir.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

from . import bench, lp, schema
from .cross import cross_performance, ratio_band, relperf
from .errors import InfeasibleSetError, InputError, NumericalFailureError
from .instance import UncertaintySet
from .multi import best_of_all
from .robust import (
    DEFAULT_EPS,
    CriterionSpec,
    maximin_ratio_search,
    maximin_revenue,
    minimax_lambda_regret,
    minimax_regret,
    parse_criterion,
    summarize,
    worst_lambda_regret,
    worst_ratio,
)


@dataclass(frozen=True)
class Config:
    k: int = 100
    eps: float = DEFAULT_EPS
    feasibility_tol: float = lp.FEASIBILITY_TOL
    optimality_tol: float = lp.OPTIMALITY_TOL
    workers: int | None = None
    outdir: str = "."

    def __post_init__(self):
        if self.k < 1:
            raise InputError(f"K must be at least 1, got {self.k}")
        if self.eps <= 0:
            raise InputError(f"eps must be positive, got {self.eps}")
        if self.feasibility_tol <= 0 or self.optimality_tol <= 0:
            raise InputError("tolerances must be positive")


def _parse_param_grid(text: str) -> bench.ParamGrid:
    parts = text.split(":")
    if len(parts) != 3:
        raise InputError(f"grid must look like start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise InputError(f"grid must be numeric start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise InputError(f"grid needs step > 0 and stop >= start, got {text!r}")
    count = int(round((stop - start) / step)) + 1
    values = [start + i * step for i in range(count) if start + i * step <= stop + 1e-12]
    return bench.ParamGrid(tuple(values))


def _config(args) -> Config:
    return Config(k=getattr(args, "k", 100), eps=getattr(args, "eps", DEFAULT_EPS),
                  workers=getattr(args, "workers", None),
                  outdir=getattr(args, "outdir", "."))


def _emit(doc: dict, args) -> None:
    out = getattr(args, "out", None)
    text = schema.dump_result(doc, out)
    if out is None:
        sys.stdout.write(text)


def _load_instance(args) -> UncertaintySet:
    return schema.load_instance(args.instance)


def _solve_one(uset: UncertaintySet, spec: CriterionSpec, eps: float):
    if spec.kind == "revenue":
        return maximin_revenue(uset)
    if spec.kind == "regret":
        return minimax_regret(uset)
    if spec.kind == "ratio":
        return maximin_ratio_search(uset, eps)
    return minimax_lambda_regret(uset, spec.lam)


def _cmd_solve(args) -> int:
    cfg = _config(args)
    uset = _load_instance(args)
    doc = {"command": "solve", "instance": schema.instance_doc(uset),
           "criterion": args.criterion, "config": schema.config_doc(None, cfg.eps)}
    if args.criterion == "all":
        s = summarize(uset, cfg.eps)
        doc["values"] = {"revenue": s.theta_revenue, "regret": s.theta_regret,
                         "ratio": s.theta_ratio}
        doc["mechanisms"] = {name: schema.mechanism_doc(s.mechanism(name))
                             for name in ("revenue", "regret", "ratio")}
        doc["ratio_iterations"] = s.ratio_iterations
    else:
        value, mech = _solve_one(uset, parse_criterion(args.criterion), cfg.eps)
        doc["value"] = value
        doc["mechanism"] = schema.mechanism_doc(mech)
    _emit(doc, args)
    return 0


def _evaluate_one(uset, mech, spec: CriterionSpec, eps: float):
    """(worst-case value, relperf or None) of a fixed mechanism."""
    if spec.kind == "revenue":
        raw = -worst_lambda_regret(mech, uset, 0.0)[0]
        theta, _ = maximin_revenue(uset)
        return raw, relperf(raw, theta, "revenue")
    if spec.kind == "regret":
        raw = worst_lambda_regret(mech, uset, 1.0)[0]
        theta, _ = minimax_regret(uset)
        return raw, relperf(raw, theta, "regret")
    if spec.kind == "ratio":
        raw = worst_ratio(mech, uset)[0]
        theta, _ = maximin_ratio_search(uset, eps)
        return raw, relperf(raw, theta, "ratio", band=eps / max(theta, eps))
    return worst_lambda_regret(mech, uset, spec.lam)[0], None


def _cmd_evaluate(args) -> int:
    cfg = _config(args)
    uset = _load_instance(args)
    mech = schema.load_mechanism(args.mechanism, default_grid=uset.grid)
    doc = {"command": "evaluate", "criterion": args.criterion,
           "mechanism": schema.mechanism_doc(mech),
           "config": schema.config_doc(None, cfg.eps)}
    if args.criterion == "all":
        s = summarize(uset, cfg.eps)
        values = {"revenue": -worst_lambda_regret(mech, uset, 0.0)[0],
                  "regret": worst_lambda_regret(mech, uset, 1.0)[0],
                  "ratio": worst_ratio(mech, uset)[0]}
        rps = {"revenue": relperf(values["revenue"], s.theta_revenue, "revenue"),
               "regret": relperf(values["regret"], s.theta_regret, "regret"),
               "ratio": relperf(values["ratio"], s.theta_ratio, "ratio",
                                band=ratio_band(s))}
        doc["values"] = values
        doc["relperf"] = rps
        doc["relperf_all"] = min(rps.values())
    else:
        raw, rp = _evaluate_one(uset, mech, parse_criterion(args.criterion), cfg.eps)
        doc["value"] = raw
        doc["relperf"] = rp
    _emit(doc, args)
    return 0


def _cmd_cross(args) -> int:
    cfg = _config(args)
    uset = _load_instance(args)
    result = cross_performance(uset, args.old, args.new, eps=cfg.eps)
    doc = {"command": "cross", "old": args.old, "new": args.new,
           "raw_value": result.raw_value, "relperf": result.relperf,
           "witness": schema.mechanism_doc(result.witness),
           "config": schema.config_doc(None, cfg.eps)}
    _emit(doc, args)
    return 0


def _cmd_best(args) -> int:
    cfg = _config(args)
    uset = _load_instance(args)
    res = best_of_all(uset, cfg.eps)
    doc = {"command": "best", "c_star": res.c_star,
           "bracket": list(res.bracket),
           "mechanism": schema.mechanism_doc(res.mech),
           "thetas": {"revenue": res.summary.theta_revenue,
                      "regret": res.summary.theta_regret,
                      "ratio": res.summary.theta_ratio},
           "config": schema.config_doc(None, cfg.eps)}
    _emit(doc, args)
    return 0


def _outpath(cfg: Config, name: str) -> str:
    os.makedirs(cfg.outdir, exist_ok=True)
    return os.path.join(cfg.outdir, name)


def _cmd_table(args) -> int:
    cfg = _config(args)
    grid = _parse_param_grid(args.grid) if args.grid else None
    matrix = bench.cross_matrix(args.family, grid, cfg.k, cfg.eps, cfg.workers)
    path = _outpath(cfg, f"table_{args.family}.csv")
    bench.write_table_csv(matrix, path)
    print(path)
    return 0


def _cmd_bound(args) -> int:
    cfg = _config(args)
    grid = _parse_param_grid(args.grid) if args.grid else None
    bound = bench.uniform_factor_bound(args.family, grid, cfg.k, cfg.eps,
                                       cfg.workers)
    if getattr(args, "out", None):
        schema.dump_result({"command": "bound", "family": args.family,
                            "bound": bound,
                            "config": schema.config_doc(cfg.k, cfg.eps)}, args.out)
    print(bench.sig12(bound))
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config(args)
    grid = _parse_param_grid(args.grid) if args.grid else None
    params = grid.values if grid else None
    sigma = args.sigma if args.family == "mean_var" else None
    rows = bench.sweep(args.family, params, cfg.k, cfg.eps, sigma=sigma,
                       workers=cfg.workers)
    path = _outpath(cfg, f"sweep_{args.family}.csv")
    bench.write_sweep_csv(rows, path)
    print(path)
    return 0


def _cmd_mechanisms(args) -> int:
    cfg = _config(args)
    uset = _load_instance(args)
    export = bench.export_mechanisms(uset, cfg.eps)
    stem = os.path.splitext(os.path.basename(args.instance))[0]
    path = _outpath(cfg, f"mechanisms_{stem}.csv")
    bench.write_mechanisms_csv(export, path)
    print(path)
    return 0


def _criterion_arg(text: str) -> str:
    if text == "all":
        return text
    parse_criterion(text)  # raises InputError on junk
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustprice",
        description="Robust pricing under moment and quantile uncertainty.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, k=False, workers=False, outdir=False, out=False):
        p.add_argument("--eps", type=float, default=DEFAULT_EPS,
                       help="binary-search bracket width (default 1e-4)")
        if k:
            p.add_argument("--k", type=int, default=100,
                           help="grid resolution K (default 100)")
        if workers:
            p.add_argument("--workers", type=int, default=None,
                           help="parallel instances (default: ROBUSTPRICE_WORKERS or CPUs)")
        if outdir:
            p.add_argument("--outdir", default=".", help="directory for CSV output")
        if out:
            p.add_argument("--out", default=None, help="write JSON here instead of stdout")

    p = sub.add_parser("solve", help="robustly optimal mechanism for one criterion")
    p.add_argument("--instance", required=True)
    p.add_argument("--criterion", required=True, type=_criterion_arg,
                   help="revenue | regret | ratio | lambda=<x> | all")
    add_common(p, out=True)
    p.set_defaults(handler=_cmd_solve)

    p = sub.add_parser("evaluate", help="worst case of a given mechanism")
    p.add_argument("--instance", required=True)
    p.add_argument("--mechanism", required=True)
    p.add_argument("--criterion", required=True, type=_criterion_arg)
    add_common(p, out=True)
    p.set_defaults(handler=_cmd_evaluate)

    p = sub.add_parser("cross", help="best new-criterion value over old-optimal mechanisms")
    p.add_argument("--instance", required=True)
    p.add_argument("--old", required=True, choices=("revenue", "regret", "ratio"))
    p.add_argument("--new", required=True, choices=("revenue", "regret", "ratio"))
    add_common(p, out=True)
    p.set_defaults(handler=_cmd_cross)

    p = sub.add_parser("best", help="one mechanism good for all three criteria")
    p.add_argument("--instance", required=True)
    add_common(p, out=True)
    p.set_defaults(handler=_cmd_best)

    p = sub.add_parser("table", help="cross matrix over a parameterized family")
    p.add_argument("--family", required=True, choices=bench.FAMILIES)
    p.add_argument("--grid", default=None, help="start:stop:step (default 0.1:0.9:0.1)")
    add_common(p, k=True, workers=True, outdir=True)
    p.set_defaults(handler=_cmd_table)

    p = sub.add_parser("bound", help="smallest best-of-all factor across a family")
    p.add_argument("--family", required=True, choices=bench.FAMILIES)
    p.add_argument("--grid", default=None)
    add_common(p, k=True, workers=True, out=True)
    p.set_defaults(handler=_cmd_bound)

    p = sub.add_parser("sweep", help="per-parameter mechanism scores (long CSV)")
    p.add_argument("--family", required=True, choices=bench.FAMILIES)
    p.add_argument("--grid", default=None)
    p.add_argument("--sigma", type=float, default=None,
                   help="fixed sigma for the mean_var sweep (default 0.2)")
    add_common(p, k=True, workers=True, outdir=True)
    p.set_defaults(handler=_cmd_sweep)

    p = sub.add_parser("mechanisms", help="price CDFs of the four mechanisms")
    p.add_argument("--instance", required=True)
    add_common(p, outdir=True)
    p.set_defaults(handler=_cmd_mechanisms)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleSetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
