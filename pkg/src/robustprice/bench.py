"""Experiment harness: cross matrices, uniform-guarantee bounds, sweep data.

One instance analysis (the three robust solves, the nine cross cells, the
best-of-all factor, and the four mechanisms' all-criteria scores) is computed
once and cached; every family-level aggregate reads from that. Families are
embarrassingly parallel across parameter values, so the aggregates accept a
worker count and farm instances out to a process pool.
"""

from __future__ import annotations

import csv
import functools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .cross import cross_performance
from .errors import InfeasibleSetError, InputError
from .instance import Mechanism, UncertaintySet, check_feasible, make_family
from .multi import best_of_all, relperf_all
from .robust import DEFAULT_EPS, summarize

CRITERIA = ("revenue", "regret", "ratio")
FAMILIES = ("mean", "mean_var", "median", "lower_bound")
MECHANISM_NAMES = ("revenue", "regret", "ratio", "all")


@dataclass(frozen=True)
class ParamGrid:
    """The parameter values a family is swept over."""

    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(x) for x in self.values))
        if not self.values:
            raise InputError("parameter grid must be nonempty")
        for x in self.values:
            if not (0.0 < x < 1.0):
                raise InputError(f"family parameters must lie in (0,1), got {x}")


DEFAULT_PARAM_GRID = ParamGrid(tuple(i / 10 for i in range(1, 10)))

#: Sweeps over the mean_var family hold sigma fixed at this value.
DEFAULT_SIGMA = 0.2


@dataclass(frozen=True)
class InstanceReport:
    """Everything the aggregates need about one uncertainty set."""

    family: str
    params: tuple[float, ...]
    k: int
    eps: float
    theta_revenue: float
    theta_regret: float
    theta_ratio: float
    # Rows: criterion the mechanism set is optimal for; cols: criterion
    # evaluated; order per CRITERIA.
    cross_relperf: tuple[tuple[float, float, float], ...]
    cross_raw: tuple[tuple[float, float, float], ...]
    # All-criteria score of each of the four mechanisms, order per
    # MECHANISM_NAMES.
    relperf_by_mech: tuple[float, float, float, float]
    c_star: float
    mechanisms: tuple[Mechanism, Mechanism, Mechanism, Mechanism]


@dataclass(frozen=True)
class CrossMatrix:
    """Per-family worst case over parameters of each cross cell."""

    family: str
    cells: tuple[tuple[float, float, float], ...]
    argmin: tuple[tuple[tuple[float, ...], ...], ...]
    skipped: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class SweepRow:
    """One parameter value: all-criteria score of each mechanism."""

    param: float
    rp_revenue: float
    rp_regret: float
    rp_ratio: float
    rp_all: float
    theta_revenue: float
    theta_regret: float
    theta_ratio: float


@dataclass(frozen=True)
class MechanismExport:
    """Price CDFs of the four mechanisms on one instance."""

    values: tuple[float, ...]
    names: tuple[str, ...]
    cdfs: tuple[tuple[float, ...], ...]
    relperf: tuple[float, ...]


@functools.lru_cache(maxsize=None)
def _analyze(family: str, params: tuple, k: int, eps: float) -> InstanceReport:
    uset = make_family(family, params, k)
    summary = summarize(uset, eps)
    rp_rows, raw_rows = [], []
    for old in CRITERIA:
        rp_row, raw_row = [], []
        for new in CRITERIA:
            cell = cross_performance(uset, old, new, summary=summary)
            rp_row.append(cell.relperf)
            raw_row.append(cell.raw_value)
        rp_rows.append(tuple(rp_row))
        raw_rows.append(tuple(raw_row))
    best = best_of_all(uset, eps, summary=summary)
    mechs = (summary.mech_revenue, summary.mech_regret, summary.mech_ratio,
             best.mech)
    scores = tuple(relperf_all(m, uset, summary=summary) for m in mechs)
    return InstanceReport(
        family=family, params=params, k=k, eps=eps,
        theta_revenue=summary.theta_revenue,
        theta_regret=summary.theta_regret,
        theta_ratio=summary.theta_ratio,
        cross_relperf=tuple(rp_rows), cross_raw=tuple(raw_rows),
        relperf_by_mech=scores, c_star=best.c_star, mechanisms=mechs)


def analyze_instance(family: str, params, k: int = 100,
                     eps: float = DEFAULT_EPS) -> InstanceReport:
    """Cached full analysis of one family instance."""
    if isinstance(params, (int, float)):
        params = (params,)
    return _analyze(str(family), tuple(float(x) for x in params), int(k), float(eps))


def family_params(family: str, grid: ParamGrid | None = None,
                  k: int = 100) -> tuple[list[tuple], list[tuple]]:
    """Instance parameter tuples for a family: (kept, skipped).

    mean_var ranges over all (mu, sigma) pairs of the grid and screens each
    for feasibility on the actual value grid (a sharper test than the
    sigma^2 <= mu(1-mu) envelope); the skipped pairs are reported, not
    silently dropped. Other families keep every single parameter.
    """
    if family not in FAMILIES:
        raise InputError(f"unknown family {family!r}; expected one of {FAMILIES}")
    grid = grid if grid is not None else DEFAULT_PARAM_GRID
    if family != "mean_var":
        return [(x,) for x in grid.values], []
    kept, skipped = [], []
    for mu in grid.values:
        for sigma in grid.values:
            target = kept if check_feasible(make_family("mean_var", (mu, sigma), k)) \
                else skipped
            target.append((mu, sigma))
    return kept, skipped


def resolve_workers(workers=None) -> int:
    """Explicit argument, else ROBUSTPRICE_WORKERS, else the machine's CPUs."""
    if workers is None:
        env = os.environ.get("ROBUSTPRICE_WORKERS", "").strip()
        if env:
            try:
                workers = int(env)
            except ValueError:
                raise InputError(
                    f"ROBUSTPRICE_WORKERS must be an integer, got {env!r}") from None
        else:
            workers = os.cpu_count() or 1
    workers = int(workers)
    if workers < 1:
        raise InputError(f"worker count must be at least 1, got {workers}")
    return workers


def _pmap(fn, items, workers=None) -> list:
    items = list(items)
    n = min(resolve_workers(workers), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _family_reports(family, grid, k, eps, workers):
    kept, skipped = family_params(family, grid, k)
    if not kept:
        raise InfeasibleSetError(
            f"family {family} has no feasible instance on this parameter grid")
    runner = functools.partial(analyze_instance, family, k=k, eps=eps)
    return _pmap(runner, kept, workers), skipped


def cross_matrix(family: str, grid: ParamGrid | None = None, k: int = 100,
                 eps: float = DEFAULT_EPS, workers=None) -> CrossMatrix:
    """Worst case over the parameter grid of each (old, new) cross cell."""
    reports, skipped = _family_reports(family, grid, k, eps, workers)
    cells, argmins = [], []
    for i in range(3):
        cell_row, arg_row = [], []
        for j in range(3):
            values = [r.cross_relperf[i][j] for r in reports]
            pos = min(range(len(values)), key=values.__getitem__)
            cell_row.append(values[pos])
            arg_row.append(reports[pos].params)
        cells.append(tuple(cell_row))
        argmins.append(tuple(arg_row))
    return CrossMatrix(family, tuple(cells), tuple(argmins), tuple(skipped))


def uniform_factor_bound(family: str, grid: ParamGrid | None = None, k: int = 100,
                         eps: float = DEFAULT_EPS, workers=None) -> float:
    """Uniform lower bound on the best-of-all factor across the family."""
    reports, _ = _family_reports(family, grid, k, eps, workers)
    return min(r.c_star for r in reports)


def focal_minima(family: str, grid: ParamGrid | None = None, k: int = 100,
                 eps: float = DEFAULT_EPS, workers=None,
                 ) -> tuple[float, float, float]:
    """Worst all-criteria score of each focal mechanism across the family."""
    reports, _ = _family_reports(family, grid, k, eps, workers)
    return tuple(min(r.relperf_by_mech[i] for r in reports) for i in range(3))


def sweep(family: str, params=None, k: int = 100, eps: float = DEFAULT_EPS,
          sigma: float | None = None, workers=None) -> list[SweepRow]:
    """Per-parameter all-criteria scores of the four mechanisms.

    For mean_var the sweep fixes sigma (default DEFAULT_SIGMA) and moves mu;
    parameter values whose instance is infeasible are omitted from the
    result rather than reported as rows.
    """
    if params is None:
        values = DEFAULT_PARAM_GRID.values
    elif isinstance(params, ParamGrid):
        values = params.values
    else:
        values = ParamGrid(tuple(params)).values
    if family == "mean_var":
        sigma = DEFAULT_SIGMA if sigma is None else float(sigma)
        tuples = [(v, sigma) for v in values]
    else:
        if sigma is not None:
            raise InputError(f"sigma applies to the mean_var family, not {family}")
        tuples = [(v,) for v in values]
    kept = [t for t in tuples if check_feasible(make_family(family, t, k))]
    runner = functools.partial(analyze_instance, family, k=k, eps=eps)
    reports = _pmap(runner, kept, workers)
    return [
        SweepRow(param=t[0],
                 rp_revenue=r.relperf_by_mech[0], rp_regret=r.relperf_by_mech[1],
                 rp_ratio=r.relperf_by_mech[2], rp_all=r.relperf_by_mech[3],
                 theta_revenue=r.theta_revenue, theta_regret=r.theta_regret,
                 theta_ratio=r.theta_ratio)
        for t, r in zip(kept, reports)
    ]


def export_mechanisms(uset: UncertaintySet, eps: float = DEFAULT_EPS,
                      summary=None) -> MechanismExport:
    """The four mechanisms' price CDFs plus their all-criteria scores."""
    if summary is None:
        summary = summarize(uset, eps)
    best = best_of_all(uset, eps, summary=summary)
    mechs = (summary.mech_revenue, summary.mech_regret, summary.mech_ratio,
             best.mech)
    return MechanismExport(
        values=uset.grid.points,
        names=MECHANISM_NAMES,
        cdfs=tuple(tuple(float(c) for c in m.cdf()) for m in mechs),
        relperf=tuple(relperf_all(m, uset, summary=summary) for m in mechs))


# Reporting helpers ----------------------------------------------------------

def sig12(x: float) -> str:
    return f"{float(x):.12g}"


def round2(x: float) -> float:
    """Two decimals, ties away from zero (0.005 -> 0.01, -0.005 -> -0.01)."""
    return float(Decimal(repr(float(x))).quantize(Decimal("0.01"),
                                                  rounding=ROUND_HALF_UP))


def _fmt2(x: float) -> str:
    return f"{round2(x):.2f}"


def _fmt_params(params) -> str:
    return ";".join(sig12(p) for p in params)


def write_table_csv(matrix: CrossMatrix, path) -> None:
    """Cross matrix as CSV: full precision, two-decimal, and argmin per cell.

    Skipped parameter pairs (mean_var infeasibility screening) are appended
    as '#'-prefixed trailer lines.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["mechanism"]
        for crit in CRITERIA:
            header += [crit, f"{crit}_2dp", f"{crit}_argmin"]
        writer.writerow(header)
        for i, old in enumerate(CRITERIA):
            row = [old]
            for j in range(3):
                row += [sig12(matrix.cells[i][j]), _fmt2(matrix.cells[i][j]),
                        _fmt_params(matrix.argmin[i][j])]
            writer.writerow(row)
        for params in matrix.skipped:
            fh.write(f"# skipped infeasible params: {_fmt_params(params)}\n")


def write_sweep_csv(rows: list[SweepRow], path) -> None:
    """Long-format sweep data: one line per (parameter, mechanism)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter", "mechanism", "relperf"])
        for row in rows:
            scores = (row.rp_revenue, row.rp_regret, row.rp_ratio, row.rp_all)
            for name, score in zip(MECHANISM_NAMES, scores):
                writer.writerow([sig12(row.param), name, sig12(score)])


def write_mechanisms_csv(export: MechanismExport, path) -> None:
    """CDF columns per mechanism; headers carry the all-criteria score."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value"] + [
            f"{name} ({rp:.4f})" for name, rp in zip(export.names, export.relperf)])
        for idx, value in enumerate(export.values):
            writer.writerow([sig12(value)] + [sig12(cdf[idx]) for cdf in export.cdfs])
