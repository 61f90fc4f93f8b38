"""One mechanism for all three criteria: the uniform guarantee factor c*.

A triple of targets (worst revenue at least theta_revenue, worst regret at
most theta_regret, worst ratio at least theta_ratio) is achievable exactly
when three cap blocks stacked on one mechanism are jointly feasible. Scaling
the three single-criterion optima by a common factor c (dividing for regret)
and searching for the largest feasible c yields c* and the mechanism
attaining it.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import lp
from .errors import InputError, NumericalFailureError
from .instance import Mechanism, UncertaintySet, ensure_feasible
from .robust import (
    DEFAULT_EPS,
    RobustSummary,
    _bisect_sup,
    _StackedDualModel,
    summarize,
    worst_lambda_regret,
    worst_ratio,
)
from .cross import ratio_band, relperf

#: Stand-in for "no regret constraint", used at the c = 0 end of the ray.
REGRET_CAP_FACTOR = 10.0


@dataclass(frozen=True)
class TripleTarget:
    theta_revenue: float
    theta_regret: float
    theta_ratio: float

    def __post_init__(self):
        if self.theta_regret < 0:
            raise InputError(f"regret target must be nonnegative, got {self.theta_regret}")
        if not (0.0 <= self.theta_ratio <= 1.0):
            raise InputError(f"ratio target must lie in [0,1], got {self.theta_ratio}")


@dataclass(frozen=True)
class BestOfAllResult:
    c_star: float
    mech: Mechanism
    summary: RobustSummary
    bracket: tuple[float, float]


def check_triple(uset: UncertaintySet, target: TripleTarget) -> Mechanism | None:
    """A mechanism achieving all three targets at once, or None.

    Three cap blocks share one mechanism: lambda = 0 capped at minus the
    revenue target, lambda = 1 capped at the regret target, and lambda =
    theta_ratio capped at (solver) zero, which is how "worst ratio at least
    theta_ratio" reads in lambda-regret form.
    """
    ensure_feasible(uset)
    stack = _StackedDualModel(uset)
    stack.add_block(0.0, cap=-target.theta_revenue)
    stack.add_block(1.0, cap=target.theta_regret)
    stack.add_block(target.theta_ratio, cap=lp.FEASIBILITY_TOL)
    sol = lp.solve_feasibility(stack.model)
    if sol.status == "infeasible":
        return None
    if sol.status != "optimal":
        raise NumericalFailureError(f"triple feasibility LP returned {sol.status}")
    return stack.mechanism(sol)


def ray_target(theta_triple: tuple[float, float, float], c: float,
               upper: float) -> TripleTarget:
    """The c-scaled target tuple: (c * rev, regret / c, c * ratio).

    The regret leg caps out at REGRET_CAP_FACTOR * upper near c = 0 (no
    mechanism's regret can exceed the grid's upper value, so the constraint
    is vacuous there), and a zero regret optimum is floored at 1e-7 so the
    division is always defined.
    """
    rev, reg, rat = theta_triple
    if c < 0:
        raise InputError(f"scale factor must be nonnegative, got {c}")
    reg_eff = max(reg, 1e-7)
    cap = REGRET_CAP_FACTOR * upper
    reg_t = cap if c == 0.0 else min(reg_eff / c, cap)
    return TripleTarget(c * rev, reg_t, c * rat)


def best_of_all(uset: UncertaintySet, eps: float = DEFAULT_EPS,
                summary: RobustSummary | None = None) -> BestOfAllResult:
    """Largest c with a single mechanism c-good for all three criteria."""
    if eps <= 0:
        raise InputError(f"eps must be positive, got {eps}")
    if summary is None:
        summary = summarize(uset, eps)
    triple = (summary.theta_revenue, summary.theta_regret, summary.theta_ratio)
    upper = uset.grid.upper

    def probe(c: float):
        return check_triple(uset, ray_target(triple, c, upper))

    c_star, mech, _, bracket = _bisect_sup(probe, eps)

    # The witness came out of a feasibility solve; confirm the guarantee by
    # evaluating it from scratch before handing it to anyone.
    target = ray_target(triple, c_star, upper)
    rev_w = -worst_lambda_regret(mech, uset, 0.0)[0]
    reg_w = worst_lambda_regret(mech, uset, 1.0)[0]
    rat_w = worst_lambda_regret(mech, uset, target.theta_ratio)[0]
    tol = 1e-6
    if (rev_w < target.theta_revenue - tol or reg_w > target.theta_regret + tol
            or rat_w > lp.FEASIBILITY_TOL + tol):
        raise NumericalFailureError(
            f"witness fails its own targets: revenue {rev_w} vs {target.theta_revenue}, "
            f"regret {reg_w} vs {target.theta_regret}, "
            f"lambda-regret at ratio target {rat_w}")
    return BestOfAllResult(c_star, mech, summary, bracket)


def relperf_all(mech: Mechanism, uset: UncertaintySet,
                summary: RobustSummary | None = None,
                eps: float = DEFAULT_EPS) -> float:
    """Worst relative performance across the three criteria, decoupled form.

    Each worst case is computed on its own (so three adversaries, possibly
    three different distributions); the joint single-adversary definition
    gives the same number and is exercised as a test oracle on small grids.
    """
    if summary is None:
        summary = summarize(uset, eps)
    raw_rev = -worst_lambda_regret(mech, uset, 0.0)[0]
    raw_reg = worst_lambda_regret(mech, uset, 1.0)[0]
    raw_rat = worst_ratio(mech, uset)[0]
    return min(
        relperf(raw_rev, summary.theta_revenue, "revenue"),
        relperf(raw_reg, summary.theta_regret, "regret"),
        relperf(raw_rat, summary.theta_ratio, "ratio", band=ratio_band(summary)),
    )
