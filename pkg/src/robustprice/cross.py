"""Cross-criterion evaluation over the whole optimal set, not one mechanism.

The question answered here: if the seller insists on a mechanism that is
optimal for an old criterion, how well can the best such mechanism do under a
new one? The old criterion enters as a cap block R_{lambda_old}(Phi) <= r_old
stacked onto the new criterion's LP, so the answer quantifies over every
old-optimal mechanism at once. Extracting one optimizer and re-scoring it
would silently depend on the solver's tie-breaking; this formulation does not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lp
from .errors import CrossInfeasibleError, InconsistentInputsError, InputError
from .instance import Mechanism, UncertaintySet, ensure_feasible
from .robust import (
    DEFAULT_EPS,
    CriterionSpec,
    RobustSummary,
    _bisect_sup,
    _StackedDualModel,
    summarize,
)


@dataclass(frozen=True)
class OldCriterionConstraint:
    """Membership in the old criterion's optimal set, as a lambda-regret cap.

    The effective bound is r_old plus a small slack: r_old itself came out of
    a solver, and the cap binds exactly at optimum, so a hair of room is
    needed to keep the optimal set nonempty numerically.
    """

    lambda_old: float
    r_old: float
    slack: float

    @classmethod
    def from_summary(cls, summary: RobustSummary, criterion: str) -> "OldCriterionConstraint":
        if criterion == "revenue":
            lam, r = 0.0, -summary.theta_revenue
        elif criterion == "regret":
            lam, r = 1.0, summary.theta_regret
        elif criterion == "ratio":
            lam, r = summary.theta_ratio, 0.0
        else:
            raise InputError(f"no cross mapping for criterion {criterion!r}")
        return cls(lam, r, max(1e-7, 1e-6 * abs(r)))

    @property
    def bound(self) -> float:
        return self.r_old + self.slack


@dataclass(frozen=True)
class CrossResult:
    old: CriterionSpec
    new: CriterionSpec
    raw_value: float
    relperf: float
    witness: Mechanism


def cross_regret(uset: UncertaintySet, old: OldCriterionConstraint,
                 lambda_new: float) -> tuple[float, Mechanism]:
    """min of R_{lambda_new}(Phi) over mechanisms meeting the old cap."""
    if not (0.0 <= lambda_new <= 1.0):
        raise InputError(f"lambda must lie in [0,1], got {lambda_new}")
    ensure_feasible(uset)
    stack = _StackedDualModel(uset)
    stack.add_theta()
    stack.add_block(lambda_new)
    stack.add_block(old.lambda_old, cap=old.bound)
    sol = lp.solve(stack.model)
    if sol.status == "infeasible":
        raise CrossInfeasibleError(
            f"no mechanism satisfies the old bound R_{old.lambda_old} <= {old.bound}; "
            f"the bound likely came from a different uncertainty set")
    if sol.status != "optimal":
        raise CrossInfeasibleError(f"cross LP returned {sol.status}")
    return sol.objective, stack.mechanism(sol)


def cross_ratio_search(uset: UncertaintySet, old: OldCriterionConstraint,
                       eps: float = DEFAULT_EPS) -> tuple[float, Mechanism]:
    """Largest lambda certifiably nonpositive among old-optimal mechanisms.

    Probes the identical lambda sequence as the unconstrained ratio search,
    so when old = ratio the two bisections accept the same probes and agree
    exactly.
    """
    ensure_feasible(uset)

    def probe(lam: float):
        stack = _StackedDualModel(uset)
        stack.add_block(lam, cap=lp.FEASIBILITY_TOL)
        stack.add_block(old.lambda_old, cap=old.bound)
        sol = lp.solve_feasibility(stack.model)
        if sol.status != "optimal":
            return None
        return stack.mechanism(sol)

    lam, mech, _, _ = _bisect_sup(probe, eps)
    return lam, mech


def cross_ratio_direct(uset: UncertaintySet, old: OldCriterionConstraint,
                       ) -> tuple[float, Mechanism]:
    """Single-LP version of cross_ratio_search; kept as an independent check."""
    ensure_feasible(uset)
    stack = _StackedDualModel(uset, sense="max")
    rcol = stack.add_ratio_objective()
    stack.add_block(old.lambda_old, cap=old.bound)
    sol = lp.solve(stack.model)
    if sol.status != "optimal":
        raise CrossInfeasibleError(f"direct cross ratio LP returned {sol.status}")
    return float(sol.values[rcol]), stack.mechanism(sol)


def ratio_band(summary: RobustSummary) -> float:
    """Extra relperf tolerance when the reference ratio is a bisection value.

    theta_ratio sits up to eps below the true optimum, so an exactly computed
    worst ratio may exceed it by eps in absolute terms, which inflates the
    quotient by eps / theta_ratio.
    """
    return summary.eps / max(summary.theta_ratio, summary.eps)


def relperf(raw: float, theta_star: float, criterion, band: float = 0.0) -> float:
    """Performance relative to the criterion's robust optimum, in [0,1].

    Revenue and ratio divide the achieved worst case by theta_star; regret
    divides theta_star by the achieved worst case. Values may poke above 1 by
    solver tolerance (plus ``band`` where the reference itself is a bisection
    value); anything beyond that means the inputs disagree about which
    uncertainty set they came from, and is an error rather than a clamp.
    """
    kind = criterion.kind if isinstance(criterion, CriterionSpec) else str(criterion)
    if kind == "regret":
        if theta_star <= 1e-7:
            # Singleton-type sets: every mechanism has zero regret.
            return 1.0 if raw <= 1e-7 else 0.0
        if raw <= 0.0:
            raise InconsistentInputsError(
                f"worst regret {raw!r} below the optimum {theta_star!r}")
        rp = theta_star / raw
    elif kind in ("revenue", "ratio"):
        if theta_star <= 1e-7:
            return 1.0
        rp = raw / theta_star
    else:
        raise InputError(f"no relative performance for criterion {kind!r}")
    if rp > 1.0 + 1e-6 + band:
        raise InconsistentInputsError(
            f"relative performance {rp!r} exceeds 1 beyond tolerance; "
            f"raw={raw!r} against theta_star={theta_star!r} ({kind})")
    return float(min(max(rp, 0.0), 1.0))


def cross_performance(uset: UncertaintySet, old, new,
                      summary: RobustSummary | None = None,
                      eps: float = DEFAULT_EPS) -> CrossResult:
    """Full pipeline for one (old, new) cell: solve, cap, re-solve, normalize."""
    old = old if isinstance(old, CriterionSpec) else CriterionSpec(str(old))
    new = new if isinstance(new, CriterionSpec) else CriterionSpec(str(new))
    for spec in (old, new):
        if spec.kind == "lambda":
            raise InputError("cross evaluation is defined for the named criteria only")
    if summary is None:
        summary = summarize(uset, eps)
    constraint = OldCriterionConstraint.from_summary(summary, old.kind)

    if new.kind == "revenue":
        theta, mech = cross_regret(uset, constraint, 0.0)
        raw = -theta
        rp = relperf(raw, summary.theta_revenue, "revenue")
    elif new.kind == "regret":
        raw, mech = cross_regret(uset, constraint, 1.0)
        rp = relperf(raw, summary.theta_regret, "regret")
    else:
        raw, mech = cross_ratio_search(uset, constraint, summary.eps)
        rp = relperf(raw, summary.theta_ratio, "ratio", band=ratio_band(summary))
    return CrossResult(old, new, float(raw), rp, mech)
