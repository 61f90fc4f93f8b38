"""Value grids, uncertainty sets, and exact pointwise performance evaluation.

A buyer's value v and the seller's posted price s both live on one finite grid.
An uncertainty set collects every distribution F on the grid that matches given
power moments (integral of v^i equals m_i) and upper-tail probabilities
(P(v >= r_j) equals q_j). All indicators are inclusive: a buyer with value
equal to the posted price buys.

This module also hosts the brute-force side of the dual/primal equivalence:
``worst_case_certificate`` maximizes Nature's lambda-regret price by price,
directly over distributions, and is used to validate the dual LPs elsewhere.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .errors import (
    GridMismatchError,
    InfeasibleSetError,
    InputError,
    NumericalFailureError,
)

WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ValueGrid:
    """The ordered set of admissible values/prices (both endpoints included)."""

    points: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(float(x) for x in self.points))
        pts = np.asarray(self.points)
        if pts.size == 0:
            raise InputError("grid must contain at least one point")
        if not np.all(np.isfinite(pts)):
            raise InputError("grid points must be finite")
        if pts[0] < 0:
            raise InputError("grid points must be nonnegative")
        if pts.size > 1 and not np.all(np.diff(pts) > 0):
            raise InputError("grid points must be strictly increasing")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def lower(self) -> float:
        return self.points[0]

    @property
    def upper(self) -> float:
        return self.points[-1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points)

    def nearest_index(self, x: float) -> int:
        return int(np.argmin(np.abs(self.as_array() - x)))


def make_grid(a: float, b: float, k: int) -> ValueGrid:
    """Uniform grid a + i(b-a)/K for i = 0..K."""
    if not (np.isfinite(a) and np.isfinite(b)):
        raise InputError("grid endpoints must be finite")
    if a < 0:
        raise InputError(f"grid lower endpoint must be nonnegative, got {a}")
    if b <= a:
        raise InputError(f"grid needs b > a, got a={a}, b={b}")
    if k < 1:
        raise InputError(f"grid needs K >= 1, got {k}")
    pts = np.linspace(a, b, k + 1)
    pts[0], pts[-1] = a, b
    return ValueGrid(tuple(pts))


@dataclass(frozen=True)
class MomentConstraint:
    order: int
    value: float

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 0:
            raise InputError(f"moment order must be a nonnegative integer, got {self.order}")
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "value", float(self.value))
        if not np.isfinite(self.value):
            raise InputError("moment value must be finite")


@dataclass(frozen=True)
class QuantileConstraint:
    """Upper-tail pin: P(v >= location) = prob, location on the grid."""

    location: float
    prob: float

    def __post_init__(self):
        object.__setattr__(self, "location", float(self.location))
        object.__setattr__(self, "prob", float(self.prob))
        if not np.isfinite(self.location):
            raise InputError("quantile location must be finite")
        if not (0.0 <= self.prob <= 1.0):
            raise InputError(f"quantile prob must lie in [0,1], got {self.prob}")


@dataclass(frozen=True)
class UncertaintySet:
    """All distributions on the grid meeting the moment and tail constraints.

    Quantile locations are snapped to the nearest grid point at construction;
    a location farther than half the local grid gap from any point is an
    error. The order-0 moment (total mass 1) is inserted automatically when
    omitted.
    """

    grid: ValueGrid
    moments: tuple[MomentConstraint, ...] = ()
    quantiles: tuple[QuantileConstraint, ...] = ()
    family: str | None = None
    family_params: tuple[float, ...] = ()

    def __post_init__(self):
        moments = tuple(self.moments)
        orders = [m.order for m in moments]
        if len(set(orders)) != len(orders):
            raise InputError("moment orders must be pairwise distinct")
        zero = [m for m in moments if m.order == 0]
        if not zero:
            moments = (MomentConstraint(0, 1.0),) + moments
        elif zero[0].value != 1.0:
            raise InputError(f"order-0 moment must equal 1, got {zero[0].value}")
        object.__setattr__(self, "moments", tuple(sorted(moments, key=lambda m: m.order)))
        object.__setattr__(self, "quantiles", tuple(self._snap(q) for q in self.quantiles))
        locs = [q.location for q in self.quantiles]
        if len(set(locs)) != len(locs):
            raise InputError("quantile locations collide after grid snapping")
        object.__setattr__(self, "quantiles",
                           tuple(sorted(self.quantiles, key=lambda q: q.location)))
        object.__setattr__(self, "family_params",
                           tuple(float(x) for x in self.family_params))

    def _snap(self, q: QuantileConstraint) -> QuantileConstraint:
        pts = self.grid.as_array()
        if q.location < pts[0] - 1e-12 or q.location > pts[-1] + 1e-12:
            raise InputError(
                f"quantile location {q.location} outside the grid range "
                f"[{pts[0]}, {pts[-1]}]")
        idx = self.grid.nearest_index(q.location)
        gaps = []
        if idx > 0:
            gaps.append(pts[idx] - pts[idx - 1])
        if idx < len(pts) - 1:
            gaps.append(pts[idx + 1] - pts[idx])
        # Local resolution at the nearest point: the narrower adjacent gap.
        # On uniform grids any in-range location is within half a step of
        # some point, so this only rejects locations on custom grids that
        # would be silently moved by more than the grid resolves.
        half = 0.5 * min(gaps) if gaps else 0.0
        if abs(q.location - pts[idx]) > half + 1e-12:
            raise InputError(
                f"quantile location {q.location} is {abs(q.location - pts[idx]):.3g} "
                f"away from the nearest grid point; exceeds half a grid step")
        return QuantileConstraint(float(pts[idx]), q.prob)

    # Constraint data in array form -----------------------------------------

    def moment_orders(self) -> np.ndarray:
        return np.asarray([m.order for m in self.moments], dtype=int)

    def moment_values(self) -> np.ndarray:
        return np.asarray([m.value for m in self.moments])

    def quantile_indices(self) -> np.ndarray:
        return np.asarray([self.grid.nearest_index(q.location) for q in self.quantiles],
                          dtype=int)

    def quantile_probs(self) -> np.ndarray:
        return np.asarray([q.prob for q in self.quantiles])

    def equality_system(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows A, rhs b with A @ weights = b characterizing membership."""
        g = self.grid.as_array()
        rows = [g ** m.order for m in self.moments]
        b = [m.value for m in self.moments]
        for q in self.quantiles:
            rows.append((g >= q.location).astype(float))
            b.append(q.prob)
        return np.vstack(rows), np.asarray(b)


def make_family(tag: str, params, k: int) -> UncertaintySet:
    """One of the four named uncertainty-set families on a K+1-point grid.

    mean(mu): values in [0,1] with a pinned first moment.
    mean_var(mu, sigma): additionally pins the second moment mu^2 + sigma^2.
    median(nu): values in [0,1] with P(v >= nu) = 1/2.
    lower_bound(a): support restricted to [a, 1], no other information.
    """
    if isinstance(params, (int, float)):
        params = (params,)
    params = tuple(float(x) for x in params)
    arity = {"mean": 1, "mean_var": 2, "median": 1, "lower_bound": 1}
    if tag not in arity:
        raise InputError(f"unknown family {tag!r}; expected one of {sorted(arity)}")
    if len(params) != arity[tag]:
        raise InputError(f"family {tag} takes {arity[tag]} parameter(s), got {len(params)}")
    for x in params:
        if not (0.0 < x < 1.0):
            raise InputError(f"family parameters must lie in (0,1), got {x}")

    if tag == "mean":
        grid = make_grid(0.0, 1.0, k)
        moments = (MomentConstraint(1, params[0]),)
        quantiles = ()
    elif tag == "mean_var":
        mu, sigma = params
        grid = make_grid(0.0, 1.0, k)
        moments = (MomentConstraint(1, mu), MomentConstraint(2, mu * mu + sigma * sigma))
        quantiles = ()
    elif tag == "median":
        grid = make_grid(0.0, 1.0, k)
        moments = ()
        quantiles = (QuantileConstraint(params[0], 0.5),)
    else:
        grid = make_grid(params[0], 1.0, k)
        moments = ()
        quantiles = ()
    return UncertaintySet(grid, moments, quantiles, family=tag, family_params=params)


def _check_weights(grid: ValueGrid, weights) -> tuple[float, ...]:
    weights = tuple(float(w) for w in weights)
    if len(weights) != len(grid):
        raise InputError(
            f"expected {len(grid)} weights for this grid, got {len(weights)}")
    arr = np.asarray(weights)
    if not np.all(np.isfinite(arr)):
        raise InputError("weights must be finite")
    bad = np.nonzero(arr < 0)[0]
    if bad.size:
        raise InputError(f"weights[{bad[0]}] is negative ({arr[bad[0]]:.6g})")
    total = float(arr.sum())
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise InputError(f"weights sum to {total!r}, off by more than {WEIGHT_SUM_TOL}")
    return weights


class _WeightsOnGrid:
    """Shared constructor logic for probability vectors aligned with a grid."""

    @classmethod
    def from_solver(cls, grid: ValueGrid, raw):
        """Build from LP output: absorb solver-tolerance noise, then validate.

        Entries in [-1e-6, 0) are clipped to zero and the vector is rescaled
        to sum exactly 1. Anything worse than solver tolerance is a failure,
        not data to be repaired.
        """
        arr = np.asarray(raw, dtype=float).copy()
        if arr.min(initial=0.0) < -1e-6:
            raise NumericalFailureError(
                f"solver weight {arr.min():.3g} below zero beyond tolerance")
        np.clip(arr, 0.0, None, out=arr)
        total = arr.sum()
        if abs(total - 1.0) > 1e-6:
            raise NumericalFailureError(
                f"solver weights sum to {total!r}, beyond tolerance")
        return cls(grid, tuple(arr / total))


@dataclass(frozen=True)
class Distribution(_WeightsOnGrid):
    """Nature's value distribution: mass per grid value."""

    grid: ValueGrid
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", _check_weights(self.grid, self.weights))

    def weights_array(self) -> np.ndarray:
        return np.asarray(self.weights)


@dataclass(frozen=True)
class Mechanism(_WeightsOnGrid):
    """Randomized posted pricing: mass per grid price."""

    grid: ValueGrid
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", _check_weights(self.grid, self.weights))

    def weights_array(self) -> np.ndarray:
        return np.asarray(self.weights)

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.weights_array())


def _same_grid(a, b) -> None:
    if a.grid != b.grid:
        raise GridMismatchError("mechanism and distribution live on different grids")


def opt_revenue(f: Distribution) -> float:
    """max_p p * P(v >= p): the full-information revenue benchmark."""
    g = f.grid.as_array()
    tails = np.cumsum(f.weights_array()[::-1])[::-1]
    return float(np.max(g * tails))


def revenue_curve(mech: Mechanism) -> np.ndarray:
    """Expected payment of a buyer with value v, for each grid v (nondecreasing)."""
    g = mech.grid.as_array()
    return np.cumsum(g * mech.weights_array())


def revenue(mech: Mechanism, f: Distribution) -> float:
    _same_grid(mech, f)
    return float(f.weights_array() @ revenue_curve(mech))


def regret(mech: Mechanism, f: Distribution) -> float:
    return opt_revenue(f) - revenue(mech, f)


def ratio(mech: Mechanism, f: Distribution) -> float:
    """Revenue over the benchmark; a zero benchmark counts as fully served."""
    _same_grid(mech, f)
    opt = opt_revenue(f)
    if opt <= 0.0:
        return 1.0
    return revenue(mech, f) / opt


@functools.lru_cache(maxsize=None)
def check_feasible(uset: UncertaintySet) -> bool:
    """Whether any distribution on the grid satisfies all constraints."""
    model = lp.LpModel("min")
    cols = model.add_cols(len(uset.grid), lb=0.0)
    a, b = uset.equality_system()
    m, n = a.shape
    model.add_rows(m,
                   np.repeat(np.arange(m), n),
                   np.tile(cols, m),
                   a.ravel(),
                   "=", b)
    return lp.solve_feasibility(model).status == "optimal"


def ensure_feasible(uset: UncertaintySet) -> None:
    if not check_feasible(uset):
        raise InfeasibleSetError(
            f"uncertainty set has no feasible distribution: {uset.family or 'general'}"
            f"{uset.family_params or ''}")


def worst_case_certificate(mech: Mechanism, uset: UncertaintySet,
                           lam: float) -> tuple[float, Distribution]:
    """Nature's best response by brute force: max over F of lam*OPT(F) - Revenue.

    Solves one small LP per candidate price p (maximize lam*p*tail(p) minus
    revenue over member distributions) and keeps the best price. Serves as the
    primal oracle against which the dual LP of the robust module is checked.
    """
    if not (0.0 <= lam <= 1.0):
        raise InputError(f"lambda must lie in [0,1], got {lam}")
    _same_grid(mech, uset)
    ensure_feasible(uset)
    g = uset.grid.as_array()
    n = g.size
    a, b = uset.equality_system()
    m = a.shape[0]
    rows = np.repeat(np.arange(m), n)
    curve = revenue_curve(mech)

    best_val = -np.inf
    best_x = None
    for k in range(n):
        model = lp.LpModel("max")
        cols = model.add_cols(n, lb=0.0)
        model.add_rows(m, rows, np.tile(cols, m), a.ravel(), "=", b)
        gain = lam * g[k] * (np.arange(n) >= k) - curve
        model.set_objective(cols, gain)
        sol = lp.solve(model)
        if sol.status != "optimal":
            raise NumericalFailureError(
                f"price subproblem at p={g[k]} returned {sol.status} on a feasible set")
        if sol.objective > best_val:
            best_val = sol.objective
            best_x = sol.values
    return best_val, Distribution.from_solver(uset.grid, best_x)
