"""Brute-force oracles and random generators shared across the test suite.

Everything in here is deliberately dumb and LP-free: dense parameter sweeps
and combinatorial vertex enumeration, so that solver output is checked
against an independent computation path. Oracles only need to be fast enough
for grids with a dozen points.
"""

from __future__ import annotations

import itertools

import numpy as np

from robustprice.instance import (
    Distribution,
    Mechanism,
    MomentConstraint,
    QuantileConstraint,
    UncertaintySet,
    make_grid,
    opt_revenue,
    ratio,
    regret,
    revenue,
)

FEAS_TOL = 1e-7


# Two-point analytics --------------------------------------------------------
#
# On the support-only set over {0.5, 1} write Phi = (phi1, 1 - phi1) and
# F = (1 - q, q). Then Revenue = 0.5*phi1 + q*(1 - phi1) and
# OPT = max(0.5, q), both exact, so Nature's problem is a 1-d sweep over q
# and the seller's problem a sweep over phi1.

def two_point_worst_payoff(phi1: float, lam: float, step: float = 1e-4) -> float:
    """max over F of lam*OPT(F) - Revenue(Phi, F) on the two-point set."""
    q = np.arange(0.0, 1.0 + step / 2, step)
    rev = 0.5 * phi1 + q * (1.0 - phi1)
    opt = np.maximum(0.5, q)
    return float(np.max(lam * opt - rev))


def two_point_minimax(lam: float, step: float = 1e-4) -> tuple[float, float]:
    """(min over phi1 of the worst lam-regret, argmin phi1), both swept."""
    best_val, best_phi = np.inf, None
    for phi1 in np.arange(0.0, 1.0 + step / 2, step):
        val = two_point_worst_payoff(float(phi1), lam, step)
        if val < best_val:
            best_val, best_phi = val, float(phi1)
    return best_val, best_phi


# Vertex enumeration ---------------------------------------------------------

def vertex_distributions(uset: UncertaintySet) -> list[Distribution]:
    """All vertices of the membership polytope {w >= 0, A w = b}.

    A vertex has support of size at most rank(A) <= #rows, so enumerating
    support subsets up to that size and solving the restricted system finds
    every vertex; spurious least-squares solutions are filtered by residual
    and sign checks. Intended for grids with at most a dozen points.
    """
    a, b = uset.equality_system()
    n = len(uset.grid)
    m = a.shape[0]
    seen = set()
    out = []
    for size in range(1, min(m, n) + 1):
        for support in itertools.combinations(range(n), size):
            sub = a[:, support]
            w = np.linalg.lstsq(sub, b, rcond=None)[0]
            full = np.zeros(n)
            full[list(support)] = w
            if full.min() < -1e-10:
                continue
            if np.max(np.abs(a @ full - b)) > 1e-9:
                continue
            key = tuple(np.round(full, 9))
            if key in seen:
                continue
            seen.add(key)
            clipped = np.clip(full, 0.0, None)
            out.append(Distribution(uset.grid, tuple(clipped / clipped.sum())))
    if not out:
        raise AssertionError("vertex enumeration found no member distribution")
    return out


def brute_worst_lambda_regret(mech: Mechanism, uset: UncertaintySet,
                              lam: float, verts=None) -> float:
    """max over member F of lam*OPT(F) - Revenue(mech, F), via vertices.

    Valid because the objective is convex piecewise-linear in F (OPT is a max
    of linear functionals, Revenue is linear), so the maximum over the
    polytope is attained at a vertex.
    """
    verts = vertex_distributions(uset) if verts is None else verts
    return max(lam * opt_revenue(f) - revenue(mech, f) for f in verts)


def brute_worst_ratio(mech: Mechanism, uset: UncertaintySet, verts=None) -> float:
    """min over member F of Revenue/OPT. Vertex-attained: at the optimal
    value r*, the function Revenue - r* * OPT is concave in F and its minimum
    (zero) sits at a vertex of the polytope."""
    verts = vertex_distributions(uset) if verts is None else verts
    return min(ratio(mech, f) for f in verts)


def brute_relperf_all(mech: Mechanism, uset: UncertaintySet,
                      theta_triple: tuple[float, float, float],
                      verts=None) -> float:
    """Joint one-adversary all-criteria score: a single F is chosen by Nature
    and the least of the three normalized performances at that F is taken,
    then minimized over F. The decoupled three-adversary form must agree.

    Degenerate-theta conventions mirror the production scoring: a criterion
    whose optimal value is below the feasibility tolerance contributes 1
    (revenue, ratio) or an exact 0/1 indicator (regret).
    """
    t_rev, t_reg, t_rat = theta_triple
    verts = vertex_distributions(uset) if verts is None else verts
    worst = np.inf
    for f in verts:
        rev = revenue(mech, f)
        reg = regret(mech, f)
        rat = ratio(mech, f)
        s_rev = 1.0 if t_rev <= FEAS_TOL else rev / t_rev
        if t_reg <= FEAS_TOL:
            s_reg = 1.0 if reg <= FEAS_TOL else 0.0
        else:
            s_reg = np.inf if reg <= 1e-12 else t_reg / reg
        s_rat = 1.0 if t_rat <= FEAS_TOL else rat / t_rat
        worst = min(worst, s_rev, s_reg, s_rat)
    return float(min(max(worst, 0.0), 1.0))


# Random generators ----------------------------------------------------------

def random_instance(rng: np.random.Generator, kmax: int = 10,
                    ) -> tuple[UncertaintySet, Distribution]:
    """A feasible uncertainty set built anchor-first, plus its anchor.

    A random distribution F0 is drawn on a random grid and a random subset
    of its own moments and one of its own tails are imposed as constraints,
    so F0 is a member by construction and the set is never empty.
    """
    a = float(rng.uniform(0.05, 0.5))
    b = a + float(rng.uniform(0.3, 1.0))
    k = int(rng.integers(1, kmax + 1))
    grid = make_grid(a, b, k)
    pts = grid.as_array()
    w = rng.dirichlet(np.full(k + 1, float(rng.uniform(0.4, 2.0))))
    anchor = Distribution(grid, tuple(w / w.sum()))
    warr = anchor.weights_array()
    moments = []
    if rng.random() < 0.85:
        count = int(rng.integers(1, 3))
        for order in sorted(rng.choice([1, 2, 3], size=count, replace=False)):
            moments.append(MomentConstraint(int(order),
                                            float(np.dot(pts ** order, warr))))
    quantiles = []
    if rng.random() < 0.4:
        idx = int(rng.integers(0, k + 1))
        # The partial sum can land a couple of ulps outside [0, 1].
        tail = min(1.0, max(0.0, float(warr[idx:].sum())))
        quantiles.append(QuantileConstraint(float(pts[idx]), tail))
    return UncertaintySet(grid, tuple(moments), tuple(quantiles)), anchor


def random_mechanism(rng: np.random.Generator, grid) -> Mechanism:
    n = len(grid)
    if rng.random() < 0.2:
        w = np.zeros(n)
        w[int(rng.integers(0, n))] = 1.0
    else:
        w = rng.dirichlet(np.full(n, float(rng.uniform(0.3, 2.0))))
        w = w / w.sum()
    return Mechanism(grid, tuple(w))
