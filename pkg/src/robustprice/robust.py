"""Robustly optimal mechanisms via the lambda-regret family of dual LPs.

Everything here is organized around one scalar family. For a mechanism Phi and
lambda in [0,1],

    R_lambda(Phi) = max over member F of [lambda * OPT(F) - Revenue(Phi, F)]

and R*_lambda = min over Phi of R_lambda(Phi). The three robustness criteria
are slices of it: worst-case revenue is -R*_0, minimax regret is R*_1, and the
maximin ratio is the largest lambda whose optimal value is still nonpositive.

Nature's inner maximization is dualized price by price, which turns both the
evaluation of a fixed mechanism and the minimization over mechanisms into one
LP each. The LP keeps a cumulative-payment variable W_v shared by all rows,
so its matrix stays sparse, and several lambda-blocks can be stacked over the
same mechanism columns; the cross and multi modules lean on that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lp
from .errors import GridMismatchError, InputError, NumericalFailureError
from .instance import (
    Distribution,
    Mechanism,
    UncertaintySet,
    ensure_feasible,
    opt_revenue,
    revenue,
    worst_case_certificate,
)

#: Bisection width below which a lambda search stops.
DEFAULT_EPS = 1e-4

#: Hard cap on bisection probes before declaring a numerical failure.
MAX_BISECT_ITER = 30


@dataclass(frozen=True)
class CriterionSpec:
    """A single robustness objective: one of the named ones or a raw lambda."""

    kind: str
    lam: float | None = None

    def __post_init__(self):
        if self.kind not in ("revenue", "regret", "ratio", "lambda"):
            raise InputError(f"unknown criterion kind {self.kind!r}")
        if (self.kind == "lambda") != (self.lam is not None):
            raise InputError("lambda criterion needs a value; named ones take none")
        if self.lam is not None and not (0.0 <= self.lam <= 1.0):
            raise InputError(f"lambda must lie in [0,1], got {self.lam}")


def parse_criterion(text: str) -> CriterionSpec:
    text = text.strip()
    if text in ("revenue", "regret", "ratio"):
        return CriterionSpec(text)
    if text.startswith("lambda="):
        try:
            val = float(text.split("=", 1)[1])
        except ValueError:
            raise InputError(f"bad lambda value in criterion {text!r}") from None
        return CriterionSpec("lambda", val)
    raise InputError(
        f"unknown criterion {text!r}; expected revenue, regret, ratio, or lambda=<x>")


@dataclass(frozen=True, eq=False)
class DualCertificate:
    """Optimal multipliers from a lambda-regret LP, one row per price.

    alpha[p, i] multiplies moment i and beta[p, j] multiplies tail pin j. For
    every price p the weighted constraint values bound Nature's payoff at p
    from above, and theta is the largest of those bounds.
    """

    theta: float
    alpha: np.ndarray
    beta: np.ndarray


@dataclass(frozen=True)
class RobustSummary:
    """The three optimal values and mechanisms for one uncertainty set."""

    theta_revenue: float
    theta_regret: float
    theta_ratio: float
    mech_revenue: Mechanism
    mech_regret: Mechanism
    mech_ratio: Mechanism
    eps: float
    feasibility_tol: float
    optimality_tol: float
    ratio_iterations: int

    def theta(self, criterion: str) -> float:
        return {"revenue": self.theta_revenue, "regret": self.theta_regret,
                "ratio": self.theta_ratio}[criterion]

    def mechanism(self, criterion: str) -> Mechanism:
        return {"revenue": self.mech_revenue, "regret": self.mech_regret,
                "ratio": self.mech_ratio}[criterion]


@dataclass(frozen=True, eq=False)
class _Block:
    lam: float
    alpha: np.ndarray
    beta: np.ndarray


class _StackedDualModel:
    """Dual LP builder: shared mechanism columns, one block per lambda bound.

    Columns phi_v (price mass, >= 0, summing to one) and W_v (expected payment
    of a buyer with value v) are created once; passing fixed_mech pins the
    phi_v to given weights, which turns the model into an evaluator. Each
    block carries its own multipliers alpha(p), beta(p) and encodes either

        per price p:  dual objective at p <= theta      (objective block)
        per price p:  dual objective at p <= cap        (cap block)

    together with the n*n pointwise rows

        W_v + sum_i alpha_i(p) v^i + sum_j beta_j(p) 1(v >= r_j)
            >= lam * p * 1(v >= p).
    """

    def __init__(self, uset: UncertaintySet, sense: str = "min",
                 fixed_mech: Mechanism | None = None):
        self.uset = uset
        g = uset.grid.as_array()
        self.g = g
        self.n = n = g.size
        self.m_val = uset.moment_values()
        self.q_idx = uset.quantile_indices()
        self.q_val = uset.quantile_probs()
        self.powers = g[None, :] ** uset.moment_orders()[:, None]
        self.p_idx = np.repeat(np.arange(n), n)
        self.v_idx = np.tile(np.arange(n), n)
        self.model = lp.LpModel(sense)
        self.theta: int | None = None

        if fixed_mech is None:
            self.phi = self.model.add_cols(n, lb=0.0)
        else:
            if fixed_mech.grid != uset.grid:
                raise GridMismatchError(
                    "mechanism and uncertainty set live on different grids")
            w = fixed_mech.weights_array()
            self.phi = self.model.add_cols(n, lb=w, ub=w)
        self.w = self.model.add_cols(n)
        self.model.add_row(self.phi, np.ones(n), "=", 1.0)
        # W_0 = g_0 phi_0 and W_v - W_{v-1} = g_v phi_v.
        rows = np.concatenate([np.arange(n), np.arange(1, n), np.arange(n)])
        cols = np.concatenate([self.w, self.w[:-1], self.phi])
        vals = np.concatenate([np.ones(n), -np.ones(n - 1), -g])
        self.model.add_rows(n, rows, cols, vals, "=", np.zeros(n))

    def add_theta(self) -> int:
        if self.theta is not None:
            raise NumericalFailureError("objective variable added twice")
        self.theta = int(self.model.add_cols(1)[0])
        self.model.set_objective([self.theta], [1.0])
        return self.theta

    def add_block(self, lam: float, cap: float | None = None) -> _Block:
        n = self.n
        n_m, n_q = len(self.m_val), len(self.q_val)
        alpha = self.model.add_cols(n * n_m)
        beta = self.model.add_cols(n * n_q)

        # Per-price dual objective vs theta or a fixed cap.
        r = np.arange(n)
        rows, cols, vals = [], [], []
        for i in range(n_m):
            rows.append(r)
            cols.append(alpha[r * n_m + i])
            vals.append(np.full(n, self.m_val[i]))
        for j in range(n_q):
            rows.append(r)
            cols.append(beta[r * n_q + j])
            vals.append(np.full(n, self.q_val[j]))
        if cap is None:
            if self.theta is None:
                raise NumericalFailureError("cap-free block needs the objective variable")
            rows.append(r)
            cols.append(np.full(n, self.theta))
            vals.append(np.full(n, -1.0))
            rhs = np.zeros(n)
        else:
            rhs = np.full(n, float(cap))
        self.model.add_rows(n, np.concatenate(rows), np.concatenate(cols),
                            np.concatenate(vals), "<=", rhs)

        # Pointwise rows, price-major:
        #   -W_v - sum_i alpha_i(p) v^i - sum_j beta_j(p) 1(v>=r_j)
        #       <= -lam * g_p * 1(v>=p).
        p_idx, v_idx = self.p_idx, self.v_idx
        nn = n * n
        rr = np.arange(nn)
        rows = [rr]
        cols = [self.w[v_idx]]
        vals = [-np.ones(nn)]
        for i in range(n_m):
            rows.append(rr)
            cols.append(alpha[p_idx * n_m + i])
            vals.append(-self.powers[i][v_idx])
        for j in range(n_q):
            rows.append(rr)
            cols.append(beta[p_idx * n_q + j])
            vals.append(-(v_idx >= self.q_idx[j]).astype(float))
        rhs = -lam * self.g[p_idx] * (v_idx >= p_idx)
        self.model.add_rows(nn, np.concatenate(rows), np.concatenate(cols),
                            np.concatenate(vals), "<=", rhs)
        return _Block(lam, alpha, beta)

    def add_ratio_objective(self) -> int:
        """Direct maximin-ratio block: maximize r subject to

            gamma(p) >= r * p                                     per price p
            W_v + sum_i alpha_i(p)(m_i - v^i)
                + sum_j beta_j(p)(q_j - 1(v>=r_j))
                - gamma(p) 1(v>=p) >= 0                           per (p, v).

        The model must have been created with sense="max".
        """
        n = self.n
        n_m, n_q = len(self.m_val), len(self.q_val)
        rcol = int(self.model.add_cols(1, lb=0.0, ub=1.0)[0])
        self.model.set_objective([rcol], [1.0])
        gamma = self.model.add_cols(n)
        alpha = self.model.add_cols(n * n_m)
        beta = self.model.add_cols(n * n_q)

        r = np.arange(n)
        self.model.add_rows(
            n,
            np.concatenate([r, r]),
            np.concatenate([gamma, np.full(n, rcol)]),
            np.concatenate([np.ones(n), -self.g]),
            ">=", np.zeros(n))

        p_idx, v_idx = self.p_idx, self.v_idx
        nn = n * n
        rr = np.arange(nn)
        rows = [rr]
        cols = [self.w[v_idx]]
        vals = [np.ones(nn)]
        for i in range(n_m):
            rows.append(rr)
            cols.append(alpha[p_idx * n_m + i])
            vals.append(self.m_val[i] - self.powers[i][v_idx])
        for j in range(n_q):
            rows.append(rr)
            cols.append(beta[p_idx * n_q + j])
            vals.append(self.q_val[j] - (v_idx >= self.q_idx[j]))
        served = v_idx >= p_idx
        rows.append(rr[served])
        cols.append(gamma[p_idx[served]])
        vals.append(-np.ones(int(served.sum())))
        self.model.add_rows(nn, np.concatenate(rows), np.concatenate(cols),
                            np.concatenate(vals), ">=", np.zeros(nn))
        return rcol

    def mechanism(self, sol: lp.LpSolution) -> Mechanism:
        return Mechanism.from_solver(self.uset.grid, sol.values[self.phi])

    def certificate(self, sol: lp.LpSolution, block: _Block,
                    theta: float) -> DualCertificate:
        n = self.n
        n_m, n_q = len(self.m_val), len(self.q_val)
        return DualCertificate(
            theta,
            sol.values[block.alpha].reshape(n, n_m) if n_m else np.zeros((n, 0)),
            sol.values[block.beta].reshape(n, n_q) if n_q else np.zeros((n, 0)))


def worst_lambda_regret(mech: Mechanism, uset: UncertaintySet,
                        lam: float) -> tuple[float, DualCertificate]:
    """R_lambda of a fixed mechanism, with optimal multipliers as certificate.

    This is the dual route; instance.worst_case_certificate answers the same
    question by direct maximization over distributions, and the two must
    agree to LP tolerance.
    """
    if not (0.0 <= lam <= 1.0):
        raise InputError(f"lambda must lie in [0,1], got {lam}")
    ensure_feasible(uset)
    stack = _StackedDualModel(uset, fixed_mech=mech)
    stack.add_theta()
    block = stack.add_block(lam)
    sol = lp.solve(stack.model)
    if sol.status != "optimal":
        raise NumericalFailureError(
            f"evaluation LP at lambda={lam} returned {sol.status} on a feasible set")
    return sol.objective, stack.certificate(sol, block, sol.objective)


def minimax_lambda_regret(uset: UncertaintySet, lam: float,
                          ) -> tuple[float, Mechanism]:
    """R*_lambda: the best guarantee any mechanism can give at this lambda."""
    if not (0.0 <= lam <= 1.0):
        raise InputError(f"lambda must lie in [0,1], got {lam}")
    ensure_feasible(uset)
    stack = _StackedDualModel(uset)
    stack.add_theta()
    stack.add_block(lam)
    sol = lp.solve(stack.model)
    if sol.status != "optimal":
        raise NumericalFailureError(
            f"minimax LP at lambda={lam} returned {sol.status} on a feasible set")
    return sol.objective, stack.mechanism(sol)


def maximin_revenue(uset: UncertaintySet) -> tuple[float, Mechanism]:
    """Largest revenue achievable against every member distribution."""
    theta, mech = minimax_lambda_regret(uset, 0.0)
    return -theta, mech


def minimax_regret(uset: UncertaintySet) -> tuple[float, Mechanism]:
    return minimax_lambda_regret(uset, 1.0)


def _bisect_sup(probe, eps: float, max_iter: int = MAX_BISECT_ITER):
    """Largest accepted lambda in [0,1], by halving, to within eps.

    probe(lam) returns a payload when lam is accepted and None otherwise;
    acceptance is assumed monotone (downward closed). lambda=1 is tried first
    and returned exactly when accepted. lambda=0 counts as accepted by
    convention and is only probed if nothing else succeeded. The probe points
    depend solely on the accept/reject pattern, so two searches whose
    acceptance sets agree return bit-identical suprema.
    """
    payload = probe(1.0)
    iters = 1
    if payload is not None:
        return 1.0, payload, iters, (1.0, 1.0)
    lo, hi = 0.0, 1.0
    best = None
    while hi - lo > eps:
        if iters >= max_iter:
            raise NumericalFailureError(
                f"lambda bisection exceeded {max_iter} probes (eps={eps})")
        mid = 0.5 * (lo + hi)
        res = probe(mid)
        iters += 1
        if res is None:
            hi = mid
        else:
            lo, best = mid, res
    if best is None:
        best = probe(0.0)
        iters += 1
        if best is None:
            raise NumericalFailureError(
                "lambda=0 probe rejected; the guarantee R_0 <= 0 should always hold")
    return lo, best, iters, (lo, hi)


def _ratio_direct(uset: UncertaintySet) -> tuple[float, Mechanism]:
    stack = _StackedDualModel(uset, sense="max")
    rcol = stack.add_ratio_objective()
    sol = lp.solve(stack.model)
    if sol.status != "optimal":
        raise NumericalFailureError(
            f"direct ratio LP returned {sol.status} on a feasible set")
    return float(sol.values[rcol]), stack.mechanism(sol)


def _ratio_search(uset: UncertaintySet, eps: float):
    ensure_feasible(uset)

    def probe(lam: float):
        stack = _StackedDualModel(uset)
        stack.add_block(lam, cap=lp.FEASIBILITY_TOL)
        sol = lp.solve_feasibility(stack.model)
        if sol.status != "optimal":
            return None
        return stack.mechanism(sol)

    lam, _, iters, bracket = _bisect_sup(probe, eps)
    # A probe payload certifies the bracket floor and nothing more; when the
    # optimal set is thin (a pinned-down uncertainty set, say, where only one
    # mechanism is exactly optimal) the eps it gives away is visible to any
    # scorer that re-evaluates the mechanism. One more solve pins the
    # mechanism to the optimum; the value keeps the bracket-floor semantics.
    _, mech = _ratio_direct(uset)
    return lam, mech, iters, bracket


def maximin_ratio_search(uset: UncertaintySet, eps: float = DEFAULT_EPS,
                         ) -> tuple[float, Mechanism]:
    """Largest lambda with R*_lambda <= 0, by bisection on feasibility LPs.

    Each probe asks for multipliers certifying R_lambda(Phi) below the LP
    feasibility tolerance. The returned value is the floor of the final
    bracket and never overstates the optimum; the returned mechanism is
    re-solved at the optimum instead of inheriting the bracket's slack.
    """
    if eps <= 0:
        raise InputError(f"eps must be positive, got {eps}")
    lam, mech, _, _ = _ratio_search(uset, eps)
    return lam, mech


def maximin_ratio_direct(uset: UncertaintySet) -> tuple[float, Mechanism]:
    """The same optimum as the search, in one LP with the ratio as a variable."""
    ensure_feasible(uset)
    return _ratio_direct(uset)


def worst_ratio(mech: Mechanism, uset: UncertaintySet,
                ) -> tuple[float, Distribution]:
    """Smallest revenue/OPT over the set, for a fixed mechanism.

    Parametric iteration on lam: Nature answers lam with its best
    distribution F; the achieved ratio at F becomes the next lam. The
    sequence decreases strictly through attained ratios and stops exactly
    when lam certifies itself, so the answer is as sharp as the per-probe
    LPs rather than bisection-limited.
    """
    lam = 1.0
    witness = None
    for _ in range(100):
        val, f = worst_case_certificate(mech, uset, lam)
        if val <= 0.0:
            return lam, (witness if witness is not None else f)
        opt = opt_revenue(f)
        if opt <= 1e-12:
            # val > 0 forces OPT(F) > 0 in exact arithmetic; only LP noise
            # lands here, and then lam is already certified up to that noise.
            return lam, (witness if witness is not None else f)
        nxt = revenue(mech, f) / opt
        if nxt >= lam - 1e-11:
            return nxt, f
        lam, witness = nxt, f
    raise NumericalFailureError("ratio iteration failed to settle in 100 rounds")


def summarize(uset: UncertaintySet, eps: float = DEFAULT_EPS) -> RobustSummary:
    """Solve all three criteria on one uncertainty set."""
    rev, mech_rev = maximin_revenue(uset)
    reg, mech_reg = minimax_regret(uset)
    rat, mech_rat, iters, _ = _ratio_search(uset, eps)
    return RobustSummary(
        theta_revenue=rev, theta_regret=reg, theta_ratio=rat,
        mech_revenue=mech_rev, mech_regret=mech_reg, mech_ratio=mech_rat,
        eps=eps, feasibility_tol=lp.FEASIBILITY_TOL,
        optimality_tol=lp.OPTIMALITY_TOL, ratio_iterations=iters)
