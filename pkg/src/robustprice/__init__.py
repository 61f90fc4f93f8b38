"""Robustly optimal pricing under moment and quantile uncertainty.

A seller posts a (possibly randomized) price on a finite value grid; Nature
picks the buyer's value distribution from the set of all distributions
matching given moments and tail probabilities. The package computes the
mechanisms that are worst-case optimal for revenue, regret, and the
revenue/OPT ratio, evaluates mechanisms across criteria, and finds the single
mechanism with the best uniform guarantee over all three.
"""

from .errors import (
    CrossInfeasibleError,
    GridMismatchError,
    InconsistentInputsError,
    InfeasibleSetError,
    InputError,
    NumericalFailureError,
    RobustPriceError,
)
from .instance import (
    Distribution,
    Mechanism,
    MomentConstraint,
    QuantileConstraint,
    UncertaintySet,
    ValueGrid,
    check_feasible,
    ensure_feasible,
    make_family,
    make_grid,
    opt_revenue,
    ratio,
    regret,
    revenue,
    revenue_curve,
    worst_case_certificate,
)
from .robust import (
    CriterionSpec,
    DualCertificate,
    RobustSummary,
    maximin_ratio_direct,
    maximin_ratio_search,
    maximin_revenue,
    minimax_lambda_regret,
    minimax_regret,
    parse_criterion,
    summarize,
    worst_lambda_regret,
    worst_ratio,
)
from .cross import (
    CrossResult,
    OldCriterionConstraint,
    cross_performance,
    cross_ratio_direct,
    cross_ratio_search,
    cross_regret,
    relperf,
)
from .multi import (
    BestOfAllResult,
    TripleTarget,
    best_of_all,
    check_triple,
    ray_target,
    relperf_all,
)
from .bench import (
    CrossMatrix,
    InstanceReport,
    MechanismExport,
    ParamGrid,
    SweepRow,
    analyze_instance,
    cross_matrix,
    export_mechanisms,
    focal_minima,
    sweep,
    uniform_factor_bound,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
