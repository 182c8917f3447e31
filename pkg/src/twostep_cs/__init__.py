"""Sparse recovery by plain l1 followed by l1 reweighted off the estimated support.

Subpackages by layer:

* ``numerics``, ``signals``: random streams, special functions, laws of the
  nonzero entries and random sparse vectors.
* ``solver``, ``recovery``, ``estimators``: weighted basis pursuit, the
  two-step procedure and sklearn-style wrappers.
* ``analysis``, ``thresholds``: support-overlap bounds and recovery
  thresholds from polytope angle exponents.
* ``experiments``, ``cli``: Monte Carlo sweeps and the command line.
"""

__version__ = "0.1.0"

from .analysis import (RobustnessConfig, check_weak_robustness, compute_W,  # noqa: E402
                       empirical_orderstat_ratio, lemma4_bound, orderstat_ratio_gaussian,
                       orderstat_ratio_general, overlap_lower_bound, robustness_C, zeta)
from .estimators import BasisPursuit, TwoStepReweightedL1  # noqa: E402
from .exceptions import (BracketError, DomainError, QuadratureError, SizeError,  # noqa: E402
                         SolverError)
from .numerics import RandomStream  # noqa: E402
from .recovery import (TwoStepResult, recover_two_step, recovery_success,  # noqa: E402
                       support_overlap_fraction)
from .signals import Distribution, SparseSignal, generate_sparse, get_distribution  # noqa: E402
from .solver import (BasisPursuitProblem, SolveResult, brute_force_weighted_l1,  # noqa: E402
                     k_support, solve_weighted_l1)
from .thresholds import (ThresholdSearchConfig, WeightedThresholdQuery,  # noqa: E402
                         certified_improvement, delta_sectional, lambda_c, weak_threshold_mu)

__all__ = [
    "__version__",
    "BasisPursuit",
    "TwoStepReweightedL1",
    "BasisPursuitProblem",
    "SolveResult",
    "solve_weighted_l1",
    "brute_force_weighted_l1",
    "k_support",
    "TwoStepResult",
    "recover_two_step",
    "recovery_success",
    "support_overlap_fraction",
    "Distribution",
    "SparseSignal",
    "generate_sparse",
    "get_distribution",
    "RandomStream",
    "RobustnessConfig",
    "compute_W",
    "orderstat_ratio_gaussian",
    "orderstat_ratio_general",
    "empirical_orderstat_ratio",
    "robustness_C",
    "zeta",
    "overlap_lower_bound",
    "lemma4_bound",
    "check_weak_robustness",
    "WeightedThresholdQuery",
    "ThresholdSearchConfig",
    "delta_sectional",
    "lambda_c",
    "weak_threshold_mu",
    "certified_improvement",
    "DomainError",
    "BracketError",
    "QuadratureError",
    "SizeError",
    "SolverError",
]
