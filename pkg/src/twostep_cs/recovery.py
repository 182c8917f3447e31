"""Two-step reweighted l1 recovery and the success criteria used by experiments.

Stage 1 solves plain basis pursuit. The ``k`` largest entries of its
solution form the support estimate ``L``; stage 2 re-solves with weight 1
on ``L`` and ``omega > 1`` off it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import SolverError
from .numerics import check_matrix, check_vector
from .solver import BasisPursuitProblem, SolveResult, k_support, solve_weighted_l1

__all__ = [
    "TwoStepResult",
    "recover_two_step",
    "two_step_weights",
    "recovery_success",
    "support_overlap_fraction",
    "SUCCESS_TOL",
]

SUCCESS_TOL = 1e-4


@dataclass
class TwoStepResult:
    l1_solution: np.ndarray
    support_estimate: np.ndarray
    final_solution: np.ndarray
    omega: float
    l1_status: str
    weighted_status: str
    l1_result: SolveResult | None = None
    weighted_result: SolveResult | None = None

    @property
    def k(self) -> int:
        return self.support_estimate.shape[0]


def two_step_weights(n: int, support, omega: float) -> np.ndarray:
    """Weight vector with 1 on ``support`` and ``omega`` elsewhere."""
    w = np.full(n, float(omega))
    w[np.asarray(support, dtype=int)] = 1.0
    return w


def _checked_solve(problem, stage, solve):
    res = solve(problem)
    if res.status != "optimal":
        raise SolverError(f"{stage} solve ended with status {res.status!r}",
                          status=res.status, stage=stage)
    return res


def recover_two_step(A, y, k: int, omega: float, solve=solve_weighted_l1) -> TwoStepResult:
    """Run both stages on ``(A, y)``.

    ``solve`` maps a :class:`BasisPursuitProblem` to a :class:`SolveResult`;
    passing :func:`brute_force_weighted_l1` replays the pipeline with the
    exact oracle. A non-optimal stage raises :class:`SolverError` whose
    ``stage`` is ``"l1"`` or ``"weighted"``.
    """
    A = check_matrix(A)
    m, n = A.shape
    y = check_vector(y, m, "y")
    if not omega > 1:
        raise ValueError(f"omega must exceed 1, got {omega}")
    if not 0 <= k < n:
        raise ValueError(f"need 0 <= k < n, got k={k}, n={n}")

    first = _checked_solve(BasisPursuitProblem(A, y), "l1", solve)
    L = k_support(first.solution, k)
    second = _checked_solve(BasisPursuitProblem(A, y, two_step_weights(n, L, omega)),
                            "weighted", solve)
    return TwoStepResult(first.solution, L, second.solution, float(omega),
                         first.status, second.status, first, second)


def recovery_success(estimate, truth, tol: float = SUCCESS_TOL) -> bool:
    """True iff the relative l2 error of ``estimate`` is at most ``tol``."""
    truth = check_vector(truth, name="truth")
    estimate = check_vector(estimate, truth.shape[0], "estimate")
    nt = np.linalg.norm(truth)
    if nt == 0:
        raise ValueError("truth must be nonzero")
    return bool(np.linalg.norm(estimate - truth) / nt <= tol)


def support_overlap_fraction(truth, estimate) -> float:
    """``|K ∩ supp_k(estimate)| / k`` where ``K`` is the support of ``truth``.

    ``truth`` is a :class:`SparseSignal` or a plain vector (its nonzeros
    define ``K``).
    """
    if hasattr(truth, "support"):
        K, n = np.asarray(truth.support), truth.n
    else:
        t = check_vector(truth, name="truth")
        K, n = np.flatnonzero(t), t.shape[0]
    estimate = check_vector(estimate, n, "estimate")
    k = K.shape[0]
    if k == 0:
        raise ValueError("overlap is undefined for k = 0")
    return np.intersect1d(K, k_support(estimate, k)).size / k
