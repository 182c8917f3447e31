"""scikit-learn style wrappers around the recovery routines.

The sensing matrix plays the role of ``X`` (rows are measurements,
columns are coordinates of the unknown) and the measurements play ``y``.
After ``fit`` the recovered signal is stored in ``coef_``, so
``predict(X)`` returns ``X @ coef_``, matching the sklearn linear-model
convention (compare ``OrthogonalMatchingPursuit``).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y, validate_data

from .exceptions import SolverError
from .recovery import recover_two_step
from .solver import BasisPursuitProblem, solve_weighted_l1

__all__ = ["BasisPursuit", "TwoStepReweightedL1"]


class _SparseRecoveryBase(RegressorMixin, BaseEstimator):

    def _validate(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        self.n_features_in_ = X.shape[1]
        return X, y

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        return X @ self.coef_

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        # exact recovery needs an underdetermined consistent system
        tags.regressor_tags.poor_score = True
        return tags


class BasisPursuit(_SparseRecoveryBase):
    """Minimum (weighted) l1-norm solution of ``X coef = y``.

    Parameters
    ----------
    weights : array of shape (n_features,), default=None
        Positive per-coordinate weights; ``None`` means all ones.
    max_iter : int, default=200
        Interior-point iteration cap.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    objective_ : float
        Weighted l1 norm of ``coef_``.
    n_iter_ : int
    status_ : str
    """

    def __init__(self, weights=None, max_iter=200):
        self.weights = weights
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = self._validate(X, y)
        w = None if self.weights is None else np.asarray(self.weights, dtype=float)
        res = solve_weighted_l1(BasisPursuitProblem(X, y, w), max_iter=self.max_iter)
        if res.status != "optimal":
            raise SolverError(f"basis pursuit ended with status {res.status!r}",
                              status=res.status)
        self.coef_ = res.solution
        self.objective_ = res.objective
        self.n_iter_ = res.iterations
        self.status_ = res.status
        return self


class TwoStepReweightedL1(_SparseRecoveryBase):
    """Plain l1 followed by l1 reweighted away from the estimated support.

    Parameters
    ----------
    n_nonzero_coefs : int
        Sparsity ``k``; the ``k`` largest entries of the first solution form
        the support estimate.
    omega : float, default=10.0
        Weight (> 1) applied outside the support estimate in the second solve.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        Second-stage solution.
    l1_coef_ : ndarray of shape (n_features,)
        First-stage (plain l1) solution.
    support_ : ndarray of int
        Sorted support estimate.
    """

    def __init__(self, n_nonzero_coefs=None, omega=10.0):
        self.n_nonzero_coefs = n_nonzero_coefs
        self.omega = omega

    def fit(self, X, y):
        X, y = self._validate(X, y)
        k = self.n_nonzero_coefs
        if k is None:
            k = max(1, X.shape[0] // 2)
        res = recover_two_step(X, y, int(k), float(self.omega))
        self.coef_ = res.final_solution
        self.l1_coef_ = res.l1_solution
        self.support_ = res.support_estimate
        return self
