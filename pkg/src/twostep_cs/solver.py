"""Weighted basis pursuit: ``min sum_i w_i |z_i|  s.t.  A z = y``.

The problem is split as ``z = u - v`` with ``u, v >= 0`` and solved as the
standard-form LP

    min  [w; w]^T [u; v]   s.t.  [A, -A] [u; v] = y,   u, v >= 0

by a Mehrotra predictor-corrector interior-point method. Each iteration
factors the ``m x m`` normal matrix ``A diag(d_u + d_v) A^T`` by Cholesky.

:func:`brute_force_weighted_l1` enumerates basic feasible solutions of the
same LP and serves as an exact oracle on tiny instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .exceptions import SizeError
from .numerics import check_matrix, check_vector

__all__ = [
    "BasisPursuitProblem",
    "SolveResult",
    "solve_weighted_l1",
    "brute_force_weighted_l1",
    "k_support",
    "weighted_l1_norm",
]

OPTIMAL = "optimal"
MAX_ITERATIONS = "max_iterations"
INFEASIBLE = "infeasible"

PRIMAL_TOL = 1e-8
GAP_TOL = 1e-8
MAX_ITER = 200
_INNER_FACTOR = 1e-2

# bounds for the exhaustive oracle
BRUTE_MAX_N = 10
BRUTE_MAX_M = 8


@dataclass
class BasisPursuitProblem:
    """Data of one weighted basis pursuit instance.

    ``weights`` defaults to all ones (plain basis pursuit).
    """

    A: np.ndarray
    y: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.A = check_matrix(self.A)
        m, n = self.A.shape
        self.y = check_vector(self.y, m, "y")
        if self.weights is None:
            self.weights = np.ones(n)
        else:
            self.weights = check_vector(self.weights, n, "weights")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be strictly positive")
        zero_cols = np.flatnonzero(~np.any(self.A != 0, axis=0))
        if zero_cols.size:
            raise ValueError(f"A has all-zero columns: {zero_cols.tolist()}")

    @property
    def shape(self):
        return self.A.shape


@dataclass
class SolveResult:
    solution: np.ndarray
    objective: float
    primal_residual: float
    duality_gap: float
    iterations: int
    status: str
    info: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def weighted_l1_norm(z, weights=None) -> float:
    z = np.asarray(z, dtype=float)
    if weights is None:
        return float(np.abs(z).sum())
    return float(np.dot(weights, np.abs(z)))


def _relative_residual(A, z, y):
    return float(np.linalg.norm(A @ z - y) / max(1.0, np.linalg.norm(y)))


def _row_basis(A, tol=1e-10):
    """Indices of a maximal set of linearly independent rows of ``A``."""
    _, R, piv = sla.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0:
        return np.array([], dtype=int)
    rank = int(np.sum(diag > tol * diag[0]))
    return np.sort(piv[:rank])


def _feasibility_check(A, y):
    """Reduce ``A z = y`` to independent rows; report whether it is consistent."""
    z_ls, *_ = np.linalg.lstsq(A, y, rcond=None)
    feasible = _relative_residual(A, z_ls, y) <= PRIMAL_TOL
    rows = _row_basis(A)
    return feasible, rows


def _cholesky(M):
    try:
        return sla.cho_factor(M, lower=False, check_finite=False)
    except np.linalg.LinAlgError:
        reg = 1e-14 * max(1.0, np.trace(M) / M.shape[0])
        for _ in range(12):
            try:
                return sla.cho_factor(M + reg * np.eye(M.shape[0]), lower=False,
                                      check_finite=False)
            except np.linalg.LinAlgError:
                reg *= 100.0
        raise


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def _polish(A, y, z, w, dual_obj, gap_tol):
    """Snap a nearly optimal iterate to the vertex on its ``m`` largest entries.

    Late interior-point steps can lose primal accuracy on an ill-conditioned
    normal matrix. Solving the square system on the dominant columns gives
    an exactly feasible point; it is accepted only if weak duality against
    the (feasible) dual iterate certifies it to ``gap_tol``.
    """
    m = A.shape[0]
    S = np.sort(np.argsort(-np.abs(z), kind="stable")[:m])
    try:
        zS = np.linalg.solve(A[:, S], y)
    except np.linalg.LinAlgError:
        return None
    zp = np.zeros_like(z)
    zp[S] = zS
    pobj = weighted_l1_norm(zp, w)
    gap = abs(pobj - dual_obj) / (1.0 + abs(pobj))
    if not (np.all(np.isfinite(zp)) and gap <= gap_tol):
        return None
    return zp, gap


def solve_weighted_l1(problem: BasisPursuitProblem, max_iter: int = MAX_ITER,
                      tol: float = PRIMAL_TOL, gap_tol: float = GAP_TOL) -> SolveResult:
    """Minimise ``sum_i w_i |z_i|`` subject to ``A z = y``.

    Returns a :class:`SolveResult` whose ``status`` is ``"optimal"``,
    ``"max_iterations"`` or ``"infeasible"`` (``y`` outside the range of
    ``A``). Degenerate problems with several minimisers converge to a point
    of the optimal face, not necessarily a vertex.
    """
    A_full, y_full, w = problem.A, problem.y, problem.weights
    m_full, n = A_full.shape

    feasible, rows = _feasibility_check(A_full, y_full)
    if not feasible:
        z_ls, *_ = np.linalg.lstsq(A_full, y_full, rcond=None)
        return SolveResult(z_ls, weighted_l1_norm(z_ls, w), _relative_residual(A_full, z_ls, y_full),
                           np.inf, 0, INFEASIBLE)
    if np.linalg.norm(y_full) == 0.0:
        z = np.zeros(n)
        return SolveResult(z, 0.0, 0.0, 0.0, 0, OPTIMAL)

    A = A_full[rows] if rows.size < m_full else A_full
    y = y_full[rows] if rows.size < m_full else y_full
    c = np.concatenate([w, w])

    def Abar(xv):  # [A, -A] @ [u; v]
        return A @ (xv[:n] - xv[n:])

    def AbarT(lam):
        t = A.T @ lam
        return np.concatenate([t, -t])

    # Mehrotra starting point. With c = [w; w] the least-squares dual is 0.
    fac = _cholesky(2.0 * (A @ A.T))
    lam = np.zeros(A.shape[0])
    x = AbarT(sla.cho_solve(fac, y))
    s = c.copy()
    dx = max(-1.5 * x.min(), 0.0)
    ds = max(-1.5 * s.min(), 0.0)
    x = x + dx
    s = s + ds
    xs = float(x @ s)
    x = x + 0.5 * xs / s.sum()
    s = s + 0.5 * xs / x.sum()

    N = 2 * n
    ynorm = max(1.0, np.linalg.norm(y))
    cnorm = max(1.0, np.linalg.norm(c))

    def measures(x, lam, s):
        pres = np.linalg.norm(y - Abar(x)) / ynorm
        dres = np.linalg.norm(c - AbarT(lam) - s) / cnorm
        pobj = float(c @ x)
        gap = abs(pobj - float(y @ lam)) / (1.0 + abs(pobj))
        return pres, dres, gap

    status = MAX_ITERATIONS
    best, best_merit = (x, lam, s), math.inf
    stalled = since_best = 0
    it = 0
    for it in range(max_iter + 1):
        pres, dres, gap = measures(x, lam, s)
        merit = max(pres / tol, dres / tol, gap / gap_tol)
        if merit < best_merit:
            best, best_merit, since_best = (x, lam, s), merit, 0
        else:
            since_best += 1
        # aim well below the reporting tolerance so that the iterate, not
        # just the objective, is accurate; the best iterate is kept in case
        # the ill-conditioned final steps stall
        if (merit <= _INNER_FACTOR or it == max_iter or stalled >= 5
                or (since_best >= 10 and best_merit <= 100.0)):
            break
        rp = y - Abar(x)
        rd = c - AbarT(lam) - s
        mu = float(x @ s) / N

        d = x / s
        dsum = d[:n] + d[n:]
        # near a degenerate optimum the normal matrix becomes singular to
        # working precision; _cholesky then regularises it slightly
        fac = _cholesky((A * dsum) @ A.T)

        def newton(rc):
            # rc is the complementarity right-hand side: S dx + X ds = rc
            rhs = rp + Abar(d * rd - rc / s)
            dlam = sla.cho_solve(fac, rhs)
            dsv = rd - AbarT(dlam)
            dxv = (rc - x * dsv) / s
            return dxv, dlam, dsv

        # predictor
        dx_a, dl_a, ds_a = newton(-x * s)
        ap = _max_step(x, dx_a)
        ad = _max_step(s, ds_a)
        mu_aff = float((x + ap * dx_a) @ (s + ad * ds_a)) / N
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

        # corrector
        dx_c, dl_c, ds_c = newton(-x * s - dx_a * ds_a + sigma * mu)
        eta = min(max(0.9, 1.0 - mu), 0.99)
        ap = min(1.0, eta * _max_step(x, dx_c))
        ad = min(1.0, eta * _max_step(s, ds_c))
        stalled = stalled + 1 if max(ap, ad) < 1e-8 else 0
        x = x + ap * dx_c
        lam = lam + ad * dl_c
        s = s + ad * ds_c
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(s))):
            break

    x, lam, s = best
    pres, dres, gap = measures(x, lam, s)
    z = x[:n] - x[n:]
    res = _relative_residual(A_full, z, y_full)
    if res <= tol and dres <= tol and gap <= gap_tol:
        status = OPTIMAL
    elif dres <= tol and np.isfinite(best_merit):
        polished = _polish(A, y, z, w, float(y @ lam), gap_tol)
        if polished is not None:
            z, gap = polished
            res = _relative_residual(A_full, z, y_full)
            if res <= tol:
                status = OPTIMAL
    return SolveResult(z, weighted_l1_norm(z, w), res, gap, it, status,
                       info={"dual": lam, "dual_residual": dres,
                             "primal_objective": float(c @ x),
                             "dual_objective": float(y @ lam)})


def brute_force_weighted_l1(problem: BasisPursuitProblem, feas_tol: float = 1e-9) -> SolveResult:
    """Exact weighted-l1 minimum by enumerating every basis of ``[A, -A]``.

    Only for ``n <= 10`` and ``m <= 8``. Redundant rows of ``A`` are dropped
    first so that bases have full size. Among minimal vertices the first in
    lexicographic column order wins.
    """
    A, y, w = problem.A, problem.y, problem.weights
    m, n = A.shape
    if n > BRUTE_MAX_N or m > BRUTE_MAX_M:
        raise SizeError(f"brute force limited to n <= {BRUTE_MAX_N}, m <= {BRUTE_MAX_M}; got {m}x{n}")
    feasible, rows = _feasibility_check(A, y)
    if not feasible:
        return SolveResult(np.full(n, np.nan), np.inf, np.inf, np.inf, 0, INFEASIBLE)
    Ar, yr = A[rows], y[rows]
    r = Ar.shape[0]
    if r == 0:  # A z = 0 with y = 0
        return SolveResult(np.zeros(n), 0.0, 0.0, 0.0, 0, OPTIMAL)

    split = np.hstack([Ar, -Ar])
    cost = np.concatenate([w, w])
    combos = np.array([c for c in itertools.combinations(range(2 * n), r)
                       if len({j % n for j in c}) == r])
    B = split[:, combos].transpose(1, 0, 2)  # (ncombos, r, r)
    dets = np.linalg.det(B)
    scale = np.prod(np.linalg.norm(B, axis=1), axis=1)
    good = np.abs(dets) > 1e-12 * np.maximum(scale, 1e-300)
    combos, B = combos[good], B[good]
    if combos.size == 0:
        return SolveResult(np.full(n, np.nan), np.inf, np.inf, np.inf, 0, INFEASIBLE)
    xb = np.linalg.solve(B, np.broadcast_to(yr, (B.shape[0], r))[..., None])[..., 0]
    bfs = np.all(xb >= -feas_tol, axis=1)
    if not np.any(bfs):
        return SolveResult(np.full(n, np.nan), np.inf, np.inf, np.inf, int(combos.shape[0]),
                           INFEASIBLE)
    combos, xb = combos[bfs], np.maximum(xb[bfs], 0.0)
    objs = np.sum(cost[combos] * xb, axis=1)
    best = objs.min()
    idx = int(np.flatnonzero(objs <= best + 1e-12 * max(1.0, abs(best)))[0])
    full = np.zeros(2 * n)
    full[combos[idx]] = xb[idx]
    z = full[:n] - full[n:]
    return SolveResult(z, weighted_l1_norm(z, w), _relative_residual(A, z, y), 0.0,
                       int(good.sum()), OPTIMAL)


def k_support(x, k: int) -> np.ndarray:
    """Indices of the ``k`` largest-magnitude entries of ``x``, sorted.

    Ties in magnitude go to the lower index.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.shape[0]
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    # stable sort on -|x| keeps lower indices first among equal magnitudes
    order = np.argsort(-np.abs(x), kind="stable")
    return np.sort(order[:k])
