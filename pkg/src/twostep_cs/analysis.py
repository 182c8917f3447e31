"""Analytical quantities behind the support-recovery guarantees.

Contents:

* ``compute_W``: how many nonzeros of ``x`` fit in an l1 budget.
* Order-statistics ratios: the fraction of ``sum |X_i|`` carried by the
  largest ``M`` of ``N`` draws, in closed form for the Gaussian and by
  quadrature for a general symmetric law.
* The robustness constant ``C(eps1)``, the error bound ``zeta(eps0)`` and the
  support-overlap lower bounds derived from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize

from .exceptions import DomainError
from .numerics import RandomStream, check_vector, std_normal_quantile, std_normal_tail
from .signals import Distribution, abs_mean, partial_first_moment, quantile_psi
from .solver import k_support

__all__ = [
    "compute_W",
    "orderstat_ratio_gaussian",
    "orderstat_ratio_general",
    "empirical_orderstat_ratio",
    "robustness_C",
    "RobustnessConfig",
    "zeta",
    "zeta_at_equal_eps",
    "overlap_lower_bound",
    "lemma4_bound",
    "check_weak_robustness",
]

KAPPA_STAR = math.sqrt(3.0)


def _nonzeros(x):
    if hasattr(x, "nonzeros"):
        return np.abs(np.asarray(x.nonzeros, dtype=float))
    v = np.abs(check_vector(x, name="x"))
    return v[v != 0]


def compute_W(x, lam: float) -> int:
    """Largest number of nonzeros of ``x`` whose magnitudes sum to at most ``lam``.

    Taking the smallest magnitudes first is optimal, so this is the longest
    prefix of the ascending sort that fits in the budget.
    """
    if not lam >= 0:
        raise DomainError("lambda must be nonnegative")
    mags = np.sort(_nonzeros(x))
    csum = np.cumsum(mags)
    # small slack so that lam = ||x||_1 computed in another order still counts all
    return int(np.searchsorted(csum, lam * (1 + 1e-12) + 1e-300, side="right"))


def _check_ratio(ratio):
    ratio = float(ratio)
    if not 0.0 < ratio <= 1.0:
        raise DomainError(f"ratio must lie in (0, 1], got {ratio}")
    return ratio


def orderstat_ratio_gaussian(ratio: float) -> float:
    """Share of the total held by the top ``ratio`` fraction of |N(0,1)| draws.

    Equals ``exp(-Psi(ratio/2)^2 / 2)`` with ``Psi`` the Gaussian upper
    quantile.
    """
    ratio = _check_ratio(ratio)
    if ratio == 1.0:
        return 1.0
    a = std_normal_quantile(0.5 * ratio)
    return math.exp(-0.5 * a * a)


def orderstat_ratio_general(dist: Distribution, ratio: float) -> float:
    """Same share for a symmetric law ``f``, by quadrature.

    ``1 - 2 int_0^a x f(x) dx / E|X|`` with ``a = Psi_f(ratio/2)``. The
    Gaussian case goes through the same quadrature, so it serves as an
    independent check of :func:`orderstat_ratio_gaussian`.
    """
    ratio = _check_ratio(ratio)
    if ratio == 1.0:
        return 1.0
    a = quantile_psi(dist, 0.5 * ratio)
    return 1.0 - 2.0 * partial_first_moment(dist, a) / abs_mean(dist)


def empirical_orderstat_ratio(dist: Distribution, N: int, M: int, stream: RandomStream) -> float:
    """Sum of the ``M`` largest of ``N`` draws of ``|X|`` over their total."""
    if not 1 <= M <= N:
        raise ValueError(f"need 1 <= M <= N, got M={M}, N={N}")
    mags = np.abs(np.atleast_1d(dist.sample(stream, N)))
    if M == N:
        return 1.0
    top = np.partition(mags, N - M)[N - M:]
    return float(top.sum() / mags.sum())


# ---------------------------------------------------------------------------
# Robustness and the error bound zeta
# ---------------------------------------------------------------------------

def robustness_C(epsilon1: float) -> float:
    """``C(eps1) = 1/sqrt(1 - eps1)`` for ``0 < eps1 < 1``."""
    if not 0.0 < epsilon1 < 1.0:
        raise DomainError("epsilon1 must lie strictly inside (0, 1)")
    return 1.0 / math.sqrt(1.0 - epsilon1)


def _default_grid():
    return np.logspace(-6, math.log10(0.9), 200)


@dataclass(frozen=True)
class RobustnessConfig:
    """``kappa_star`` bounds the ratio ``||x_{K1}||_1 / ||x||_1`` slack term.

    The default sqrt(3) is the bound available at ``delta = 0.5555``.
    """

    kappa_star: float = KAPPA_STAR
    epsilon1_grid: tuple = field(default_factory=lambda: tuple(_default_grid()))

    def __post_init__(self):
        if not self.kappa_star > 0:
            raise ValueError("kappa_star must be positive")
        g = np.asarray(self.epsilon1_grid, dtype=float)
        if g.size == 0 or np.any(g <= 0) or np.any(g >= 1):
            raise ValueError("epsilon1 grid must be nonempty and inside (0, 1)")
        object.__setattr__(self, "epsilon1_grid", tuple(np.sort(g)))


def _tail_mass(dist, epsilon0, epsilon1, quadrature=False):
    """Share of ``||x||_1`` outside the top ``(1-eps1)/(1+eps0)`` fraction."""
    p = 0.5 * (1.0 - epsilon1) / (1.0 + epsilon0)
    if dist.kind == "gaussian" and not quadrature:
        a = std_normal_quantile(p)
        return -math.expm1(-0.5 * a * a)
    return 2.0 * partial_first_moment(dist, quantile_psi(dist, p)) / abs_mean(dist)


def _zeta_objective(dist, kappa, epsilon0, epsilon1, quadrature=False):
    C = robustness_C(epsilon1)
    return (2.0 * C * (1.0 + kappa) / (C - 1.0)
            * _tail_mass(dist, epsilon0, epsilon1, quadrature))


def zeta(epsilon0: float, cfg: RobustnessConfig | None = None,
         dist: Distribution | None = None, quadrature: bool = False) -> float:
    """Bound on ``||x - xhat||_1 / ||x||_1`` at oversparsity ``eps0``.

    Minimises the robustness factor times the tail mass over ``eps1``:
    first on the configured grid plus the point ``eps1 = eps0``, then by
    bounded scalar search between
    the neighbours of the best grid point. Returns ``inf`` when every grid
    value exceeds 1, i.e. the bound says nothing. ``quadrature=True``
    evaluates the Gaussian tail mass by the general integral instead of
    its closed form.
    """
    cfg = cfg or RobustnessConfig()
    dist = dist or Distribution("gaussian")
    if not epsilon0 > 0:
        raise DomainError("epsilon0 must be positive")
    return _zeta_cached(float(epsilon0), cfg.kappa_star, cfg.epsilon1_grid, dist,
                        bool(quadrature))


@lru_cache(maxsize=4096)
def _zeta_cached(epsilon0, kappa, grid, dist, quadrature):
    grid = np.asarray(grid)
    if epsilon0 < grid[-1]:
        # the small-eps0 optimum sits near eps1 = eps0, possibly below the grid
        grid = np.union1d(grid, [epsilon0])

    def obj(e):
        return _zeta_objective(dist, kappa, epsilon0, e, quadrature)

    vals = np.array([obj(e) for e in grid])
    i = int(np.argmin(vals))
    best = float(vals[i])
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(obj, bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-3 * lo})
        if res.success and res.fun < best:
            best = float(res.fun)
    if np.all(vals > 1.0):
        return math.inf
    return best


def zeta_at_equal_eps(epsilon0: float, cfg: RobustnessConfig | None = None,
                      dist: Distribution | None = None) -> float:
    """The bound evaluated at ``eps1 = eps0`` instead of the infimum."""
    cfg = cfg or RobustnessConfig()
    dist = dist or Distribution("gaussian")
    if not 0 < epsilon0 < 1:
        raise DomainError("epsilon0 must lie in (0, 1)")
    return _zeta_objective(dist, cfg.kappa_star, epsilon0, epsilon0)


def overlap_lower_bound(epsilon0: float, cfg: RobustnessConfig | None = None,
                        dist: Distribution | None = None) -> float:
    """Lower bound on ``|K ∩ L| / k`` after plain l1 at oversparsity ``eps0``.

    ``2 * tail(sqrt(-2 ln(1 - zeta)))`` where ``tail`` is the upper tail of
    ``dist``; 0 when ``zeta >= 1``. For non-Gaussian laws the same argument
    is composed with the law's own tail, which is how the general bound is
    stated rather than something derived here.
    """
    dist = dist or Distribution("gaussian")
    z = zeta(epsilon0, cfg, dist)
    if not z < 1.0:
        return 0.0
    arg = math.sqrt(-2.0 * math.log1p(-z))
    return float(min(1.0, max(0.0, 2.0 * dist.tail(arg))))


def lemma4_bound(alpha: float) -> float:
    """Upper bound on ``W(x, alpha ||x||_1) / k`` for Gaussian nonzeros."""
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie strictly inside (0, 1)")
    return 1.0 - 2.0 * std_normal_tail(math.sqrt(-2.0 * math.log1p(-alpha)))


def check_weak_robustness(A, x, xhat, epsilon1: float, mu_w: float | None = None):
    """Test the two weak-robustness inequalities for one ``(x, xhat)`` pair.

    ``K1`` is the ``k1``-support of ``x`` with ``k1 = floor((1-eps1) mu_W n)``
    and ``C = robustness_C(eps1)``. Returns ``(err_ok, norm_ok)`` for

        ||(x - xhat)_{K1}||_1        <= 2C/(C-1) ||x_{not K1}||_1
        ||x_{K1}||_1 - ||xhat_{K1}||_1 <= 2/(C-1)  ||x_{not K1}||_1

    ``mu_w`` defaults to the weak threshold at ``delta = m/n``.
    """
    A = np.asarray(A)
    m, n = A.shape
    xv = x.values if hasattr(x, "values") else check_vector(x, n, "x")
    xhat = check_vector(xhat, n, "xhat")
    if mu_w is None:
        from .thresholds import weak_threshold_mu
        mu_w = weak_threshold_mu(m / n)
    C = robustness_C(epsilon1)
    k1 = int(math.floor((1.0 - epsilon1) * mu_w * n))
    K1 = k_support(xv, k1)
    mask = np.zeros(n, dtype=bool)
    mask[K1] = True
    outside = np.abs(xv[~mask]).sum()
    lhs7 = np.abs(xv[mask] - xhat[mask]).sum()
    lhs8 = np.abs(xv[mask]).sum() - np.abs(xhat[mask]).sum()
    slack = 1e-12 * max(1.0, np.abs(xv).sum())
    return (bool(lhs7 <= 2 * C / (C - 1) * outside + slack),
            bool(lhs8 <= 2 / (C - 1) * outside + slack))
