"""Recovery thresholds of weighted l1 minimisation from polytope angle exponents.

The coordinates are split into two groups of relative sizes ``gamma1`` and
``gamma2``. Group ``i`` has a fraction ``f_i`` of nonzeros and carries weight
1 (group 1) or ``omega`` (group 2). For a face with ``tau_i`` extra
coordinates per group, the exponents

    psi_com  (combinatorial count of faces)
    psi_int  (internal angle)
    psi_ext  (external angle)

combine into ``psi_net = psi_com - psi_int - psi_ext``. Recovery succeeds
for almost every signal when ``psi_net < 0`` on every face of the
admissible size. The sectional threshold is the smallest measurement ratio
``delta`` with that property.

Each exponent has a scalar implementation (bracketed Brent root finds) and a
vectorised one (bisection over a whole lattice of ``(tau1, tau2)``). The
lattice route drives the threshold search; the scalar route is the
independent reference used to check it.
"""

from __future__ import annotations

import math
import threading
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special

from .numerics import Bracket, expand_bracket, find_root

__all__ = [
    "WeightedThresholdQuery",
    "ThresholdSearchConfig",
    "SectionalThreshold",
    "psi_com",
    "psi_ext",
    "psi_int",
    "psi_net",
    "psi_net_lattice",
    "delta_sectional",
    "lambda_c",
    "weak_threshold_mu",
    "certified_improvement",
]

LOG2 = math.log(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)

# After refinement, a maximum of psi_net above -_TOUCH_TOL counts as the
# exponent touching zero (it does so tangentially in the unweighted case)
# rather than being strictly negative.
_TOUCH_TOL = 1e-7


@dataclass(frozen=True)
class WeightedThresholdQuery:
    gamma1: float
    gamma2: float
    f1: float
    f2: float
    omega: float = 1.0

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "f1", "f2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if abs(self.gamma1 + self.gamma2 - 1.0) > 1e-9:
            raise ValueError("gamma1 + gamma2 must equal 1")
        if not self.omega >= 1.0:
            raise ValueError("omega must be at least 1")
        if self.f1 < self.f2:
            warnings.warn("f1 < f2: the lightly weighted group is the sparser one",
                          stacklevel=2)

    @property
    def base(self) -> float:
        """Fraction of coordinates that are nonzero, ``gamma1 f1 + gamma2 f2``."""
        return self.gamma1 * self.f1 + self.gamma2 * self.f2

    @property
    def tau_box(self):
        """Upper limits of ``tau1`` and ``tau2``."""
        return self.gamma1 * (1.0 - self.f1), self.gamma2 * (1.0 - self.f2)

    def as_row(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ThresholdSearchConfig:
    tau_grid: int = 200
    delta_tol: float = 1e-4
    refine_levels: int = 2

    def __post_init__(self):
        if self.tau_grid < 50:
            raise ValueError("tau_grid must be at least 50")
        if not self.delta_tol > 0:
            raise ValueError("delta_tol must be positive")
        if self.refine_levels < 0:
            raise ValueError("refine_levels must be nonnegative")


@dataclass(frozen=True)
class SectionalThreshold:
    """Result of :func:`delta_sectional`.

    ``found`` is False when the exponent stays nonnegative up to
    ``delta = 1``; ``value`` is then 1.0.
    """

    value: float
    found: bool
    max_exponent: float
    tau: tuple

    def __float__(self):
        return float(self.value)


# ---------------------------------------------------------------------------
# Elementary pieces (vectorised)
# ---------------------------------------------------------------------------

def _bit_entropy(p):
    p = np.asarray(p, dtype=float)
    inside = (p > 0) & (p < 1)
    q = np.where(inside, p, 0.5)
    return np.where(inside, -(q * np.log2(q) + (1 - q) * np.log2(1 - q)), 0.0)


def _scaled_entropy(size, t):
    """``size * H(t / size)`` with the limit 0 when ``size = 0``."""
    if size <= 0:
        return np.zeros_like(np.asarray(t, dtype=float))
    return size * _bit_entropy(np.asarray(t, dtype=float) / size)


def _g_over_G(x):
    """``erf'(x) / erf(x)``."""
    return _TWO_OVER_SQRT_PI * np.exp(-x * x) / special.erf(x)


def _mills(s):
    """``phi(s) / Phi(s)``, stable for very negative ``s``."""
    return np.exp(-0.5 * s * s - _LOG_SQRT_2PI - special.log_ndtr(s))


def _lambda1(s):
    """Log-moment generating function ``s^2/2 + log(2 Phi(s))``."""
    return 0.5 * s * s + LOG2 + special.log_ndtr(s)


def _ext_parts(t1, t2, q):
    c = (t1 + q.gamma1 * q.f1) + q.omega ** 2 * (t2 + q.gamma2 * q.f2)
    a1 = np.maximum(q.gamma1 * (1.0 - q.f1) - t1, 0.0)
    a2 = np.maximum(q.gamma2 * (1.0 - q.f2) - t2, 0.0)
    return c, a1, a2


def _ext_equation(x, c, a1, a2, w):
    return 2.0 * c - a1 * _g_over_G(x) / x - w * a2 * _g_over_G(w * x) / x


def _ext_value(x, c, a1, a2, w):
    return c * x * x - a1 * np.log(special.erf(x)) - a2 * np.log(special.erf(w * x))


def _int_parts(t1, t2, q):
    T = t1 + t2
    Ts = np.where(T > 0, T, 1.0)
    b = (t1 + q.omega ** 2 * t2) / Ts
    om = q.gamma1 * q.f1 + q.omega ** 2 * q.gamma2 * q.f2
    return T, Ts, b, om


def _int_equation(s, t1, t2, Ts, target, w):
    Q = (t1 * _mills(s) + w * t2 * _mills(w * s)) / Ts
    return -s / Q - target


def _int_value(s, t1, t2, Ts, om, w):
    y = -s * om / Ts
    lam_star = s * y - (t1 * _lambda1(s) + t2 * _lambda1(w * s)) / Ts
    return (lam_star + Ts / (2.0 * om) * y * y + LOG2) * Ts


def _check_box(t1, t2, q):
    b1, b2 = q.tau_box
    eps = 1e-12
    if not (-eps <= t1 <= b1 + eps and -eps <= t2 <= b2 + eps):
        raise ValueError(f"(tau1, tau2) = ({t1}, {t2}) lies outside [0, {b1}] x [0, {b2}]")
    return min(max(t1, 0.0), b1), min(max(t2, 0.0), b2)


# ---------------------------------------------------------------------------
# Scalar exponents
# ---------------------------------------------------------------------------

def psi_com(tau1: float, tau2: float, q: WeightedThresholdQuery) -> float:
    """Combinatorial exponent (natural log units; ``H`` is in bits)."""
    t1, t2 = _check_box(tau1, tau2, q)
    b1, b2 = q.tau_box
    bits = (t1 + t2 + _scaled_entropy(b1, t1) + _scaled_entropy(b2, t2)
            + q.gamma1 * _bit_entropy(q.f1) + q.gamma2 * _bit_entropy(q.f2))
    return float(bits) * LOG2


def psi_ext(tau1: float, tau2: float, q: WeightedThresholdQuery) -> float:
    """External angle exponent.

    ``c x^2 - a1 log erf(x) - a2 log erf(omega x)`` at the unique positive
    stationary point ``x0``.
    """
    t1, t2 = _check_box(tau1, tau2, q)
    c, a1, a2 = _ext_parts(t1, t2, q)
    if a1 <= 0 and a2 <= 0:
        return 0.0
    if c <= 0:
        return 0.0  # infimum approached as x -> inf
    w = q.omega

    def h(x):
        return float(_ext_equation(x, c, a1, a2, w))

    br = expand_bracket(h, Bracket(1e-3, 1.0, 1e-14), grow="both", floor=0.0)
    x0 = find_root(h, br)
    return float(_ext_value(x0, c, a1, a2, w))


def psi_int(tau1: float, tau2: float, q: WeightedThresholdQuery) -> float:
    """Internal angle exponent; 0 when ``tau1 + tau2 = 0``.

    The saddle point ``s*`` is sought on the negative axis, starting from
    the bracket ``[-40, -1e-8]``.
    """
    t1, t2 = _check_box(tau1, tau2, q)
    T, Ts, b, om = (float(v) for v in _int_parts(t1, t2, q))
    if T <= 0:
        return 0.0
    if om <= 0:
        raise ValueError("internal angle exponent needs gamma1 f1 + omega^2 gamma2 f2 > 0")
    target = Ts / (Ts * b + om)
    w = q.omega

    def h(s):
        return float(_int_equation(s, t1, t2, Ts, target, w))

    # near 0, -s/Q(s) ~ 1.25 |s|, so this end lies left of the root also for tiny faces
    hi = -min(1e-8, 0.1 * target)
    br = expand_bracket(h, Bracket(-40.0, hi, 1e-14 * min(1.0, -hi)), grow="lo")
    s = find_root(h, br)
    return float(_int_value(s, t1, t2, Ts, om, w))


def psi_net(tau1: float, tau2: float, q: WeightedThresholdQuery) -> float:
    return psi_com(tau1, tau2, q) - psi_int(tau1, tau2, q) - psi_ext(tau1, tau2, q)


# ---------------------------------------------------------------------------
# Lattice exponents
# ---------------------------------------------------------------------------

_BISECT_STEPS = 48


def _log_bisect(fn, lo, hi, shape, increasing=True):
    """Vectorised bisection for ``fn(exp(u)) = 0`` on ``u in [lo, hi]``."""
    lo = np.full(shape, float(lo))
    hi = np.full(shape, float(hi))
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        below = fn(np.exp(mid)) < 0
        if not increasing:
            below = ~below
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return np.exp(0.5 * (lo + hi))


def _psi_ext_lattice(t1, t2, q):
    c, a1, a2 = _ext_parts(t1, t2, q)
    w = q.omega
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        x0 = _log_bisect(lambda x: _ext_equation(x, c, a1, a2, w), -30.0, 6.0, t1.shape)
        val = _ext_value(x0, c, a1, a2, w)
    return np.where(((a1 <= 0) & (a2 <= 0)) | (c <= 0), 0.0, val)


def _psi_int_lattice(t1, t2, q):
    T, Ts, b, om = _int_parts(t1, t2, q)
    if om <= 0:
        raise ValueError("internal angle exponent needs gamma1 f1 + omega^2 gamma2 f2 > 0")
    target = Ts / (Ts * b + om)
    w = q.omega
    # the equation decreases in |s|... in terms of r = -s it increases from -target
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = _log_bisect(lambda r: _int_equation(-r, t1, t2, Ts, target, w),
                        math.log(1e-16), math.log(1e4), t1.shape)
        val = _int_value(-r, t1, t2, Ts, om, w)
    return np.where(T > 0, val, 0.0)


def psi_net_lattice(t1, t2, q: WeightedThresholdQuery) -> np.ndarray:
    """``psi_net`` on arrays of ``tau1`` and ``tau2`` (broadcast together)."""
    t1, t2 = np.broadcast_arrays(np.asarray(t1, dtype=float), np.asarray(t2, dtype=float))
    t1, t2 = t1.copy(), t2.copy()
    b1, b2 = q.tau_box
    com = (t1 + t2 + _scaled_entropy(b1, t1) + _scaled_entropy(b2, t2)
           + q.gamma1 * _bit_entropy(q.f1) + q.gamma2 * _bit_entropy(q.f2)) * LOG2
    return com - _psi_int_lattice(t1, t2, q) - _psi_ext_lattice(t1, t2, q)


# ---------------------------------------------------------------------------
# Sectional threshold
# ---------------------------------------------------------------------------

def _axis(lo, hi, n):
    return np.linspace(lo, hi, n) if hi > lo else np.array([lo])


def _scan(q, r1, r2, n):
    a1 = _axis(*r1, n)
    a2 = _axis(*r2, n)
    T1, T2 = np.meshgrid(a1, a2, indexing="ij")
    return T1, T2, psi_net_lattice(T1, T2, q)


def _critical_point(T1, T2, v):
    """Candidate face fixing the threshold on one lattice, and the lattice maximum.

    Where the exponent reaches 0 the candidate is the largest face size
    ``tau1 + tau2`` with a nonnegative exponent; otherwise it is the
    maximiser, which is where the exponent comes closest to 0.
    """
    S = T1 + T2
    vmax = float(np.max(v))
    if vmax >= 0:
        idx = np.flatnonzero((v >= 0).ravel())
        j = idx[np.argmax(S.ravel()[idx])]
    else:
        j = int(np.argmax(v))
    i = np.unravel_index(j, v.shape)
    return (float(T1[i]), float(T2[i])), vmax


def delta_sectional(q: WeightedThresholdQuery, cfg: ThresholdSearchConfig | None = None
                    ) -> SectionalThreshold:
    """Smallest ``delta`` for which ``psi_net < 0`` on every face of size above ``delta - base``.

    ``delta`` enters only through the admissible range
    ``tau1 + tau2 > delta - base``, so the search is over the faces
    themselves: the exponent is scanned on a ``tau_grid`` x ``tau_grid``
    lattice of the tau box, the critical face is located, and the lattice
    is refined ``refine_levels`` times around it (each pass zooms to a few
    cells around the current point, at least until the cell width drops
    below ``delta_tol``). The critical face is the largest one with a
    nonnegative exponent. When the exponent only touches zero, as happens
    for the unweighted problem, that is the point of contact, taken as the
    maximiser. The threshold is ``base`` plus the size of that face, or
    just ``base`` when the exponent is strictly negative everywhere.
    """
    cfg = cfg or ThresholdSearchConfig()
    return _delta_cached(q, cfg)


_cache_lock = threading.Lock()
_delta_cache: dict = {}


def _delta_cached(q, cfg):
    key = (q, cfg)
    with _cache_lock:
        hit = _delta_cache.get(key)
    if hit is not None:
        return hit
    res = _delta_search(q, cfg)
    with _cache_lock:
        _delta_cache.setdefault(key, res)
    return res


def _delta_search(q, cfg):
    b1, b2 = q.tau_box
    n = cfg.tau_grid
    if b1 <= 0 and b2 <= 0:
        return SectionalThreshold(1.0 if q.base >= 1 - 1e-12 else q.base, True, 0.0, (0.0, 0.0))
    T1, T2, v = _scan(q, (0.0, b1), (0.0, b2), n)
    point, vmax = _critical_point(T1, T2, v)
    h1, h2 = b1 / (n - 1), b2 / (n - 1)
    level = 0
    while level < cfg.refine_levels or max(h1, h2) > cfg.delta_tol:
        if level >= cfg.refine_levels + 8:
            break
        r1 = (max(0.0, point[0] - 2 * h1), min(b1, point[0] + 2 * h1))
        r2 = (max(0.0, point[1] - 2 * h2), min(b2, point[1] + 2 * h2))
        T1, T2, v = _scan(q, r1, r2, 41)
        cand, vloc = _critical_point(T1, T2, v)
        if vloc >= 0:
            if vmax < 0 or cand[0] + cand[1] >= point[0] + point[1]:
                point = cand
        elif vmax < 0 and vloc >= vmax:
            point = cand
        vmax = max(vmax, vloc)
        h1, h2 = (r1[1] - r1[0]) / 40, (r2[1] - r2[0]) / 40
        level += 1
    if vmax < -_TOUCH_TOL:
        # strictly negative everywhere: every face size is admissible
        return SectionalThreshold(q.base, True, vmax, (0.0, 0.0))
    value = q.base + point[0] + point[1]
    if value >= 1.0 - 1e-12:
        return SectionalThreshold(1.0, q.base >= 1.0 - 1e-12, vmax, point)
    return SectionalThreshold(float(value), True, vmax, point)


# ---------------------------------------------------------------------------
# Derived thresholds
# ---------------------------------------------------------------------------

def lambda_c(k_frac: float, omega: float, f1: float = 1.0,
             cfg: ThresholdSearchConfig | None = None, n_grid: int = 50,
             stop_above: float | None = None) -> float:
    """Worst sectional threshold over overlap fractions at least ``f1``.

    With ``gamma1 = k_frac`` the budget ``f1' gamma1 + f2' gamma2 = k_frac``
    fixes ``f2' = (1 - f1') gamma1 / gamma2``; ``f1'`` runs over ``n_grid``
    points of ``[f1, 1]`` starting at ``f1``. With ``stop_above`` set the
    scan returns as soon as a threshold reaches that value.
    """
    if not 0.0 < k_frac < 1.0:
        raise ValueError("k_frac must lie in (0, 1)")
    if not 0.0 <= f1 <= 1.0:
        raise ValueError("f1 must lie in [0, 1]")
    g1, g2 = k_frac, 1.0 - k_frac
    lo = max(f1, 1.0 - g2 / g1) if g1 > g2 else f1  # keep f2' <= 1
    grid = np.array([1.0]) if lo >= 1.0 else np.linspace(lo, 1.0, n_grid)
    best = -math.inf
    failures = 0
    for f1p in grid:
        f2p = max(0.0, (1.0 - f1p) * g1 / g2)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                q = WeightedThresholdQuery(g1, g2, float(f1p), float(f2p), omega)
            val = delta_sectional(q, cfg).value
        except (ValueError, ArithmeticError) as exc:
            failures += 1
            warnings.warn(f"threshold at f1'={f1p:.4f} failed: {exc}", stacklevel=2)
            continue
        best = max(best, val)
        if stop_above is not None and best >= stop_above:
            break
    if best == -math.inf:
        raise RuntimeError("no sectional threshold could be computed on the f1 grid")
    return float(best)


_mu_cache: dict = {}

MU_TOL = 1e-4


def weak_threshold_mu(delta: float, cfg: ThresholdSearchConfig | None = None) -> float:
    """Weak threshold of plain l1: the largest ``mu`` with sectional threshold <= ``delta``.

    Bisection on ``mu`` to ``1e-4`` (well inside the 1e-3 target accuracy).
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    cfg = cfg or ThresholdSearchConfig()
    key = (float(delta), cfg)
    with _cache_lock:
        if key in _mu_cache:
            return _mu_cache[key]

    def dc(mu):
        return delta_sectional(WeightedThresholdQuery(mu, 1.0 - mu, 1.0, 0.0, 1.0), cfg).value

    lo, hi = 0.0, 1.0
    while hi - lo > MU_TOL:
        mid = 0.5 * (lo + hi)
        if dc(mid) <= delta:
            lo = mid
        else:
            hi = mid
    with _cache_lock:
        _mu_cache[key] = lo
    return lo


def certified_improvement(delta: float, dist=None, omega: float = 10.0, cfg=None,
                          search_cfg: ThresholdSearchConfig | None = None,
                          eps_range=(1e-8, 1e-1), rel_tol: float = 0.05) -> float:
    """Largest oversparsity ``eps0`` for which two-step recovery is certified.

    For sparsity ``k/n = (1 + eps0) mu_W(delta)`` the overlap bound gives
    ``f1 >= overlap`` for the support estimate; the certificate holds when
    ``lambda_c(k/n, omega, f1=overlap) < delta``. A larger ``eps0`` both
    raises ``k/n`` and lowers the overlap bound, so the certified set is an
    interval starting at 0; its end is located by bisection in log space
    over ``eps_range`` until the bracket ratio is below ``1 + rel_tol``.
    Returns 0 when even the lower end of the range fails.
    """
    from .analysis import overlap_lower_bound
    from .signals import Distribution

    if omega <= 1.0:
        return 0.0
    dist = dist or Distribution("gaussian")
    mu = weak_threshold_mu(delta, search_cfg)

    def certifies(eps):
        k_frac = (1.0 + eps) * mu
        if k_frac >= 1.0:
            return False
        ov = overlap_lower_bound(eps, cfg, dist)
        if ov <= 0.0:
            return False
        return lambda_c(k_frac, omega, f1=ov, cfg=search_cfg, stop_above=delta) < delta

    lo, hi = (float(e) for e in eps_range)
    if not certifies(lo):
        return 0.0
    if certifies(hi):
        return hi
    lo, hi = math.log(lo), math.log(hi)
    while hi - lo > math.log1p(rel_tol):
        mid = 0.5 * (lo + hi)
        if certifies(math.exp(mid)):
            lo = mid
        else:
            hi = mid
    return float(math.exp(lo))
