"""Symmetric nonzero-coefficient laws and random k-sparse signals."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from .exceptions import DomainError
from .numerics import (Bracket, RandomStream, adaptive_quadrature, expand_bracket,
                       find_root, std_normal_pdf, std_normal_quantile,
                       std_normal_tail)

__all__ = [
    "Distribution",
    "SparseSignal",
    "DISTRIBUTION_NAMES",
    "get_distribution",
    "pdf",
    "tail_q",
    "quantile_psi",
    "abs_mean",
    "partial_first_moment",
    "sample",
    "generate_sparse",
]

_KINDS = ("gaussian", "uniform_pm1", "rayleigh_two_sided", "chi_two_sided")

_QUAD_TOL = 1e-13


@dataclass(frozen=True)
class Distribution:
    """Symmetric law of the nonzero entries of a sparse signal.

    ``kind`` is one of ``gaussian``, ``uniform_pm1``, ``rayleigh_two_sided``
    and ``chi_two_sided`` (the latter needs ``dof``). ``scale`` stretches
    the standard law: ``X = scale * X_std``.

    ``derivative_order`` is the smallest ``r`` with a nonvanishing r-th
    derivative of the density at the origin, read off the density itself:
    0 for gaussian and uniform, 1 for Rayleigh, ``dof - 1`` for the
    two-sided chi law with density proportional to ``|x|^(dof-1) exp(-x^2/2)``.
    """

    kind: str
    scale: float = 1.0
    dof: int | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if self.kind == "chi_two_sided":
            if self.dof is None or int(self.dof) < 1:
                raise ValueError("chi_two_sided needs an integer dof >= 1")
            object.__setattr__(self, "dof", int(self.dof))
        elif self.dof is not None:
            raise ValueError(f"dof is only meaningful for chi_two_sided, not {self.kind}")
        if not self.name:
            object.__setattr__(self, "name", _default_name(self))

    @property
    def derivative_order(self) -> int:
        if self.kind == "rayleigh_two_sided":
            return 1
        if self.kind == "chi_two_sided":
            return self.dof - 1
        return 0

    # Thin method aliases so a Distribution reads naturally at call sites.
    def pdf(self, x):
        return pdf(self, x)

    def tail(self, x):
        return tail_q(self, x)

    def quantile(self, p):
        return quantile_psi(self, p)

    def sample(self, stream, size=None):
        return sample(self, stream, size)


def _default_name(dist):
    if dist.kind == "gaussian":
        return "gaussian"
    if dist.kind == "uniform_pm1":
        return "uniform"
    if dist.kind == "rayleigh_two_sided":
        return "rayleigh"
    return f"chi{dist.dof}"


DISTRIBUTION_NAMES = ("gaussian", "uniform", "rayleigh", "chi4", "chi6")


def get_distribution(name: str, scale: float = 1.0) -> Distribution:
    """Look up a distribution by its CLI name (``gaussian``, ``chi4`` ...)."""
    key = name.strip().lower()
    if key == "gaussian":
        return Distribution("gaussian", scale)
    if key in ("uniform", "uniform_pm1"):
        return Distribution("uniform_pm1", scale)
    if key in ("rayleigh", "rayleigh_two_sided"):
        return Distribution("rayleigh_two_sided", scale)
    if key.startswith("chi") and key[3:].isdigit():
        return Distribution("chi_two_sided", scale, dof=int(key[3:]))
    raise ValueError(f"unknown distribution {name!r}; expected one of {DISTRIBUTION_NAMES}")


@dataclass
class SparseSignal:
    """Length-``n`` vector with exactly ``k`` nonzeros on ``support``."""

    values: np.ndarray
    support: np.ndarray
    distribution: str = ""
    seed: object = None

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.support.shape[0]

    @property
    def nonzeros(self) -> np.ndarray:
        return self.values[self.support]


# ---------------------------------------------------------------------------
# Densities and tails
# ---------------------------------------------------------------------------

def _chi_log_norm(dof):
    # two-sided: 1 / (2 * 2^(d/2 - 1) * Gamma(d/2)) = 1 / (2^(d/2) Gamma(d/2))
    return -(0.5 * dof * math.log(2.0) + special.gammaln(0.5 * dof))


def pdf(dist: Distribution, x):
    """Density of ``dist`` at ``x`` (vectorised)."""
    x = np.asarray(x, dtype=float)
    s = dist.scale
    u = np.abs(x) / s
    if dist.kind == "gaussian":
        out = std_normal_pdf(u)
    elif dist.kind == "uniform_pm1":
        out = np.where(u <= 1.0, 0.5, 0.0)
    elif dist.kind == "rayleigh_two_sided":
        out = 0.5 * u * np.exp(-0.5 * u * u)
    else:
        d = dist.dof
        with np.errstate(divide="ignore"):
            logu = np.log(u)
        at_zero = math.exp(_chi_log_norm(d)) if d == 1 else 0.0
        with np.errstate(invalid="ignore"):
            out = np.where(u > 0, np.exp(_chi_log_norm(d) + (d - 1) * logu - 0.5 * u * u),
                           at_zero)
    out = np.asarray(out, dtype=float) / s
    return out if out.ndim else float(out)


def tail_q(dist: Distribution, x):
    """``Q_f(x) = P(X > x)`` for ``x >= 0``; equals 1/2 at the origin."""
    if np.ndim(x):
        return np.array([tail_q(dist, xi) for xi in np.asarray(x, dtype=float)])
    x = float(x)
    if not x >= 0:
        raise DomainError("tail_q is defined for x >= 0")
    u = x / dist.scale
    if dist.kind == "gaussian":
        return std_normal_tail(u)
    if dist.kind == "uniform_pm1":
        return 0.5 * max(0.0, 1.0 - u)
    if dist.kind == "rayleigh_two_sided":
        return 0.5 * math.exp(-0.5 * u * u)
    return _chi_tail(dist.dof, u)


@lru_cache(maxsize=4096)
def _chi_tail(dof, u):
    # Integrate whichever side is shorter so small tails keep relative accuracy.
    std = Distribution("chi_two_sided", 1.0, dof)
    mode = math.sqrt(dof - 1) if dof > 1 else 0.0
    if u <= mode:
        head = adaptive_quadrature(lambda t: pdf(std, t), 0.0, u, _QUAD_TOL, rtol=1e-12)
        return 0.5 - head
    return adaptive_quadrature(lambda t: pdf(std, t), u, math.inf, _QUAD_TOL)


def _support_end(dist):
    return dist.scale if dist.kind == "uniform_pm1" else math.inf


def quantile_psi(dist: Distribution, p: float) -> float:
    """``Psi_f(p) = Q_f^{-1}(p)`` for ``0 < p <= 1/2``."""
    p = float(p)
    if not (0.0 < p <= 0.5):
        raise DomainError("quantile_psi requires 0 < p <= 1/2")
    if p == 0.5:
        return 0.0
    if dist.kind == "gaussian":
        return dist.scale * std_normal_quantile(p)
    if dist.kind == "uniform_pm1":
        return dist.scale * (1.0 - 2.0 * p)
    if dist.kind == "rayleigh_two_sided":
        return dist.scale * math.sqrt(-2.0 * math.log(2.0 * p))

    def h(x):
        return tail_q(dist, x) - p

    br = expand_bracket(h, Bracket(0.0, dist.scale, 1e-14), grow="hi")
    return find_root(h, br)


def partial_first_moment(dist: Distribution, a: float) -> float:
    """``int_0^a x f(x) dx`` by quadrature (``a`` may be ``inf``)."""
    if a <= 0:
        return 0.0
    a = min(a, _support_end(dist))
    return adaptive_quadrature(lambda t: t * pdf(dist, t), 0.0, a, _QUAD_TOL, rtol=1e-11)


def abs_mean(dist: Distribution) -> float:
    """``E|X|``; closed form for gaussian and uniform, quadrature otherwise."""
    if dist.kind == "gaussian":
        return dist.scale * math.sqrt(2.0 / math.pi)
    if dist.kind == "uniform_pm1":
        return 0.5 * dist.scale
    return _abs_mean_quadrature(dist)


@lru_cache(maxsize=64)
def _abs_mean_quadrature(dist):
    return 2.0 * partial_first_moment(dist, math.inf)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample(dist: Distribution, stream: RandomStream, size=None):
    """Draw variates from ``dist`` using ``stream``."""
    rng = stream.rng
    s = dist.scale
    if dist.kind == "gaussian":
        return s * rng.standard_normal(size)
    if dist.kind == "uniform_pm1":
        return s * rng.uniform(-1.0, 1.0, size)
    signs = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    if dist.kind == "rayleigh_two_sided":
        mag = rng.rayleigh(s, size)
    else:
        mag = s * np.sqrt(rng.chisquare(dist.dof, size))
    out = signs * mag
    return float(out) if size is None else out


def generate_sparse(n: int, k: int, dist: Distribution, stream: RandomStream) -> SparseSignal:
    """Random ``k``-sparse vector: uniform support, i.i.d. nonzeros from ``dist``.

    The support is the first ``k`` slots of a partial Fisher-Yates shuffle.
    """
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    perm = np.arange(n)
    rng = stream.rng
    for i in range(k):
        j = int(rng.integers(i, n))
        perm[i], perm[j] = perm[j], perm[i]
    support = np.sort(perm[:k])
    values = np.zeros(n)
    if k:
        draws = np.atleast_1d(sample(dist, stream, k))
        # a continuous law returns exact zeros with probability 0; redraw if it happens
        while np.any(draws == 0.0):
            zero = draws == 0.0
            draws[zero] = np.atleast_1d(sample(dist, stream, int(zero.sum())))
        values[support] = draws
    return SparseSignal(values=values, support=support, distribution=dist.name,
                        seed=(stream.seed, stream.substream_id))
