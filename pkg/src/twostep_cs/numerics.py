"""Numerical substrate: seeded random streams, Gaussian special functions,
quadrature and bracketed root finding.

Every other module builds on these helpers. They are thin, validated
wrappers around numpy/scipy so the contracts (domains, tolerances,
failure modes) are stated in one place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import integrate, optimize, special

from .exceptions import BracketError, DomainError, QuadratureError

__all__ = [
    "RandomStream",
    "Bracket",
    "std_normal_tail",
    "std_normal_quantile",
    "std_normal_pdf",
    "scaled_erf_pair",
    "adaptive_quadrature",
    "find_root",
    "expand_bracket",
    "gaussian_matrix",
    "check_matrix",
    "check_vector",
]

SubstreamId = Union[int, Sequence[int]]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------

class RandomStream:
    """Reproducible random stream identified by ``(seed, substream_id)``.

    The substream seed is derived by hashing the master seed together with
    the substream id (numpy ``SeedSequence``), and the variates come from the
    counter-based Philox generator. Identical ``(seed, substream_id)`` pairs
    give identical sequences; a stream is stateful and must not be shared
    between concurrent tasks.

    ``substream_id`` may be a single non-negative integer or a tuple of them,
    e.g. ``(k, trial)`` in a Monte Carlo sweep.
    """

    def __init__(self, seed: int, substream_id: SubstreamId = 0):
        if isinstance(substream_id, (int, np.integer)):
            key = (int(substream_id),)
        else:
            key = tuple(int(i) for i in substream_id)
        if int(seed) < 0 or any(i < 0 for i in key):
            raise ValueError("seed and substream ids must be non-negative")
        self.seed = int(seed)
        self.substream_id = key if len(key) > 1 else key[0]
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=key)
        self.rng = np.random.Generator(np.random.Philox(seq))

    def spawn(self, substream_id: SubstreamId) -> "RandomStream":
        """Independent stream from the same master seed."""
        return RandomStream(self.seed, substream_id)

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, substream_id={self.substream_id!r})"


# ---------------------------------------------------------------------------
# Gaussian special functions
# ---------------------------------------------------------------------------

def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return out if out.ndim else float(out)


def std_normal_tail(x):
    """Upper tail ``Q(x) = P(Z > x)`` of the standard normal.

    Evaluated as ``erfc(x / sqrt(2)) / 2``; ``erfc`` keeps full relative
    precision in the far right tail, so no cancellation occurs for large
    ``x`` (the result underflows to 0 only beyond x ~ 38).
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("std_normal_tail requires finite input")
    out = 0.5 * special.erfc(x / _SQRT2)
    return out if out.ndim else float(out)


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_tail`: returns ``x`` with ``Q(x) = p``."""
    p = np.asarray(p, dtype=float)
    if np.any(~(p > 0.0) | ~(p < 1.0)):
        raise DomainError("std_normal_quantile requires 0 < p < 1")
    # ndtri is the lower-tail inverse; Q^{-1}(p) = -Phi^{-1}(p).
    out = -special.ndtri(p)
    return out if out.ndim else float(out)


def scaled_erf_pair(x):
    """Return ``(g(x), G(x))`` with ``G = erf`` and ``g = G'``.

    ``g(x) = 2/sqrt(pi) * exp(-x^2)``, ``G(x) = 2/sqrt(pi) * int_0^x exp(-y^2) dy``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0.0)):
        raise DomainError("scaled_erf_pair requires x >= 0")
    g = _TWO_OVER_SQRT_PI * np.exp(-x * x)
    G = special.erf(x)
    if g.ndim:
        return g, G
    return float(g), float(G)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

_TAIL_CUTOFF = 1e-15


def _truncation_point(f, lo, start=1.0, max_doublings=200):
    """Smallest probed ``hi = lo + start*2^j`` beyond which |f| < 1e-15.

    The integrand is probed on a few points of each doubling segment so a
    single lucky zero does not stop the search early.
    """
    width = start
    for _ in range(max_doublings):
        hi = lo + width
        probes = hi + width * np.array([0.0, 0.25, 0.5, 1.0])
        if all(abs(f(t)) < _TAIL_CUTOFF for t in probes):
            return hi
        width *= 2.0
    raise QuadratureError("integrand does not decay; cannot truncate infinite range")


def adaptive_quadrature(f: Callable[[float], float], lo: float, hi: float,
                        tol: float = 1e-10, rtol: float = 0.0) -> float:
    """Integrate ``f`` over ``[lo, hi]`` to absolute error ``tol``.

    A positive ``rtol`` additionally accepts a relative error bound, which
    matters for tiny integrals over short ranges. ``hi`` may be ``inf``;
    the range is then truncated where the integrand falls below 1e-15.
    Raises :class:`QuadratureError` when the adaptive refinement does not
    converge.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if math.isinf(lo):
        raise DomainError("lower limit must be finite")
    if hi == lo:
        return 0.0
    if hi < lo:
        return -adaptive_quadrature(f, hi, lo, tol, rtol)
    if math.isinf(hi):
        hi = _truncation_point(f, lo)
    value, err = integrate.quad(f, lo, hi, epsabs=tol, epsrel=rtol,
                                limit=500, full_output=True)[:2]
    if not math.isfinite(value):
        raise QuadratureError("integrand produced a non-finite value")
    if err > max(tol, rtol * abs(value), 1e3 * np.finfo(float).eps * abs(value)):
        raise QuadratureError(
            f"quadrature on [{lo}, {hi}] did not converge: error estimate {err:.3g}"
        )
    return float(value)


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    tolerance: float = 1e-12

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bracket requires lo < hi, got [{self.lo}, {self.hi}]")
        if not self.tolerance > 0:
            raise ValueError("bracket tolerance must be positive")


def find_root(f: Callable[[float], float], bracket: Bracket) -> float:
    """Root of ``f`` inside ``bracket`` (Brent's bisection/secant hybrid).

    Raises :class:`BracketError` if ``f(lo)`` and ``f(hi)`` have the same
    strict sign; use :func:`expand_bracket` first when the location of the
    root is only roughly known.
    """
    flo, fhi = f(bracket.lo), f(bracket.hi)
    if flo == 0.0:
        return float(bracket.lo)
    if fhi == 0.0:
        return float(bracket.hi)
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(
            f"f has the same sign at both ends of [{bracket.lo}, {bracket.hi}]"
            f" (f(lo)={flo:.3g}, f(hi)={fhi:.3g})"
        )
    return float(optimize.brentq(f, bracket.lo, bracket.hi, xtol=bracket.tolerance,
                                 rtol=4 * np.finfo(float).eps, maxiter=500))


def expand_bracket(f: Callable[[float], float], bracket: Bracket, max_steps: int = 60,
                   grow: str = "both", floor: float | None = None) -> Bracket:
    """Geometrically widen ``bracket`` until ``f`` changes sign across it.

    ``grow`` selects which end moves (``"lo"``, ``"hi"`` or ``"both"``);
    the width doubles at each step. ``floor`` stops the lower end from
    crossing a hard limit (e.g. 0 for positive-only functions), in which
    case the lower end halves its distance to the floor instead.
    """
    lo, hi = bracket.lo, bracket.hi
    for _ in range(max_steps + 1):
        if np.sign(f(lo)) != np.sign(f(hi)) or f(lo) == 0.0 or f(hi) == 0.0:
            return Bracket(lo, hi, bracket.tolerance)
        width = hi - lo
        if grow in ("lo", "both"):
            lo = floor + 0.5 * (lo - floor) if floor is not None and lo - width <= floor else lo - width
        if grow in ("hi", "both"):
            hi = hi + width
    raise BracketError(f"no sign change found after {max_steps} expansions (last [{lo}, {hi}])")


# ---------------------------------------------------------------------------
# Matrices and input validation
# ---------------------------------------------------------------------------

def gaussian_matrix(m: int, n: int, stream: RandomStream) -> np.ndarray:
    """``m x n`` matrix of i.i.d. standard normal entries (no column scaling)."""
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be positive")
    return stream.rng.standard_normal((m, n))


def check_matrix(A, name="A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.size == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def check_vector(v, length=None, name="vector") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        v = v.ravel() if v.ndim == 2 and 1 in v.shape else v
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {length}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v
