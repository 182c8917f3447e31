"""Monte Carlo sweeps, bound tables and order-statistics checks.

Every trial draws from its own random substream ``(0, k, trial)``, so a
trial's data do not depend on which thread runs it or in what order.
Results are merged in sorted order, which makes the output independent of
the thread count.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .analysis import (RobustnessConfig, empirical_orderstat_ratio, orderstat_ratio_general,
                       overlap_lower_bound, zeta)
from .exceptions import SolverError
from .numerics import RandomStream, gaussian_matrix
from .recovery import SUCCESS_TOL, support_overlap_fraction, two_step_weights
from .signals import generate_sparse, get_distribution
from .solver import BasisPursuitProblem, k_support, solve_weighted_l1

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "SweepRow",
    "run_sweep",
    "run_overlap",
    "run_bound_curves",
    "run_orderstats",
    "crossover",
    "SWEEP_HEADER",
    "BOUNDS_HEADER",
    "ORDERSTATS_HEADER",
    "rows_to_csv",
    "manifest",
]

SWEEP_HEADER = ("k", "trials", "algo", "omega", "successes", "rate", "mean_overlap", "wall_ms")
BOUNDS_HEADER = ("dist", "epsilon0", "zeta", "overlap_bound")
ORDERSTATS_HEADER = ("dist", "ratio", "empirical", "theoretical", "abs_error")

ALGORITHMS = ("l1", "two_step")

_TRIAL_STREAM = 0
_MATRIX_STREAM = 1


@dataclass
class ExperimentConfig:
    n: int = 200
    m: int = 112
    k_values: tuple = tuple(range(30, 71, 5))
    trials: int = 100
    distribution: str = "gaussian"
    omegas: tuple = (2.0, 3.0, 5.0, 10.0)
    seed: int = 0
    algorithms: tuple = ALGORITHMS
    fix_matrix: bool = False
    threads: int = 1
    timing: bool = False

    def __post_init__(self):
        self.k_values = tuple(int(k) for k in self.k_values)
        self.omegas = tuple(float(w) for w in self.omegas)
        self.algorithms = tuple(self.algorithms)
        if not 1 <= self.m < self.n:
            raise ValueError(f"need 1 <= m < n, got m={self.m}, n={self.n}")
        if not self.k_values or min(self.k_values) < 0 or max(self.k_values) >= self.n:
            raise ValueError("k values must lie in [0, n)")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        bad = set(self.algorithms) - set(ALGORITHMS)
        if bad:
            raise ValueError(f"unknown algorithms {sorted(bad)}")
        if "two_step" in self.algorithms and any(w <= 1 for w in self.omegas):
            raise ValueError("two-step weights must exceed 1")
        get_distribution(self.distribution)

    def as_dict(self):
        return asdict(self)


@dataclass
class SweepRow:
    k: int
    trials: int
    algo: str
    omega: float | None
    successes: int
    mean_overlap: float
    wall_ms: float | None = None

    @property
    def rate(self) -> float:
        return self.successes / self.trials

    def as_record(self) -> dict:
        return {
            "k": self.k,
            "trials": self.trials,
            "algo": self.algo,
            "omega": "" if self.omega is None else repr(self.omega),
            "successes": self.successes,
            "rate": repr(self.rate),
            "mean_overlap": repr(self.mean_overlap),
            "wall_ms": "" if self.wall_ms is None else f"{self.wall_ms:.1f}",
        }


@dataclass
class _TrialOutcome:
    l1_success: bool
    overlap: float
    weighted_success: dict = field(default_factory=dict)


def _recovered(estimate, truth):
    nt = np.linalg.norm(truth)
    if nt == 0:
        # k = 0: the zero vector, judged by absolute size
        return bool(np.linalg.norm(estimate) <= SUCCESS_TOL)
    return bool(np.linalg.norm(estimate - truth) / nt <= SUCCESS_TOL)


def _solve_or_none(problem, what):
    try:
        res = solve_weighted_l1(problem)
    except (SolverError, np.linalg.LinAlgError, ValueError) as exc:
        log.warning("%s solve raised %s", what, exc)
        return None
    if res.status != "optimal":
        log.warning("%s solve ended with status %s", what, res.status)
        return None
    return res


def _run_trial(cfg: ExperimentConfig, dist, k, trial, A_fixed, weighted):
    stream = RandomStream(cfg.seed, (_TRIAL_STREAM, k, trial))
    A = A_fixed if A_fixed is not None else gaussian_matrix(cfg.m, cfg.n, stream)
    x = generate_sparse(cfg.n, k, dist, stream)
    y = A @ x.values
    first = _solve_or_none(BasisPursuitProblem(A, y), f"l1 (k={k}, trial={trial})")
    if first is None:
        return _TrialOutcome(False, 0.0 if k else 1.0,
                             {w: False for w in cfg.omegas} if weighted else {})
    xhat = first.solution
    overlap = support_overlap_fraction(x, xhat) if k else 1.0
    out = _TrialOutcome(_recovered(xhat, x.values), overlap)
    if weighted:
        L = k_support(xhat, k)
        for w in cfg.omegas:
            res = _solve_or_none(BasisPursuitProblem(A, y, two_step_weights(cfg.n, L, w)),
                                 f"weighted (k={k}, trial={trial}, omega={w})")
            out.weighted_success[w] = res is not None and _recovered(res.solution, x.values)
    return out


def _run_trials(cfg: ExperimentConfig, weighted: bool):
    dist = get_distribution(cfg.distribution)
    A_fixed = None
    if cfg.fix_matrix:
        A_fixed = gaussian_matrix(cfg.m, cfg.n, RandomStream(cfg.seed, (_MATRIX_STREAM,)))
    tasks = [(k, t) for k in sorted(set(cfg.k_values)) for t in range(cfg.trials)]

    def work(task):
        t0 = time.perf_counter()
        res = _run_trial(cfg, dist, task[0], task[1], A_fixed, weighted)
        return res, time.perf_counter() - t0

    if cfg.threads == 1:
        results = [work(task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(work, tasks))
    by_k: dict = {}
    for (k, _), res in zip(tasks, results):
        by_k.setdefault(k, []).append(res)
    return by_k


def _rows_for_k(cfg, k, outcomes, weighted):
    trials = len(outcomes)
    overlap = math.fsum(o.overlap for o, _ in outcomes) / trials
    wall = 1e3 * math.fsum(dt for _, dt in outcomes) if cfg.timing else None
    rows = []
    if "l1" in cfg.algorithms or not weighted:
        rows.append(SweepRow(k, trials, "l1", None, sum(o.l1_success for o, _ in outcomes),
                             overlap, wall))
    if weighted:
        for w in cfg.omegas:
            rows.append(SweepRow(k, trials, "two_step", w,
                                 sum(o.weighted_success[w] for o, _ in outcomes), overlap, wall))
    return rows


def _sort_rows(rows):
    return sorted(rows, key=lambda r: (r.k, r.algo, -1.0 if r.omega is None else r.omega))


def run_sweep(cfg: ExperimentConfig) -> list:
    """Recovery rate per ``k`` for plain l1 and two-step at each ``omega``."""
    weighted = "two_step" in cfg.algorithms
    by_k = _run_trials(cfg, weighted)
    rows = []
    for k in sorted(by_k):
        rows.extend(_rows_for_k(cfg, k, by_k[k], weighted))
    return _sort_rows(rows)


def run_overlap(cfg: ExperimentConfig) -> list:
    """Mean overlap of the true support with the ``k``-support of the l1 solution."""
    by_k = _run_trials(cfg, weighted=False)
    rows = []
    for k in sorted(by_k):
        rows.extend(_rows_for_k(cfg, k, by_k[k], weighted=False))
    return _sort_rows(rows)


def crossover(ks, rates, level: float = 0.5) -> float:
    """``k`` where the success rate falls through ``level``, by linear interpolation.

    Returns the last ``k`` when the rate never drops below ``level`` and
    the first when it starts below.
    """
    ks = np.asarray(ks, dtype=float)
    rates = np.asarray(rates, dtype=float)
    order = np.argsort(ks)
    ks, rates = ks[order], rates[order]
    if rates[0] < level:
        return float(ks[0])
    for i in range(1, ks.size):
        if rates[i] < level:
            r0, r1 = rates[i - 1], rates[i]
            return float(ks[i - 1] + (r0 - level) / (r0 - r1) * (ks[i] - ks[i - 1]))
    return float(ks[-1])


def run_bound_curves(delta: float, dists, epsilon0_grid, cfg: RobustnessConfig | None = None
                     ) -> list:
    """Tabulate ``zeta`` and the overlap lower bound per law and ``eps0``.

    The default ``kappa_star`` is valid at ``delta = 0.5555``; ``delta`` is
    recorded for the manifest and otherwise only selects that constant.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    cfg = cfg or RobustnessConfig()
    rows = []
    for name in dists:
        dist = get_distribution(name) if isinstance(name, str) else name
        for eps in epsilon0_grid:
            z = zeta(float(eps), cfg, dist)
            rows.append({"dist": dist.name, "epsilon0": repr(float(eps)), "zeta": repr(z),
                         "overlap_bound": repr(overlap_lower_bound(float(eps), cfg, dist))})
    return rows


def run_orderstats(dist, N: int, ratios, seed: int) -> list:
    """Empirical versus theoretical share of the top ``ratio * N`` draws."""
    dist = get_distribution(dist) if isinstance(dist, str) else dist
    rows = []
    for i, r in enumerate(ratios):
        M = max(1, int(round(r * N)))
        emp = empirical_orderstat_ratio(dist, N, M, RandomStream(seed, (i,)))
        theo = orderstat_ratio_general(dist, M / N)
        rows.append({"dist": dist.name, "ratio": repr(float(r)), "empirical": repr(emp),
                     "theoretical": repr(theo), "abs_error": repr(abs(emp - theo))})
    return rows


def rows_to_csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(header), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow(r.as_record() if hasattr(r, "as_record") else r)
    return buf.getvalue()


def manifest(config: dict, seed, rows) -> str:
    records = [r.as_record() if hasattr(r, "as_record") else r for r in rows]
    return json.dumps({"config": config, "seed": seed, "version": __version__,
                       "rows": records}, indent=2, sort_keys=True, default=str)
