"""Stratified bootstrap and the analytic variance of mapped outcomes."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .counterfactual import CdfCache, map_values, outcome_key
from .domain import CausalGraph, Dataset, PositivityError, as_cause_vector
from .ecdf import DensityEstimate

DENSITY_FLOOR = 1e-8


class BootstrapError(RuntimeError):
    """Too many bootstrap replicates could not be evaluated."""


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 500
    seed: int = 0
    level: float = 0.95
    max_dropped: float = 0.2
    n_jobs: int = 1

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not 0 < self.level < 1:
            raise ValueError("level must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    point: np.ndarray
    se: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    replicates: np.ndarray
    dropped: int

    @property
    def ci(self):
        return self.ci_low, self.ci_high


def stratified_indices(codes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Resample rows with replacement inside each cause-pattern stratum."""
    parts = []
    for code in np.unique(codes):
        rows = np.flatnonzero(codes == code)
        parts.append(rows[rng.integers(0, rows.size, size=rows.size)])
    return np.concatenate(parts)


def bootstrap(statistic: Callable[[Dataset], object], data: Dataset,
              config: BootstrapConfig = BootstrapConfig()) -> BootstrapResult:
    """Percentile bootstrap for ``statistic`` (scalar or array valued).

    Each replicate gets its own generator spawned from ``config.seed``, so
    results do not depend on execution order. Replicates that hit an empty
    stratum are dropped; more than ``max_dropped`` of them is an error.
    """
    point = np.asarray(statistic(data), dtype=float)
    codes = data.pattern_codes
    seeds = np.random.SeedSequence(config.seed).spawn(config.replicates)

    def one(seed_seq):
        rows = stratified_indices(codes, np.random.default_rng(seed_seq))
        try:
            return np.asarray(statistic(data.take(rows)), dtype=float)
        except PositivityError:
            return None

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        if config.n_jobs > 1:
            with ThreadPoolExecutor(config.n_jobs) as pool:
                results = list(pool.map(one, seeds))
        else:
            results = [one(s) for s in seeds]

    kept = [r for r in results if r is not None]
    dropped = len(results) - len(kept)
    if dropped > config.max_dropped * config.replicates:
        raise BootstrapError(
            f"{dropped} of {config.replicates} bootstrap replicates hit an empty stratum")
    reps = np.sort(np.stack(kept), axis=0)
    if reps.shape[0] > 1:
        se = np.std(reps, axis=0, ddof=1)
        se = np.where(np.ptp(reps, axis=0) == 0, 0.0, se)
    else:
        se = np.zeros_like(point)
    alpha = 1.0 - config.level
    lo, hi = np.quantile(reps, [alpha / 2, 1 - alpha / 2], axis=0)
    return BootstrapResult(point, se, lo, hi, reps, dropped)


# ---------------------------------------------------------------------------
# Analytic variance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MapVariance:
    y: float
    phi: float
    sigma2: float
    density: float
    se: float
    f_source: float
    f_target: float
    p_source: float
    p_target: float
    n: int


def _strata(data: Dataset, x, x_prime, graph):
    x = as_cause_vector(x, data.p)
    x_prime = as_cause_vector(x_prime, data.p)
    cache = CdfCache(data)
    src, tgt = outcome_key(x, graph), outcome_key(x_prime, graph)
    return cache, src, tgt


def map_covariance(data: Dataset, x: Sequence[int], x_prime: Sequence[int],
                   s: float, t: float, graph: Optional[CausalGraph] = None) -> float:
    """Plug-in covariance kernel of the scaled mapping process at ``(s, t)``."""
    if s > t:
        s, t = t, s
    cache, src, tgt = _strata(data, x, x_prime, graph)
    f_src, f_tgt = cache.cdf(src), cache.cdf(tgt)
    phi = map_values(cache, src, tgt, np.array([s, t]))
    p_src, p_tgt = f_src.n / data.n, f_tgt.n / data.n
    g_s, g_t = f_tgt(phi)
    return float(g_s * (1 - g_t) / p_tgt + f_src(s) * (1 - f_src(t)) / p_src)


def analytic_map_variance(data: Dataset, x: Sequence[int], x_prime: Sequence[int],
                          y: float, graph: Optional[CausalGraph] = None) -> MapVariance:
    """Pointwise asymptotic variance of the estimated mapping at ``y``.

    ``sigma2 = F'(phi)(1 - F'(phi)) / pr(x') + F(y)(1 - F(y)) / pr(x)`` with
    plug-in CDFs and stratum shares; the implied standard error of
    ``phi_hat(y)`` is ``sqrt(sigma2) / (sqrt(n) * g'(phi))`` where ``g'`` is a
    kernel density estimate of the target stratum.
    """
    cache, src, tgt = _strata(data, x, x_prime, graph)
    f_src, f_tgt = cache.cdf(src), cache.cdf(tgt)
    lo, hi = f_src.support()
    if not lo <= y <= hi:
        raise ValueError(f"y={y} lies outside the source support [{lo}, {hi}]")
    phi = float(map_values(cache, src, tgt, np.array([y]), "plugin")[0])
    u_src, u_tgt = float(f_src(y)), float(f_tgt(phi))
    p_src, p_tgt = f_src.n / data.n, f_tgt.n / data.n
    sigma2 = u_tgt * (1 - u_tgt) / p_tgt + u_src * (1 - u_src) / p_src
    density = float(DensityEstimate(f_tgt.sorted_values)(phi))
    if density < DENSITY_FLOOR:
        raise ValueError(f"target density {density:.3g} at {phi} is too small "
                         "for the analytic variance")
    se = math.sqrt(sigma2) / (math.sqrt(data.n) * density)
    return MapVariance(float(y), phi, sigma2, density, se, u_src, u_tgt, p_src, p_tgt, data.n)
