"""Counterfactual outcome mappings by quantile matching.

The mapping ``phi_{x -> x'}`` sends a unit's outcome under ``x`` to its outcome
under ``x'``. Under rank preservation it equals ``F_{x'}^{-1}(F_x(y))``. Two
estimators are provided:

* ``plugin``: the empirical quantile match, computed with integer ranks.
* ``grid``: minimization of the convex check-type objective

      rho(t; y) = mean_{j in x} sign(Y_j - y) * t + mean_{j in x'} |Y_j - t|

  over a grid made of the target sample values and the support bounds.
  ``rho`` is piecewise linear with kinks only at target sample points, so the
  grid contains a global minimizer; ties go to the smallest one.

Both methods clamp the result to the target stratum's sample support.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .domain import (CausalGraph, CauseVector, Dataset, Key, PositivityError,
                     as_cause_vector, format_key, full_key, make_key, stratum_rows)
from .ecdf import EmpiricalCdf, Support

METHODS = ("plugin", "grid")


def _check_method(method: str) -> None:
    if method not in METHODS:
        raise ValueError(f"unknown mapping method {method!r}; expected one of {METHODS}")


def map_plugin(source_cdf: EmpiricalCdf, target_cdf: EmpiricalCdf, y):
    """Empirical quantile match ``Q_target(F_source(y))``.

    Exact in integer arithmetic: with ``k = #{source <= y}`` the result is the
    ``ceil(k * n_t / n_s)``-th order statistic of the target (the minimum when
    ``k = 0``).
    """
    k = np.asarray(source_cdf.counts(y), dtype=np.int64)
    n_s, n_t = source_cdf.n, target_cdf.n
    j = (k * n_t + n_s - 1) // n_s
    out = target_cdf.sorted_values[np.maximum(j - 1, 0)]
    return out if out.ndim else float(out)


def objective(source_cdf: EmpiricalCdf, target_cdf: EmpiricalCdf, t, y: float):
    """Sample objective ``rho(t; y)`` evaluated at the points ``t``."""
    k = source_cdf.counts(y)
    slope = (source_cdf.n - 2 * k) / source_cdf.n
    t = np.asarray(t, dtype=float)
    tv = target_cdf.sorted_values
    abs_dev = np.abs(tv[None, :] - np.atleast_1d(t)[:, None]).mean(axis=1)
    out = slope * np.atleast_1d(t) + abs_dev
    return out if t.ndim else float(out[0])


def _mean_abs_dev(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """``mean_j |values_j - g|`` for each g, with ``values`` sorted."""
    n = values.size
    prefix = np.concatenate(([0.0], np.cumsum(values)))
    m = np.searchsorted(values, grid, side="right")
    below = prefix[m]
    return (m * grid - below + (prefix[-1] - below) - (n - m) * grid) / n


def map_gridsearch(source_cdf: EmpiricalCdf, target_cdf: EmpiricalCdf, y,
                   bounds: Optional[Support] = None):
    """Grid-search minimizer of the check-type objective, one per ``y``."""
    if bounds is None:
        bounds = target_cdf.support()
    lo, hi = float(bounds[0]), float(bounds[1])
    if lo > hi:
        raise ValueError("bounds must satisfy lo <= hi")
    tv = target_cdf.sorted_values
    grid = np.unique(np.concatenate(([lo, hi], tv[(tv >= lo) & (tv <= hi)])))

    # center at the target median to limit cancellation
    t0 = float(np.median(tv))
    values = tv - t0
    g = grid - t0
    abs_dev = _mean_abs_dev(values, g)

    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    k = source_cdf.counts(y_arr)
    uniq, inverse = np.unique(k, return_inverse=True)
    slopes = (source_cdf.n - 2 * uniq) / source_cdf.n
    best = np.empty(uniq.size)
    step = max(1, 2_000_000 // g.size)
    tol_scale = 64 * np.finfo(float).eps
    for start in range(0, uniq.size, step):
        s = slopes[start:start + step, None]
        rho = s * g[None, :] + abs_dev[None, :]
        rmin = rho.min(axis=1, keepdims=True)
        tol = tol_scale * (np.abs(s) * np.abs(g).max() + np.abs(abs_dev).max())
        best[start:start + step] = grid[np.argmax(rho <= rmin + tol, axis=1)]
    out = best[inverse]
    return out if np.ndim(y) else float(out[0])


# ---------------------------------------------------------------------------
# Dataset-level maps
# ---------------------------------------------------------------------------

class CdfCache:
    """Memoized empirical CDFs of ``data`` keyed by (partial) cause assignment."""

    def __init__(self, data: Dataset):
        self.data = data
        self._cdfs: dict[Key, EmpiricalCdf] = {}

    def cdf(self, key: Key) -> EmpiricalCdf:
        cdf = self._cdfs.get(key)
        if cdf is None:
            rows = stratum_rows(self.data, key).rows
            if rows.size == 0:
                raise PositivityError(
                    f"no observations in outcome stratum {format_key(key, self.data.cause_names)}",
                    cell=key)
            cdf = EmpiricalCdf(self.data.y[rows])
            self._cdfs[key] = cdf
        return cdf


def outcome_key(x: Sequence[int], graph: Optional[CausalGraph]) -> Key:
    """Stratum key used for the outcome distribution of pattern ``x``."""
    if graph is None:
        return full_key(x)
    return make_key(graph.outcome_parents, x)


def map_values(cache: CdfCache, source_key: Key, target_key: Key, y,
               method: str = "plugin") -> np.ndarray:
    """Evaluate the estimated mapping from ``source_key`` to ``target_key`` at ``y``."""
    _check_method(method)
    y = np.asarray(y, dtype=float)
    src = cache.cdf(source_key)
    if source_key == target_key:
        return y.copy()
    tgt = cache.cdf(target_key)
    if method == "plugin":
        return np.asarray(map_plugin(src, tgt, y), dtype=float)
    return np.asarray(map_gridsearch(src, tgt, y), dtype=float)


@dataclass(frozen=True, eq=False)
class CounterfactualMap:
    source: Key
    target: Key
    method: str
    y: np.ndarray
    phi: np.ndarray

    def pairs(self):
        return list(zip(self.y.tolist(), self.phi.tolist()))


def map_for_evidence(data: Dataset, x: Sequence[int], x_prime: Sequence[int],
                     graph: Optional[CausalGraph] = None, method: str = "plugin",
                     cache: Optional[CdfCache] = None) -> CounterfactualMap:
    """Estimated mapping ``x -> x'`` evaluated at every unit of the source stratum.

    With a graph, both strata are keyed on the outcome's parents only.
    """
    x = as_cause_vector(x, data.p)
    x_prime = as_cause_vector(x_prime, data.p)
    cache = cache or CdfCache(data)
    src_key, tgt_key = outcome_key(x, graph), outcome_key(x_prime, graph)
    y = cache.cdf(src_key).sorted_values
    phi = map_values(cache, src_key, tgt_key, y, method)
    return CounterfactualMap(src_key, tgt_key, method, y.copy(), phi)


@dataclass(frozen=True)
class IteRecord:
    unit: int
    x_prime: CauseVector
    x_star: CauseVector
    value: float


def ite(data: Dataset, unit: int, x_prime: Sequence[int], x_star: Sequence[int],
        graph: Optional[CausalGraph] = None, method: str = "plugin",
        cache: Optional[CdfCache] = None) -> IteRecord:
    """Individual effect ``phi_{x->x'}(Y_i) - phi_{x->x*}(Y_i)`` for one unit."""
    x_prime = as_cause_vector(x_prime, data.p)
    x_star = as_cause_vector(x_star, data.p)
    cache = cache or CdfCache(data)
    x = tuple(int(v) for v in data.X[unit])
    yi = data.y[unit]
    src = outcome_key(x, graph)
    a = map_values(cache, src, outcome_key(x_prime, graph), yi, method)
    b = map_values(cache, src, outcome_key(x_star, graph), yi, method)
    return IteRecord(int(unit), x_prime, x_star, float(a - b))


def ite_all(data: Dataset, x_prime: Sequence[int], x_star: Sequence[int],
            graph: Optional[CausalGraph] = None, method: str = "plugin") -> np.ndarray:
    """Estimated ``ITE(x', x*)`` for every unit of ``data``."""
    x_prime = as_cause_vector(x_prime, data.p)
    x_star = as_cause_vector(x_star, data.p)
    cache = CdfCache(data)
    out = np.empty(data.n)
    src_keys = {}
    for i, row in enumerate(data.X):
        src_keys.setdefault(outcome_key(row, graph), []).append(i)
    for src, rows in src_keys.items():
        rows = np.asarray(rows)
        yi = data.y[rows]
        out[rows] = (map_values(cache, src, outcome_key(x_prime, graph), yi, method)
                     - map_values(cache, src, outcome_key(x_star, graph), yi, method))
    return out
