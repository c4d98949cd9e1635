"""Stratum-wise empirical distributions."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class Support(NamedTuple):
    lo: float
    hi: float


class EmpiricalCdf:
    """Right-continuous step CDF of one stratum's outcomes.

    ``cdf(y)`` is ``#{Y_i <= y} / n``; ``quantile(u)`` is the left-continuous
    generalized inverse ``inf{y in sample : F(y) >= u}``.
    """

    __slots__ = ("sorted_values", "n", "_levels")

    def __init__(self, values):
        values = np.sort(np.asarray(values, dtype=float).reshape(-1))
        if values.size == 0:
            raise ValueError("cannot fit an empirical CDF to an empty stratum")
        values.flags.writeable = False
        self.sorted_values = values
        self.n = int(values.size)
        self._levels = np.arange(1, self.n + 1) / self.n

    def counts(self, y):
        """Number of sample points ``<= y``."""
        return np.searchsorted(self.sorted_values, y, side="right")

    def __call__(self, y):
        return self.counts(y) / self.n

    def quantile(self, u):
        u_arr = np.asarray(u, dtype=float)
        if np.any((u_arr < 0) | (u_arr > 1)) or np.any(np.isnan(u_arr)):
            raise ValueError("quantile level must lie in [0, 1]")
        idx = np.searchsorted(self._levels, u_arr, side="left")
        out = self.sorted_values[np.minimum(idx, self.n - 1)]
        return out if out.ndim else float(out)

    def support(self) -> Support:
        return Support(float(self.sorted_values[0]), float(self.sorted_values[-1]))

    def max_gap(self) -> float:
        if self.n < 2:
            return 0.0
        return float(np.max(np.diff(self.sorted_values)))

    def __repr__(self) -> str:
        lo, hi = self.support()
        return f"EmpiricalCdf(n={self.n}, support=[{lo:g}, {hi:g}])"


def fit_ecdf(values) -> EmpiricalCdf:
    return EmpiricalCdf(values)


def quantile(cdf: EmpiricalCdf, u):
    return cdf.quantile(u)


def support(cdf: EmpiricalCdf) -> Support:
    return cdf.support()


def silverman_bandwidth(sample) -> float:
    """Silverman's rule of thumb, ``0.9 * min(sd, IQR/1.34) * n^(-1/5)``."""
    x = np.asarray(sample, dtype=float)
    sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0:
        spread = sd
    if spread <= 0:
        raise ValueError("cannot choose a bandwidth for a constant sample")
    return 0.9 * spread * x.size ** -0.2


class DensityEstimate:
    """Gaussian kernel density estimate with Silverman bandwidth."""

    def __init__(self, sample, bandwidth: float | None = None):
        self.sample = np.asarray(sample, dtype=float).reshape(-1)
        if self.sample.size == 0:
            raise ValueError("cannot estimate a density from an empty sample")
        self.bandwidth = float(bandwidth) if bandwidth is not None else silverman_bandwidth(self.sample)
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")

    def __call__(self, y):
        y_arr = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.empty(y_arr.shape)
        h = self.bandwidth
        # chunked to bound memory at len(y) * n
        step = max(1, 2_000_000 // self.sample.size)
        for start in range(0, y_arr.size, step):
            z = (y_arr[start:start + step, None] - self.sample[None, :]) / h
            out[start:start + step] = np.exp(-0.5 * z * z).mean(axis=1) / (h * _SQRT_2PI)
        return out if np.ndim(y) else float(out[0])


def density_at(d: DensityEstimate, y):
    return d(y)
