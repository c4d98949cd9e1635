"""Cross-world distributions of downstream causes and a monotonicity check.

Under sequential ignorability and monotone causes, the law of the downstream
causes ``D_k(a_k, x_k')`` among units with ``X = x`` is a product of per-cause
factors built from ratios of conditional cause frequencies. Ratios are
computed from cell counts of the data, optionally with add-alpha smoothing,
and with a graph they condition on each cause's parents only.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domain import (CausalGraph, CauseVector, Dataset, Key, PositivityError,
                     _check_suffix, as_cause_vector, enumerate_geq, enumerate_leq,
                     format_key, key_mask, partial_order_leq)


class RatioClampWarning(UserWarning):
    """An estimated ratio exceeded 1 and was clamped."""


@dataclass(frozen=True)
class RatioTerm:
    s: int
    kind: str  # "R0" or "R1"
    value: float
    raw: float
    numerator_cell: Key
    denominator_cell: Key
    numerator_counts: tuple[int, int]  # (n with X_s = level, n in cell)
    denominator_counts: tuple[int, int]

    @property
    def clamped(self) -> bool:
        return self.raw > 1.0


def _cell(s: int, prefix: Sequence[int], graph: Optional[CausalGraph]) -> Key:
    idx = range(s) if graph is None else graph.parents[s]
    return tuple((i, int(prefix[i])) for i in idx)


def _cell_counts(data: Dataset, s: int, cell: Key, level: int) -> tuple[int, int]:
    mask = key_mask(data, cell)
    total = int(mask.sum())
    hits = int(np.count_nonzero(data.X[mask, s] == level))
    return hits, total


def _ratio(data: Dataset, s: int, level: int, num_prefix: Sequence[int],
           den_prefix: Sequence[int], graph: Optional[CausalGraph],
           smoothing: float) -> RatioTerm:
    kind = "R0" if level == 1 else "R1"
    num_cell = _cell(s, num_prefix, graph)
    den_cell = _cell(s, den_prefix, graph)
    num = _cell_counts(data, s, num_cell, level)
    den = _cell_counts(data, s, den_cell, level)
    names = data.cause_names
    for cell, (hits, total) in ((num_cell, num), (den_cell, den)):
        if total + 2 * smoothing == 0:
            raise PositivityError(
                f"{kind} for {names[s]}: empty conditioning cell {format_key(cell, names)}",
                cell=cell)
    p_num = (num[0] + smoothing) / (num[1] + 2 * smoothing)
    p_den = (den[0] + smoothing) / (den[1] + 2 * smoothing)
    if p_den == 0:
        raise PositivityError(
            f"{kind} for {names[s]}: pr({names[s]}={level} | {format_key(den_cell, names)}) is 0",
            cell=den_cell)
    raw = p_num / p_den
    value = min(raw, 1.0)
    return RatioTerm(s, kind, value, raw, num_cell, den_cell, num, den)


def ratio_r0(data: Dataset, s: int, num_prefix: Sequence[int], den_prefix: Sequence[int],
             graph: Optional[CausalGraph] = None, smoothing: float = 0.0) -> RatioTerm:
    """``pr(X_s=1 | num_prefix) / pr(X_s=1 | den_prefix)``.

    Prefixes are assignments of causes ``0..s-1``; with a graph only the
    parents of ``X_s`` are used. The returned ``value`` is clamped to 1.
    """
    return _ratio(data, s, 1, num_prefix, den_prefix, graph, smoothing)


def ratio_r1(data: Dataset, s: int, num_prefix: Sequence[int], den_prefix: Sequence[int],
             graph: Optional[CausalGraph] = None, smoothing: float = 0.0) -> RatioTerm:
    """``pr(X_s=0 | num_prefix) / pr(X_s=0 | den_prefix)``, clamped to 1."""
    return _ratio(data, s, 0, num_prefix, den_prefix, graph, smoothing)


@dataclass(frozen=True, eq=False)
class CrossWorldDist:
    """``pr{D_k(a_k, x_k') = d* | x}`` over the partial-order cone."""

    x: CauseVector
    k: int
    xk_prime: int
    probs: dict[CauseVector, float]
    terms: tuple[RatioTerm, ...] = field(default=())

    def prob(self, d_star: Sequence[int]) -> float:
        return self.probs.get(tuple(int(v) for v in d_star), 0.0)

    def items(self):
        return self.probs.items()

    @property
    def clamped_terms(self) -> tuple[RatioTerm, ...]:
        return tuple(t for t in self.terms if t.clamped)

    def total(self) -> float:
        return float(sum(self.probs.values()))


def cross_world_dist(data: Dataset, x: Sequence[int], k: int, xk_prime: int,
                     graph: Optional[CausalGraph] = None,
                     smoothing: float = 0.0) -> CrossWorldDist:
    """Distribution of the downstream causes when ``X_k`` is switched to ``xk_prime``.

    Suffixes whose running product hits zero are not expanded further, so
    ratio terms (and their positivity requirements) are only evaluated on
    reachable branches.
    """
    x = as_cause_vector(x, data.p)
    p = data.p
    if not 0 <= k < p:
        raise ValueError(f"cause index {k} out of range for p={p}")
    if xk_prime not in (0, 1):
        raise ValueError("xk_prime must be 0 or 1")
    d = x[k + 1:]
    _check_suffix(d)
    if xk_prime == x[k]:
        return CrossWorldDist(x, k, xk_prime, {tuple(d): 1.0})

    down = x[k] == 1  # switching 1 -> 0 pushes descendants down
    cone = enumerate_leq(d) if down else enumerate_geq(d)
    probs = dict.fromkeys(cone, 0.0)
    terms: list[RatioTerm] = []
    base = list(x[:k]) + [xk_prime]

    def expand(chosen: list[int], mass: float) -> None:
        s = k + 1 + len(chosen)
        if s == p:
            probs[tuple(chosen)] = mass
            return
        xs = x[s]
        if (down and xs == 0) or (not down and xs == 1):
            # the observed value is already extreme in the switching direction
            expand(chosen + [xs], mass)
            return
        star_prefix = base + chosen
        if down:
            term = ratio_r0(data, s, star_prefix, x[:s], graph, smoothing)
        else:
            term = ratio_r1(data, s, star_prefix, x[:s], graph, smoothing)
        terms.append(term)
        if term.clamped:
            warnings.warn(
                f"{term.kind} for {data.cause_names[s]} estimated at {term.raw:.4g} > 1; "
                "clamped to 1 (possible monotonicity violation)",
                RatioClampWarning, stacklevel=3)
        # keep the observed value with prob R, move to the other value with 1 - R
        stay, move = term.value, 1.0 - term.value
        for val, w in ((xs, stay), (1 - xs, move)):
            if w > 0:
                expand(chosen + [val], mass * w)

    expand([], 1.0)
    return CrossWorldDist(x, k, xk_prime, probs, tuple(terms))


# ---------------------------------------------------------------------------
# Falsification of monotonicity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairComparison:
    s: int
    lower: Key
    upper: Key
    p_lower: float
    p_upper: float
    diff: float
    se: float
    z: float


@dataclass(frozen=True)
class MonotonicityReport:
    comparisons: tuple[PairComparison, ...]
    skipped_cells: int
    z_crit: float

    @property
    def violations(self) -> tuple[PairComparison, ...]:
        """Comparable pairs whose frequency difference is negative."""
        return tuple(c for c in self.comparisons if c.diff < 0)

    @property
    def flagged(self) -> tuple[PairComparison, ...]:
        return tuple(c for c in self.comparisons if c.z < -self.z_crit)


def falsify_monotonicity(data: Dataset, graph: Optional[CausalGraph] = None,
                         n_boot: int = 200, seed: int = 0, min_count: int = 20,
                         z_crit: float = 3.0) -> MonotonicityReport:
    """Compare ``pr(X_s=1 | w)`` across comparable conditioning patterns.

    For every cause ``s`` and every pair ``w* <= w`` of conditioning patterns
    (all earlier causes, or the parents of ``X_s`` with a graph) the
    difference ``pr(X_s=1|w) - pr(X_s=1|w*)`` should be nonnegative. Standard
    errors come from a bootstrap that resamples rows within each
    conditioning pattern. Patterns with fewer than ``min_count`` rows are
    skipped.
    """
    rng = np.random.default_rng(seed)
    comparisons: list[PairComparison] = []
    skipped = 0
    for s in range(data.p):
        cond = tuple(range(s)) if graph is None else graph.parents[s]
        if not cond:
            continue
        cells = {}
        for w in itertools.product((0, 1), repeat=len(cond)):
            key = tuple(zip(cond, w))
            mask = key_mask(data, key)
            n_w = int(mask.sum())
            if n_w < min_count:
                skipped += 1
                continue
            p_w = float(data.X[mask, s].mean())
            boot = rng.binomial(n_w, p_w, size=n_boot) / n_w
            cells[w] = (key, p_w, boot)
        for w_lo, w_hi in itertools.permutations(cells, 2):
            if not partial_order_leq(w_lo, w_hi):
                continue
            key_lo, p_lo, b_lo = cells[w_lo]
            key_hi, p_hi, b_hi = cells[w_hi]
            diff = p_hi - p_lo
            se = float(np.std(b_hi - b_lo, ddof=1)) if n_boot > 1 else 0.0
            if se > 0:
                z = diff / se
            else:
                z = 0.0 if diff == 0 else float(np.sign(diff) * np.inf)
            comparisons.append(PairComparison(s, key_lo, key_hi, p_lo, p_hi, diff, se, z))
    comparisons.sort(key=lambda c: (c.s, c.lower, c.upper))
    return MonotonicityReport(tuple(comparisons), skipped, z_crit)
