"""Core data model: cause vectors, outcome events, evidence, graphs and datasets.

Cause indices are 0-based throughout the Python API. Causes are assumed to be
listed in a topological order, so a cause can only be affected by causes with
a smaller index.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

CauseVector = tuple[int, ...]
# Partial assignment over causes: sorted ((index, value), ...) pairs.
Key = tuple[tuple[int, int], ...]

MAX_SUFFIX = 20


class PositivityError(RuntimeError):
    """A conditioning stratum needed by an estimator is empty."""

    def __init__(self, message: str, cell: Optional[Key] = None):
        super().__init__(message)
        self.cell = cell


def as_cause_vector(bits: Iterable, p: Optional[int] = None) -> CauseVector:
    vec = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in vec):
        raise ValueError(f"cause vector must be binary, got {vec}")
    if p is not None and len(vec) != p:
        raise ValueError(f"cause vector has length {len(vec)}, expected {p}")
    return vec


def partial_order_leq(a: Sequence[int], b: Sequence[int]) -> bool:
    """Componentwise order: True iff a[i] <= b[i] for every i."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return all(ai <= bi for ai, bi in zip(a, b))


def _check_suffix(d: Sequence[int]) -> None:
    if len(d) > MAX_SUFFIX:
        raise ValueError(
            f"suffix of length {len(d)} exceeds the enumeration limit {MAX_SUFFIX}")


def enumerate_leq(d: Sequence[int]) -> list[CauseVector]:
    """All vectors below ``d`` in the componentwise order, lexicographically."""
    _check_suffix(d)
    return [tuple(v) for v in itertools.product(*(range(int(b) + 1) for b in d))]


def enumerate_geq(d: Sequence[int]) -> list[CauseVector]:
    """All vectors above ``d`` in the componentwise order, lexicographically."""
    _check_suffix(d)
    return [tuple(v) for v in itertools.product(*(range(int(b), 2) for b in d))]


def make_key(indices: Iterable[int], values: Sequence[int]) -> Key:
    """Partial assignment restricting ``values`` (a full vector) to ``indices``."""
    return tuple(sorted((int(i), int(values[i])) for i in indices))


def full_key(x: Sequence[int]) -> Key:
    return tuple((i, int(v)) for i, v in enumerate(x))


def format_key(key: Key, names: Optional[Sequence[str]] = None) -> str:
    if not key:
        return "()"
    label = (lambda i: names[i]) if names is not None else (lambda i: f"X{i + 1}")
    return ",".join(f"{label(i)}={v}" for i, v in key)


# ---------------------------------------------------------------------------
# Outcome events
# ---------------------------------------------------------------------------

class Interval(NamedTuple):
    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and not (self.lo_closed and self.hi_closed)

    def contains(self, y):
        y = np.asarray(y, dtype=float)
        left = y >= self.lo if self.lo_closed else y > self.lo
        right = y <= self.hi if self.hi_closed else y < self.hi
        return left & right

    def __str__(self) -> str:
        if math.isinf(self.lo) and math.isinf(self.hi):
            return "Y in R"
        if math.isinf(self.lo):
            return f"Y {'<=' if self.hi_closed else '<'} {self.hi:g}"
        if math.isinf(self.hi):
            return f"Y {'>=' if self.lo_closed else '>'} {self.lo:g}"
        return (f"{self.lo:g} {'<=' if self.lo_closed else '<'} Y "
                f"{'<=' if self.hi_closed else '<'} {self.hi:g}")


@dataclass(frozen=True)
class OutcomeEvent:
    """Finite union of disjoint, sorted intervals on the outcome scale.

    The constructor normalizes its input: empty pieces are dropped and
    overlapping or touching pieces are merged.
    """

    intervals: tuple[Interval, ...]

    def __post_init__(self):
        pieces = []
        for iv in self.intervals:
            iv = Interval(float(iv[0]), float(iv[1]), bool(iv[2]), bool(iv[3]))
            if not iv.is_empty():
                pieces.append(iv)
        if not pieces:
            raise ValueError("outcome event is empty")
        # closed lower ends sort first so they absorb open ones at the same point
        pieces.sort(key=lambda iv: (iv.lo, not iv.lo_closed))
        merged = [pieces[0]]
        for iv in pieces[1:]:
            cur = merged[-1]
            touches = iv.lo < cur.hi or (iv.lo == cur.hi and (cur.hi_closed or iv.lo_closed))
            if touches:
                if iv.hi > cur.hi:
                    hi, hi_closed = iv.hi, iv.hi_closed
                elif iv.hi == cur.hi:
                    hi, hi_closed = cur.hi, cur.hi_closed or iv.hi_closed
                else:
                    hi, hi_closed = cur.hi, cur.hi_closed
                merged[-1] = Interval(cur.lo, hi, cur.lo_closed, hi_closed)
            else:
                merged.append(iv)
        object.__setattr__(self, "intervals", tuple(merged))

    @classmethod
    def above(cls, c: float, closed: bool = False) -> "OutcomeEvent":
        return cls((Interval(c, math.inf, closed, False),))

    @classmethod
    def below(cls, c: float, closed: bool = False) -> "OutcomeEvent":
        return cls((Interval(-math.inf, c, False, closed),))

    @classmethod
    def everything(cls) -> "OutcomeEvent":
        return cls((Interval(-math.inf, math.inf),))

    def contains(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape, dtype=bool)
        for iv in self.intervals:
            out |= iv.contains(y)
        return out

    def __str__(self) -> str:
        return " or ".join(str(iv) for iv in self.intervals)


@dataclass(frozen=True)
class Evidence:
    x: CauseVector
    event: OutcomeEvent

    def __post_init__(self):
        object.__setattr__(self, "x", as_cause_vector(self.x))


# ---------------------------------------------------------------------------
# Causal graph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CausalGraph:
    """DAG over causes in topological order plus the outcome's parent set."""

    p: int
    parents: tuple[tuple[int, ...], ...]
    outcome_parents: tuple[int, ...]

    def __post_init__(self):
        parents = tuple(tuple(sorted(int(j) for j in pa)) for pa in self.parents)
        outcome_parents = tuple(sorted(int(j) for j in self.outcome_parents))
        if len(parents) != self.p:
            raise ValueError(f"expected {self.p} parent sets, got {len(parents)}")
        for k, pa in enumerate(parents):
            if len(set(pa)) != len(pa) or any(j < 0 or j >= k for j in pa):
                raise ValueError(
                    f"parents of cause {k} must be distinct indices below {k}: {pa}")
        if len(set(outcome_parents)) != len(outcome_parents) or any(
                j < 0 or j >= self.p for j in outcome_parents):
            raise ValueError(f"invalid outcome parents {outcome_parents}")
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "outcome_parents", outcome_parents)

    @classmethod
    def full(cls, p: int) -> "CausalGraph":
        """Default graph: every cause depends on all earlier causes."""
        return cls(p, tuple(tuple(range(k)) for k in range(p)), tuple(range(p)))

    def descendants(self, k: int) -> set[int]:
        out: set[int] = set()
        for s in range(k + 1, self.p):
            if k in self.parents[s] or out.intersection(self.parents[s]):
                out.add(s)
        return out

    def outcome_ancestors(self) -> set[int]:
        """Causes with a directed path to the outcome."""
        out = set(self.outcome_parents)
        for s in reversed(range(self.p)):
            if s in out:
                out.update(self.parents[s])
        return out


# ---------------------------------------------------------------------------
# Dataset and strata
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Dataset:
    """n observations of p binary causes and one real outcome."""

    X: np.ndarray
    y: np.ndarray
    cause_names: tuple[str, ...] = ()
    outcome_name: str = "Y"
    _codes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=np.int8, copy=True)
        y = np.array(self.y, dtype=float, copy=True).reshape(-1)
        if X.ndim != 2:
            raise ValueError("X must be a 2-d array")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if X.shape[0] < 1:
            raise ValueError("dataset is empty")
        if not np.isin(X, (0, 1)).all():
            raise ValueError("causes must be binary")
        if not np.isfinite(y).all():
            raise ValueError("outcome must be finite")
        names = tuple(self.cause_names) or tuple(f"X{k + 1}" for k in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ValueError("cause_names does not match the number of columns")
        X.flags.writeable = False
        y.flags.writeable = False
        codes = X.astype(np.int64) @ (1 << np.arange(X.shape[1])[::-1]).astype(np.int64)
        codes.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "cause_names", names)
        object.__setattr__(self, "_codes", codes)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def pattern_codes(self) -> np.ndarray:
        """Integer code of each row's cause pattern (first cause = high bit)."""
        return self._codes

    def take(self, rows: np.ndarray) -> "Dataset":
        return Dataset(self.X[rows], self.y[rows], self.cause_names, self.outcome_name)


@dataclass(frozen=True, eq=False)
class Stratum:
    key: Key
    rows: np.ndarray

    @property
    def size(self) -> int:
        return int(self.rows.size)


def key_mask(data: Dataset, key: Key) -> np.ndarray:
    mask = np.ones(data.n, dtype=bool)
    for i, v in key:
        if not 0 <= i < data.p:
            raise ValueError(f"cause index {i} out of range for p={data.p}")
        mask &= data.X[:, i] == v
    return mask


def stratum_rows(data: Dataset, key: Key,
                 event: Optional[OutcomeEvent] = None) -> Stratum:
    """Rows matching ``key`` on every keyed cause (and lying in ``event``)."""
    mask = key_mask(data, key)
    if event is not None:
        mask &= event.contains(data.y)
    return Stratum(key, np.flatnonzero(mask))
