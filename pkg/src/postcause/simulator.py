"""Structural causal model workbench and brute-force oracle.

Causes follow ``X_k = 1{U_k <= pr(X_k = 1 | parents)}`` with one uniform
noise per cause shared across all interventions, so monotone conditional
probability tables give unit-level monotone responses. The outcome is
``Y = mean[pa_y] + scale[pa_y] * eps`` with a single shared ``eps``.

Ground truth is computed directly from the potential outcomes of simulated
units. Nothing here uses the identification formulas of the estimators.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .domain import CausalGraph, Dataset, Evidence, as_cause_vector

NOISES = ("normal", "uniform", "exponential")
KINDS = ("PostICE", "PostTCE", "PostNDE", "PostNIE")
MIN_EVIDENCE_PROB = 1e-4


def _pattern_index(values: np.ndarray) -> np.ndarray:
    """Row-wise binary code of a (n, m) 0/1 array, first column = high bit."""
    m = values.shape[1]
    if m == 0:
        return np.zeros(values.shape[0], dtype=np.int64)
    weights = (1 << np.arange(m)[::-1]).astype(np.int64)
    return values.astype(np.int64) @ weights


@dataclass(frozen=True)
class ScmSpec:
    """Binary causes with monotone CPTs and a rank-preserving outcome.

    ``probs[k]`` lists ``pr(X_k = 1 | parents)`` for the parent patterns in
    lexicographic order (first listed parent is the most significant bit).
    ``mean`` and ``scale`` are indexed the same way by the outcome parents.
    """

    names: tuple[str, ...]
    parents: tuple[tuple[int, ...], ...]
    probs: tuple[tuple[float, ...], ...]
    outcome_parents: tuple[int, ...]
    mean: tuple[float, ...]
    scale: tuple[float, ...] = ()
    noise: str = "normal"
    outcome_name: str = "Y"

    def __post_init__(self):
        p = len(self.names)
        parents = tuple(tuple(int(j) for j in pa) for pa in self.parents)
        probs = tuple(tuple(float(v) for v in row) for row in self.probs)
        opa = tuple(int(j) for j in self.outcome_parents)
        mean = tuple(float(v) for v in self.mean)
        scale = tuple(float(v) for v in self.scale) or (1.0,) * len(mean)
        if len(parents) != p or len(probs) != p:
            raise ValueError("names, parents and probs must have one entry per cause")
        for k, (pa, row) in enumerate(zip(parents, probs)):
            if list(pa) != sorted(set(pa)) or any(j >= k or j < 0 for j in pa):
                raise ValueError(f"parents of {self.names[k]} must be sorted earlier causes")
            if len(row) != 2 ** len(pa):
                raise ValueError(f"{self.names[k]} needs {2 ** len(pa)} probabilities")
            if any(not 0.0 <= v <= 1.0 for v in row):
                raise ValueError(f"probabilities of {self.names[k]} must lie in [0, 1]")
            for j in range(len(pa)):
                bit = 1 << (len(pa) - 1 - j)
                for idx in range(len(row)):
                    if not idx & bit and row[idx] > row[idx | bit]:
                        raise ValueError(
                            f"CPT of {self.names[k]} decreases in parent "
                            f"{self.names[pa[j]]}; monotonicity is required")
        if list(opa) != sorted(set(opa)) or any(j < 0 or j >= p for j in opa):
            raise ValueError("outcome parents must be sorted cause indices")
        if len(mean) != 2 ** len(opa) or len(scale) != len(mean):
            raise ValueError(f"mean and scale need {2 ** len(opa)} entries")
        if any(not math.isfinite(v) for v in mean):
            raise ValueError("outcome means must be finite")
        if any(not (v > 0 and math.isfinite(v)) for v in scale):
            raise ValueError("outcome scales must be positive")
        if self.noise not in NOISES:
            raise ValueError(f"noise must be one of {NOISES}")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "parents", parents)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "outcome_parents", opa)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)

    @property
    def p(self) -> int:
        return len(self.names)

    @property
    def graph(self) -> CausalGraph:
        return CausalGraph(self.p, self.parents, self.outcome_parents)

    def cause_prob(self, k: int, X: np.ndarray) -> np.ndarray:
        """``pr(X_k = 1 | parents)`` evaluated on the rows of ``X``."""
        idx = _pattern_index(X[:, list(self.parents[k])])
        return np.asarray(self.probs[k])[idx]

    def outcome(self, X: np.ndarray, eps: np.ndarray) -> np.ndarray:
        idx = _pattern_index(X[:, list(self.outcome_parents)])
        return np.asarray(self.mean)[idx] + np.asarray(self.scale)[idx] * eps

    def draw_noise(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.noise == "normal":
            return rng.standard_normal(n)
        if self.noise == "uniform":
            return rng.uniform(0.0, 1.0, n)
        return rng.exponential(1.0, n)

    def to_dict(self) -> dict:
        return {
            "causes": [
                {"name": name, "parents": [self.names[j] for j in pa], "prob": list(row)}
                for name, pa, row in zip(self.names, self.parents, self.probs)
            ],
            "outcome": {
                "name": self.outcome_name,
                "parents": [self.names[j] for j in self.outcome_parents],
                "mean": list(self.mean),
                "scale": list(self.scale),
                "noise": self.noise,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScmSpec":
        try:
            causes = d["causes"]
            names = [str(c["name"]) for c in causes]
            index = {name: i for i, name in enumerate(names)}
            if len(index) != len(names):
                raise ValueError("duplicate cause names")
            parents = [tuple(sorted(index[str(j)] for j in c.get("parents", []) or []))
                       for c in causes]
            # probs are given in the order parents are listed; reorder if needed
            probs = []
            for c, pa in zip(causes, parents):
                listed = [index[str(j)] for j in c.get("parents", []) or []]
                row = [float(v) for v in c["prob"]]
                probs.append(_reorder(row, listed, list(pa)))
            out = d["outcome"]
            listed = [index[str(j)] for j in out.get("parents", []) or []]
            opa = sorted(listed)
            mean = _reorder([float(v) for v in out["mean"]], listed, opa)
            scale = out.get("scale")
            scale = _reorder([float(v) for v in scale], listed, opa) if scale else ()
            return cls(tuple(names), tuple(parents), tuple(probs), tuple(opa), tuple(mean),
                       tuple(scale), str(out.get("noise", "normal")),
                       str(out.get("name", "Y")))
        except KeyError as exc:
            raise ValueError(f"unknown or missing field {exc} in model spec") from None


def _reorder(row: list, listed: list, target: list) -> list:
    """Re-index a pattern table from ``listed`` parent order to ``target`` order."""
    if listed == target:
        return row
    if len(row) != 2 ** len(listed):
        raise ValueError(f"table needs {2 ** len(listed)} entries, got {len(row)}")
    out = [0.0] * len(row)
    for bits in itertools.product((0, 1), repeat=len(target)):
        value = dict(zip(target, bits))
        src = 0
        for j in listed:
            src = (src << 1) | value[j]
        dst = 0
        for b in bits:
            dst = (dst << 1) | b
        out[dst] = row[src]
    return out


@dataclass(eq=False)
class PotentialOutcomeTable:
    """Exogenous noises of simulated units plus their factual values."""

    spec: ScmSpec
    U: np.ndarray
    eps: np.ndarray
    X: np.ndarray
    y: np.ndarray
    _outcomes: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.U.shape[0]

    def causes_under(self, fixed: dict[int, int], rows=None) -> np.ndarray:
        """Cause values when the causes in ``fixed`` are set by intervention."""
        U = self.U if rows is None else self.U[rows]
        X = np.zeros(U.shape, dtype=np.int8)
        for k in range(self.spec.p):
            if k in fixed:
                X[:, k] = fixed[k]
            else:
                X[:, k] = U[:, k] <= self.spec.cause_prob(k, X)
        return X

    def outcome_under(self, X: np.ndarray, rows=None) -> np.ndarray:
        eps = self.eps if rows is None else self.eps[rows]
        return self.spec.outcome(X, eps)

    def outcomes_by_parent_pattern(self) -> np.ndarray:
        """``Y`` under every outcome-parent pattern, shape (n, 2^|pa_y|)."""
        if self._outcomes is None:
            spec = self.spec
            self._outcomes = (np.asarray(spec.mean)[None, :]
                              + np.asarray(spec.scale)[None, :] * self.eps[:, None])
        return self._outcomes


def _simulate(spec: ScmSpec, n: int, rng: np.random.Generator) -> PotentialOutcomeTable:
    if n < 1:
        raise ValueError("n must be positive")
    U = rng.uniform(0.0, 1.0, size=(n, spec.p))
    eps = spec.draw_noise(rng, n)
    table = PotentialOutcomeTable(spec, U, eps, np.empty((n, spec.p), np.int8), np.empty(n))
    table.X = table.causes_under({})
    table.y = table.outcome_under(table.X)
    return table


def generate(spec: ScmSpec, n: int, seed: int = 0) -> tuple[Dataset, PotentialOutcomeTable]:
    """Draw ``n`` units; returns the observed dataset and the potential outcomes."""
    table = _simulate(spec, n, np.random.default_rng(seed))
    data = Dataset(table.X, table.y, spec.names, spec.outcome_name)
    return data, table


class OracleValue(NamedTuple):
    value: float
    mc_se: float
    n_evidence: int


def _unit_effects(table: PotentialOutcomeTable, rows: np.ndarray, kind: str,
                  x: tuple, target) -> np.ndarray:
    if kind == "PostICE":
        x_prime = np.asarray(as_cause_vector(target, table.spec.p), dtype=np.int8)
        Xp = np.broadcast_to(x_prime, (rows.size, x_prime.size))
        return table.outcome_under(Xp, rows) - table.y[rows]
    k = int(target)
    fixed = {j: x[j] for j in range(k)}
    y1 = table.outcome_under(table.causes_under({**fixed, k: 1}, rows), rows)
    y0 = table.outcome_under(table.causes_under({**fixed, k: 0}, rows), rows)
    d0 = table.causes_under({**fixed, k: 0}, rows)
    cross = d0.copy()
    cross[:, k] = 1
    y_cross = table.outcome_under(cross, rows)
    if kind == "PostTCE":
        return y1 - y0
    if kind == "PostNDE":
        return y_cross - y0
    return y1 - y_cross


def true_estimand_with_se(spec: ScmSpec, kind: str, evidence: Evidence, target,
                          mc_draws: int = 1_000_000, seed: int = 0,
                          chunk: int = 250_000) -> OracleValue:
    """Monte-Carlo value of a posterior estimand from simulated potential outcomes."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    x = as_cause_vector(evidence.x, spec.p)
    if kind != "PostICE" and not 0 <= int(target) < spec.p:
        raise ValueError(f"cause index {target} out of range")
    seqs = np.random.SeedSequence(seed).spawn(max(1, math.ceil(mc_draws / chunk)))
    effects = []
    drawn = 0
    for seq in seqs:
        m = min(chunk, mc_draws - drawn)
        drawn += m
        table = _simulate(spec, m, np.random.default_rng(seq))
        rows = np.flatnonzero((table.X == np.asarray(x)).all(axis=1)
                              & evidence.event.contains(table.y))
        if rows.size:
            effects.append(_unit_effects(table, rows, kind, x, target))
    n_ev = sum(e.size for e in effects)
    if n_ev / mc_draws < MIN_EVIDENCE_PROB or n_ev < 2:
        raise ValueError(
            f"evidence probability {n_ev / mc_draws:.2e} is too small for a reliable oracle")
    values = np.concatenate(effects)
    value = math.fsum(values.tolist()) / n_ev
    return OracleValue(value, float(np.std(values, ddof=1) / math.sqrt(n_ev)), n_ev)


def true_estimand(spec: ScmSpec, kind: str, evidence: Evidence, target,
                  mc_draws: int = 1_000_000, seed: int = 0) -> float:
    return true_estimand_with_se(spec, kind, evidence, target, mc_draws, seed).value


# ---------------------------------------------------------------------------
# Demo models
# ---------------------------------------------------------------------------

def hypertension_like() -> ScmSpec:
    # order E, D, Hb, HD, CP; blood pressure depends on E and HD only
    return ScmSpec(
        names=("E", "D", "Hb", "HD", "CP"),
        parents=((), (), (1,), (0, 1), (2, 3)),
        probs=((0.45,), (0.5,), (0.2, 0.55), (0.15, 0.35, 0.4, 0.65), (0.1, 0.5, 0.45, 0.85)),
        outcome_parents=(0, 3),
        mean=(122.0, 134.0, 127.0, 141.0),
        scale=(9.0, 11.0, 9.5, 12.0),
        outcome_name="BP",
    )


def ntp_like() -> ScmSpec:
    # gender, dose, pathology; dose acts on weight only through pathology
    return ScmSpec(
        names=("Gender", "Dose", "Pathology"),
        parents=((), (), (0, 1)),
        probs=((0.5,), (0.5,), (0.15, 0.45, 0.3, 0.7)),
        outcome_parents=(0, 2),
        mean=(29.0, 25.0, 36.0, 30.0),
        scale=(2.0, 2.5, 2.5, 3.0),
        outcome_name="Weight",
    )


def chain_mediation() -> ScmSpec:
    return ScmSpec(
        names=("X1", "X2"),
        parents=((), (0,)),
        probs=((0.5,), (0.3, 0.75)),
        outcome_parents=(0, 1),
        mean=(0.0, 1.5, 1.0, 3.0),
        scale=(1.0, 1.2, 1.0, 1.3),
    )


def null_model() -> ScmSpec:
    return ScmSpec(
        names=("X1", "X2"),
        parents=((), (0,)),
        probs=((0.5,), (0.4, 0.6)),
        outcome_parents=(0, 1),
        mean=(0.0, 0.0, 0.0, 0.0),
    )


def location_shift(shift: float = 2.0, prob: float = 0.5) -> ScmSpec:
    """One cause; switching it on adds exactly ``shift`` to every unit."""
    return ScmSpec(names=("X1",), parents=((),), probs=((prob,),), outcome_parents=(0,),
                   mean=(0.0, float(shift)))


DEMO_SPECS = {
    "hypertension-like": hypertension_like,
    "ntp-like": ntp_like,
    "chain-mediation": chain_mediation,
    "null": null_model,
    "location-shift": location_shift,
}


def demo_spec(name: str) -> ScmSpec:
    try:
        return DEMO_SPECS[name]()
    except KeyError:
        raise ValueError(f"unknown demo model {name!r}; choose from {sorted(DEMO_SPECS)}") from None
