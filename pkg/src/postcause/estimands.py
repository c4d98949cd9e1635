"""Posterior causal estimands given evidence ``(X = x, Y in E)``.

* PostICE(x')  = E(Y_{x'} - Y | x, E)
* PostTCE(k)   = E(Y_{X_k=1} - Y_{X_k=0} | x, E)
* PostNDE(k)   = E(Y_{X_k=1, D_k(a_k,0)} - Y_{X_k=0} | x, E)
* PostNIE(k)   = E(Y_{X_k=1} - Y_{X_k=1, D_k(a_k,0)} | x, E)

Nested expectations ``E(Y_{a_k, x_k*, d*} | x, E)`` average the mapped outcomes
of the evidence units; cross-world weights come from ``monotone_prob``. With
a graph, outcome strata (and therefore the evidence units) are keyed by the
outcome's parents only.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .counterfactual import CdfCache, map_values, outcome_key
from .domain import (CausalGraph, CauseVector, Dataset, Evidence, Key, OutcomeEvent,
                     PositivityError, as_cause_vector, format_key, stratum_rows)
from .monotone_prob import cross_world_dist

MEDIATION_KINDS = ("PostNDE", "PostNIE", "PostTCE")
LOW_SUPPORT = 5


class LowSupportWarning(UserWarning):
    """The evidence stratum holds very few units."""


@dataclass(frozen=True)
class EstimandResult:
    kind: str
    evidence: Evidence
    target: Union[CauseVector, int]
    estimate: float
    n_evidence: int
    se: Optional[float] = None
    ci: Optional[tuple[float, float]] = None


@dataclass(frozen=True)
class NestedExpectation:
    evidence: Evidence
    k: int
    xk_star: int
    d_star: CauseVector
    value: float


class _Context:
    """Shared intermediates for one dataset, graph and mapping method."""

    def __init__(self, data: Dataset, graph: Optional[CausalGraph], method: str,
                 smoothing: float = 0.0):
        if graph is not None and graph.p != data.p:
            raise ValueError(f"graph has {graph.p} causes but data has {data.p}")
        self.data = data
        self.graph = graph
        self.method = method
        self.smoothing = smoothing
        self.cache = CdfCache(data)
        self._evidence: dict = {}
        self._nested: dict = {}

    def evidence_outcomes(self, source: Key, event: OutcomeEvent) -> np.ndarray:
        ev = self._evidence.get((source, event))
        if ev is None:
            rows = stratum_rows(self.data, source, event).rows
            if rows.size == 0:
                raise PositivityError(
                    f"evidence stratum {format_key(source, self.data.cause_names)} "
                    f"with {event} is empty", cell=source)
            if rows.size < LOW_SUPPORT:
                warnings.warn(
                    f"evidence stratum {format_key(source, self.data.cause_names)} "
                    f"with {event} has only {rows.size} units", LowSupportWarning,
                    stacklevel=4)
            ev = self.data.y[rows]
            self._evidence[(source, event)] = ev
        return ev

    def mean_mapped(self, source: Key, event: OutcomeEvent, target: Key) -> float:
        """Mean of the mapped outcomes of the evidence units."""
        memo = (source, event, target)
        val = self._nested.get(memo)
        if val is None:
            y = self.evidence_outcomes(source, event)
            val = float(np.mean(map_values(self.cache, source, target, y, self.method)))
            self._nested[memo] = val
        return val

    def nested(self, evidence: Evidence, k: int, xk_star: int, d_star: Sequence[int]) -> float:
        x = evidence.x
        target = tuple(x[:k]) + (int(xk_star),) + tuple(int(v) for v in d_star)
        return self.mean_mapped(outcome_key(x, self.graph), evidence.event,
                                outcome_key(target, self.graph))

    def post_ice(self, evidence: Evidence, x_prime: CauseVector) -> float:
        src = outcome_key(evidence.x, self.graph)
        y = self.evidence_outcomes(src, evidence.event)
        phi = map_values(self.cache, src, outcome_key(x_prime, self.graph), y, self.method)
        return float(np.mean(phi - y))

    def mediation(self, evidence: Evidence, k: int) -> tuple[float, float, float]:
        x = evidence.x
        if not 0 <= k < len(x):
            raise ValueError(f"cause index {k} out of range for p={len(x)}")
        d_obs = x[k + 1:]
        own = self.nested(evidence, k, x[k], d_obs)  # E(Y | x, E)
        if x[k] == 1:
            dist = cross_world_dist(self.data, x, k, 0, self.graph, self.smoothing)
            nde = nie = tce = 0.0
            for d_star, w in dist.items():
                if w == 0:
                    continue
                ne1 = self.nested(evidence, k, 1, d_star)
                ne0 = self.nested(evidence, k, 0, d_star)
                nde += w * (ne1 - ne0)
                nie += w * (own - ne1)
                tce += w * (own - ne0)
        else:
            dist = cross_world_dist(self.data, x, k, 1, self.graph, self.smoothing)
            ne1_obs = self.nested(evidence, k, 1, d_obs)
            nde = ne1_obs - own
            nie = tce = 0.0
            for d_star, w in dist.items():
                if w == 0:
                    continue
                ne1 = self.nested(evidence, k, 1, d_star)
                nie += w * (ne1 - ne1_obs)
                tce += w * (ne1 - own)
        return nde, nie, tce

    def n_evidence(self, evidence: Evidence) -> int:
        return int(self.evidence_outcomes(outcome_key(evidence.x, self.graph),
                                          evidence.event).size)


def _evidence(data: Dataset, evidence) -> Evidence:
    if not isinstance(evidence, Evidence):
        x, event = evidence
        evidence = Evidence(tuple(x), event)
    as_cause_vector(evidence.x, data.p)
    return evidence


def post_ice(data: Dataset, evidence: Evidence, x_prime: Sequence[int],
             graph: Optional[CausalGraph] = None, method: str = "plugin") -> EstimandResult:
    """Mean of ``phi_{x -> x'}(Y_i) - Y_i`` over the evidence units."""
    evidence = _evidence(data, evidence)
    x_prime = as_cause_vector(x_prime, data.p)
    ctx = _Context(data, graph, method)
    value = ctx.post_ice(evidence, x_prime)
    return EstimandResult("PostICE", evidence, x_prime, value, ctx.n_evidence(evidence))


def post_ice_keys(data: Dataset, source: Key, target: Key, event: OutcomeEvent,
                  method: str = "plugin") -> tuple[float, int]:
    """PostICE between two (partial) outcome strata; returns (estimate, n_evidence)."""
    ctx = _Context(data, None, method)
    y = ctx.evidence_outcomes(source, event)
    phi = map_values(ctx.cache, source, target, y, method)
    return float(np.mean(phi - y)), int(y.size)


def nested_expectation(data: Dataset, evidence: Evidence, k: int, xk_star: int,
                       d_star: Sequence[int], graph: Optional[CausalGraph] = None,
                       method: str = "plugin") -> NestedExpectation:
    """``E(Y_{a_k, xk_star, d_star} | x, E)`` for evidence ``x = (a_k, x_k, d_k)``."""
    evidence = _evidence(data, evidence)
    d_star = tuple(int(v) for v in d_star)
    if len(d_star) != data.p - k - 1:
        raise ValueError(f"d_star must have length {data.p - k - 1}")
    ctx = _Context(data, graph, method)
    return NestedExpectation(evidence, k, int(xk_star), d_star,
                             ctx.nested(evidence, k, xk_star, d_star))


def post_mediation(data: Dataset, evidence: Evidence, k: int,
                   graph: Optional[CausalGraph] = None, method: str = "plugin",
                   smoothing: float = 0.0) -> dict[str, EstimandResult]:
    """PostNDE, PostNIE and PostTCE of cause ``k`` (0-based) given the evidence."""
    evidence = _evidence(data, evidence)
    ctx = _Context(data, graph, method, smoothing)
    values = ctx.mediation(evidence, k)
    n_ev = ctx.n_evidence(evidence)
    return {kind: EstimandResult(kind, evidence, k, v, n_ev)
            for kind, v in zip(MEDIATION_KINDS, values)}


def attribution_matrix(data: Dataset, evidence: Evidence,
                       graph: Optional[CausalGraph] = None, method: str = "plugin",
                       smoothing: float = 0.0) -> np.ndarray:
    """Array of shape ``(p, 3)``: rows are causes, columns NDE, NIE, TCE."""
    evidence = _evidence(data, evidence)
    ctx = _Context(data, graph, method, smoothing)
    return np.array([ctx.mediation(evidence, k) for k in range(data.p)], dtype=float)


def attribution_table(data: Dataset, evidence: Evidence,
                      graph: Optional[CausalGraph] = None, method: str = "plugin",
                      smoothing: float = 0.0) -> list[EstimandResult]:
    """Mediation estimands for every cause, ordered by cause then kind."""
    evidence = _evidence(data, evidence)
    ctx = _Context(data, graph, method, smoothing)
    n_ev = ctx.n_evidence(evidence)
    out = []
    for k in range(data.p):
        for kind, v in zip(MEDIATION_KINDS, ctx.mediation(evidence, k)):
            out.append(EstimandResult(kind, evidence, k, v, n_ev))
    return out
