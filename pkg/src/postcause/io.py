"""CSV ingestion, outcome-event expressions and YAML configuration files."""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import yaml

from .domain import CausalGraph, Dataset, Interval, OutcomeEvent
from .simulator import DEMO_SPECS, ScmSpec, demo_spec


class ConfigError(ValueError):
    """Invalid user input: data file, config file or command-line value."""


class EventSyntaxError(ConfigError):
    def __init__(self, message: str, expr: str, position: int):
        super().__init__(f"{message} at position {position}: {expr!r}")
        self.position = position


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def load_csv(path, causes: Optional[Sequence[str]] = None, outcome: str = "Y") -> Dataset:
    """Read a dataset; ``causes`` defaults to every column except the outcome."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigError(f"{path}: file is empty, a header row is required") from None
        if outcome not in header:
            raise ConfigError(f"{path}: missing outcome column {outcome!r}")
        if causes is None:
            causes = [h for h in header if h != outcome]
        missing = [c for c in causes if c not in header]
        if missing:
            raise ConfigError(f"{path}: missing cause column(s) {', '.join(missing)}")
        if not causes:
            raise ConfigError(f"{path}: no cause columns")
        cidx = [header.index(c) for c in causes]
        yidx = header.index(outcome)
        X, y = [], []
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ConfigError(f"{path}: row {line} has {len(row)} fields, expected {len(header)}")
            bits = []
            for c, j in zip(causes, cidx):
                cell = row[j].strip()
                if cell not in ("0", "1"):
                    raise ConfigError(
                        f"{path}: row {line}, column {c!r}: cause value {cell!r} is not 0 or 1")
                bits.append(int(cell))
            cell = row[yidx].strip()
            try:
                value = float(cell)
            except ValueError:
                raise ConfigError(
                    f"{path}: row {line}, column {outcome!r}: cannot parse outcome {cell!r}") from None
            if not math.isfinite(value):
                raise ConfigError(f"{path}: row {line}, column {outcome!r}: outcome is not finite")
            X.append(bits)
            y.append(value)
    if not y:
        raise ConfigError(f"{path}: no data rows")
    return Dataset(np.array(X, dtype=np.int8), np.array(y), tuple(causes), outcome)


def write_csv(path_or_file, data: Dataset) -> None:
    """Write causes as integers and the outcome with 17 significant digits."""
    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(data.cause_names) + [data.outcome_name])
        for bits, value in zip(data.X.tolist(), data.y.tolist()):
            w.writerow(bits + [f"{value:.17g}"])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            _write(fh)


# ---------------------------------------------------------------------------
# Event expressions
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf)"
                    r"|(?P<op><=|>=|<|>)|(?P<word>[A-Za-z_][A-Za-z0-9_]*))")


def _tokenize(expr: str) -> list[tuple[str, str, int]]:
    tokens, pos = [], 0
    while pos < len(expr):
        if expr[pos:].strip() == "":
            break
        m = _TOKEN.match(expr, pos)
        if not m or m.end() == pos:
            raise EventSyntaxError("unexpected character", expr, pos)
        kind = m.lastgroup
        start = m.start(kind)
        text = m.group(kind)
        if kind == "word" and text.lower() == "or":
            kind = "or"
        tokens.append((kind, text, start))
        pos = m.end()
    return tokens


def _bound(op: str, c: float, var_left: bool) -> Interval:
    # normalize "c op Y" to "Y op' c"
    if not var_left:
        op = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}[op]
    if op == ">":
        return Interval(c, math.inf, False, False)
    if op == ">=":
        return Interval(c, math.inf, True, False)
    if op == "<":
        return Interval(-math.inf, c, False, False)
    return Interval(-math.inf, c, False, True)


def _intersect(a: Interval, b: Interval) -> Interval:
    if a.lo > b.lo or (a.lo == b.lo and not a.lo_closed):
        lo, lo_closed = a.lo, a.lo_closed
    else:
        lo, lo_closed = b.lo, b.lo_closed
    if a.hi < b.hi or (a.hi == b.hi and not a.hi_closed):
        hi, hi_closed = a.hi, a.hi_closed
    else:
        hi, hi_closed = b.hi, b.hi_closed
    return Interval(lo, hi, lo_closed, hi_closed)


def parse_event(expr: str) -> OutcomeEvent:
    """Parse ``Y > c``, ``Y <= c``, ``c1 < Y <= c2`` and unions joined by ``or``."""
    tokens = _tokenize(expr)
    if not tokens:
        raise EventSyntaxError("empty expression", expr, 0)
    terms: list[list[tuple[str, str, int]]] = [[]]
    for tok in tokens:
        if tok[0] == "or":
            if not terms[-1]:
                raise EventSyntaxError("'or' without a left operand", expr, tok[2])
            terms.append([])
        else:
            terms[-1].append(tok)
    if not terms[-1]:
        raise EventSyntaxError("expression ends after 'or'", expr, len(expr))

    intervals = []
    for term in terms:
        kinds = [t[0] for t in term]
        if kinds == ["word", "op", "num"]:
            iv = _bound(term[1][1], float(term[2][1]), True)
        elif kinds == ["num", "op", "word"]:
            iv = _bound(term[1][1], float(term[0][1]), False)
        elif kinds == ["num", "op", "word", "op", "num"]:
            left = _bound(term[1][1], float(term[0][1]), False)
            right = _bound(term[3][1], float(term[4][1]), True)
            if term[1][1][0] != term[3][1][0]:
                raise EventSyntaxError("chained comparison must point one way", expr, term[3][2])
            iv = _intersect(left, right)
            if iv.is_empty():
                raise ConfigError(f"event {expr!r} has contradictory bounds")
        else:
            bad = next((t for t, want in zip(term, ("word", "op", "num")) if t[0] != want), term[-1])
            raise EventSyntaxError(f"unexpected {bad[0]} {bad[1]!r}", expr, bad[2])
        intervals.append(iv)
    try:
        return OutcomeEvent(tuple(intervals))
    except ValueError as exc:
        raise ConfigError(f"event {expr!r}: {exc}") from None


# ---------------------------------------------------------------------------
# Evidence assignments
# ---------------------------------------------------------------------------

def parse_assignment(text: str, cause_names: Sequence[str], partial: bool = False) -> dict[int, int]:
    """Parse ``1,0,1``, ``101`` or ``E=1,HD=0`` into {cause index: value}."""
    text = text.strip()
    p = len(cause_names)
    if "=" in text:
        out = {}
        for part in text.split(","):
            name, _, val = part.partition("=")
            name, val = name.strip(), val.strip()
            if name not in cause_names:
                raise ConfigError(f"unknown cause {name!r} in assignment {text!r}")
            if val not in ("0", "1"):
                raise ConfigError(f"cause {name!r} must be 0 or 1 in {text!r}")
            out[list(cause_names).index(name)] = int(val)
    else:
        bits = [b.strip() for b in text.split(",")] if "," in text else list(text)
        if any(b not in ("0", "1") for b in bits):
            raise ConfigError(f"assignment {text!r} must contain only 0/1 values")
        if len(bits) != p:
            raise ConfigError(f"assignment {text!r} has {len(bits)} values, expected {p}")
        out = {k: int(b) for k, b in enumerate(bits)}
    if not partial and len(out) != p:
        raise ConfigError(f"assignment {text!r} must cover all {p} causes")
    return out


# ---------------------------------------------------------------------------
# YAML files
# ---------------------------------------------------------------------------

def _read_yaml(path) -> dict:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return doc


def graph_from_dict(doc: dict, cause_names: Sequence[str]) -> CausalGraph:
    """Graph from ``{causes: [{name, parents}], outcome_parents: [...]}``."""
    try:
        listed = [str(c["name"]) for c in doc["causes"]]
        if listed != list(cause_names):
            raise ConfigError(
                f"graph lists causes {listed}, expected {list(cause_names)} in that order")
        index = {name: i for i, name in enumerate(listed)}
        parents = []
        for c in doc["causes"]:
            pa = [str(j) for j in c.get("parents", []) or []]
            unknown = [j for j in pa if j not in index]
            if unknown:
                raise ConfigError(f"unknown parent(s) {unknown} of {c['name']}")
            parents.append(tuple(index[j] for j in pa))
        opa = [str(j) for j in doc["outcome_parents"]]
        unknown = [j for j in opa if j not in index]
        if unknown:
            raise ConfigError(f"unknown outcome parent(s) {unknown}")
        return CausalGraph(len(listed), tuple(parents), tuple(index[j] for j in opa))
    except KeyError as exc:
        raise ConfigError(f"graph spec is missing field {exc}") from None
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid graph: {exc}") from None


def graph_to_dict(graph: CausalGraph, cause_names: Sequence[str]) -> dict:
    return {
        "causes": [{"name": name, "parents": [cause_names[j] for j in pa]}
                   for name, pa in zip(cause_names, graph.parents)],
        "outcome_parents": [cause_names[j] for j in graph.outcome_parents],
    }


def load_graph(path, cause_names: Sequence[str]) -> CausalGraph:
    return graph_from_dict(_read_yaml(path), cause_names)


def load_scm_spec(name_or_path: str) -> ScmSpec:
    """A bundled demo model by name, or a YAML model file."""
    if name_or_path in DEMO_SPECS:
        return demo_spec(name_or_path)
    path = Path(name_or_path)
    if not path.exists():
        raise ConfigError(
            f"model {name_or_path!r} is neither a file nor a demo ({', '.join(sorted(DEMO_SPECS))})")
    try:
        return ScmSpec.from_dict(_read_yaml(path))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def save_scm_spec(spec: ScmSpec, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(spec.to_dict(), fh, sort_keys=False)


@dataclass
class RunConfig:
    """Settings of an estimation run, from a YAML file and/or flags."""

    data: Optional[str] = None
    causes: Optional[list[str]] = None
    outcome: str = "Y"
    graph: Optional[str] = None
    evidence: list[str] = field(default_factory=list)
    event: Optional[str] = None
    ice: bool = False
    bootstrap: int = 0
    level: float = 0.95
    seed: int = 0
    method: str = "plugin"
    format: str = "table"
    smoothing: float = 0.0

    @classmethod
    def from_yaml(cls, path) -> "RunConfig":
        doc = _read_yaml(path)
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"{path}: unknown setting(s) {sorted(unknown)}")
        cfg = cls(**doc)
        if isinstance(cfg.causes, str):
            cfg.causes = [c.strip() for c in cfg.causes.split(",")]
        if isinstance(cfg.evidence, str):
            cfg.evidence = [cfg.evidence]
        cfg.evidence = [str(e) for e in cfg.evidence]
        return cfg

    def validate(self) -> None:
        if not self.data:
            raise ConfigError("no dataset given (--data)")
        if self.method not in ("plugin", "grid"):
            raise ConfigError(f"method must be plugin or grid, got {self.method!r}")
        if self.format not in ("table", "csv", "json"):
            raise ConfigError(f"format must be table, csv or json, got {self.format!r}")
        if self.bootstrap < 0:
            raise ConfigError("bootstrap replicates must be >= 0")
        if not 0 < self.level < 1:
            raise ConfigError("level must lie in (0, 1)")
        if self.smoothing < 0:
            raise ConfigError("smoothing must be >= 0")
