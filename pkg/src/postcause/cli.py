"""Command-line interface.

Exit codes: 0 success, 1 invalid input or configuration, 2 estimation failure
(empty strata, unstable bootstrap).
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
from typing import Optional, Sequence

import numpy as np

from .counterfactual import outcome_key
from .domain import CausalGraph, Dataset, Evidence, PositivityError, format_key, stratum_rows
from .estimands import MEDIATION_KINDS, attribution_matrix, post_ice_keys
from .inference import BootstrapConfig, BootstrapError, bootstrap
from .io import (ConfigError, RunConfig, load_csv, load_graph, load_scm_spec, parse_assignment,
                 parse_event, write_csv)
from .monotone_prob import falsify_monotonicity
from .simulator import KINDS, generate, true_estimand_with_se

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and np.isnan(v)):
        return "NA"
    return f"{v:.2f}"


def render_table(title: str, row_labels, col_labels, cells) -> str:
    body = [[str(r)] + [_fmt(v) for v in row] for r, row in zip(row_labels, cells)]
    header = [""] + [str(c) for c in col_labels]
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = [title]
    for r in [header] + body:
        lines.append("  ".join(cell.rjust(w) if i else cell.ljust(w)
                               for i, (cell, w) in enumerate(zip(r, widths))))
    return "\n".join(lines)


def _full(v) -> Optional[float]:
    if v is None:
        return None
    v = float(v)
    return None if np.isnan(v) else v


def emit(records: list[dict], tables: list[str], fmt: str, out=None) -> None:
    out = out or sys.stdout
    if fmt == "table":
        out.write("\n\n".join(tables) + "\n")
    elif fmt == "json":
        json.dump(records, out, indent=2)
        out.write("\n")
    else:
        if not records:
            return
        fields = list(records[0])
        w = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for rec in records:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in rec.items()})


def _pattern_label(bits: Sequence[int]) -> str:
    return "(" + ",".join(str(b) for b in bits) + ")"


# ---------------------------------------------------------------------------
# Shared setup
# ---------------------------------------------------------------------------

def _run_config(args) -> RunConfig:
    cfg = RunConfig.from_yaml(args.config) if getattr(args, "config", None) else RunConfig()
    for name in ("data", "outcome", "graph", "event", "method", "format", "level", "seed",
                 "smoothing", "bootstrap"):
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    if getattr(args, "causes", None):
        cfg.causes = [c.strip() for c in args.causes.split(",") if c.strip()]
    if getattr(args, "evidence", None):
        cfg.evidence = list(args.evidence)
    if getattr(args, "ice", False):
        cfg.ice = True
    cfg.validate()
    return cfg


def _load(cfg: RunConfig) -> tuple[Dataset, Optional[CausalGraph]]:
    try:
        data = load_csv(cfg.data, cfg.causes, cfg.outcome)
    except FileNotFoundError:
        raise ConfigError(f"cannot read data file {cfg.data}") from None
    graph = load_graph(cfg.graph, data.cause_names) if cfg.graph else None
    return data, graph


def _require_event(cfg: RunConfig):
    if not cfg.event:
        raise ConfigError("no outcome event given (--event)")
    return parse_event(cfg.event)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _ice_rows(data: Dataset, graph: Optional[CausalGraph], evidence_keys, event, method):
    """PostICE matrix over target patterns (rows) and evidence keys (columns)."""
    idx = graph.outcome_parents if graph is not None else tuple(range(data.p))
    targets = [tuple(zip(idx, bits)) for bits in itertools.product((0, 1), repeat=len(idx))]
    if graph is None:
        present = {tuple(r) for r in np.unique(data.X, axis=0).tolist()}
        targets = [t for t in targets if tuple(v for _, v in t) in present]

    def matrix(d: Dataset) -> np.ndarray:
        out = np.full((len(targets), len(evidence_keys)), np.nan)
        for j, src in enumerate(evidence_keys):
            if stratum_rows(d, src, event).size == 0:
                continue
            for i, tgt in enumerate(targets):
                try:
                    out[i, j] = post_ice_keys(d, src, tgt, event, method)[0]
                except PositivityError:
                    pass
        return out

    return targets, matrix


def cmd_ice_table(args) -> int:
    cfg = _run_config(args)
    data, graph = _load(cfg)
    event = _require_event(cfg)
    idx = graph.outcome_parents if graph is not None else tuple(range(data.p))
    if cfg.evidence:
        keys = []
        for e in cfg.evidence:
            a = parse_assignment(e, data.cause_names, partial=graph is not None)
            missing = [data.cause_names[i] for i in idx if i not in a]
            if missing:
                raise ConfigError(f"evidence {e!r} does not fix {', '.join(missing)}")
            keys.append(tuple((i, a[i]) for i in idx))
    else:
        keys = [tuple(zip(idx, bits)) for bits in itertools.product((0, 1), repeat=len(idx))]
        keys = [k for k in keys if stratum_rows(data, k, event).size > 0]
    targets, matrix = _ice_rows(data, graph, keys, event, cfg.method)
    point = matrix(data)
    se = None
    if cfg.bootstrap:
        res = bootstrap(matrix, data, BootstrapConfig(cfg.bootstrap, cfg.seed, cfg.level))
        se = res.se
    names = data.cause_names
    col_labels = [format_key(k, names) for k in keys]
    row_labels = [format_key(t, names) for t in targets]
    tables = [render_table(f"PostICE(Y_x' | x, {event}): rows = intervention x', columns = evidence x",
                           row_labels, col_labels, point)]
    if se is not None:
        tables.append(render_table("Bootstrap standard errors", row_labels, col_labels, se))
    records = []
    for j, src in enumerate(keys):
        for i, tgt in enumerate(targets):
            rec = {"evidence": format_key(src, names), "event": str(event),
                   "intervention": format_key(tgt, names), "estimate": _full(point[i, j])}
            if se is not None:
                rec["se"] = _full(se[i, j])
            records.append(rec)
    emit(records, tables, cfg.format)
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = _run_config(args)
    data, graph = _load(cfg)
    event = _require_event(cfg)
    if not cfg.evidence:
        raise ConfigError("no evidence given (--evidence)")
    names = data.cause_names
    tables, records = [], []
    for e in cfg.evidence:
        a = parse_assignment(e, names)
        x = tuple(a[k] for k in range(data.p))
        evidence = Evidence(x, event)

        def stat(d, evidence=evidence):
            return attribution_matrix(d, evidence, graph, cfg.method, cfg.smoothing)

        n_ev = stratum_rows(data, outcome_key(x, graph), event).size
        if cfg.bootstrap:
            res = bootstrap(stat, data, BootstrapConfig(cfg.bootstrap, cfg.seed, cfg.level))
            point, se, lo, hi = res.point, res.se, res.ci_low, res.ci_high
        else:
            point = stat(data)
            se = lo = hi = None
        title = f"Posterior causal estimands given X={_pattern_label(x)}, {event} (n_evidence={n_ev})"
        tables.append(render_table(title, MEDIATION_KINDS, names, point.T))
        if se is not None:
            tables.append(render_table(f"Bootstrap SE ({cfg.bootstrap} replicates)",
                                       MEDIATION_KINDS, names, se.T))
        for k in range(data.p):
            for j, kind in enumerate(MEDIATION_KINDS):
                rec = {"evidence": _pattern_label(x), "event": str(event), "kind": kind,
                       "cause": names[k], "estimate": float(point[k, j]), "n_evidence": int(n_ev)}
                if se is not None:
                    rec.update(se=float(se[k, j]), ci_low=float(lo[k, j]), ci_high=float(hi[k, j]),
                               level=cfg.level)
                records.append(rec)
        if cfg.ice:
            src = outcome_key(x, graph)
            targets, matrix = _ice_rows(data, graph, [src], event, cfg.method)
            col = matrix(data)[:, 0]
            tables.append(render_table(f"PostICE given X={_pattern_label(x)}, {event}",
                                       [format_key(t, names) for t in targets], ["PostICE"],
                                       col[:, None]))
            for t, v in zip(targets, col):
                records.append({"evidence": _pattern_label(x), "event": str(event),
                                "kind": "PostICE", "cause": format_key(t, names),
                                "estimate": _full(v), "n_evidence": int(n_ev)})
    emit(records, tables, cfg.format)
    return EXIT_OK


def cmd_check_monotonicity(args) -> int:
    cfg = _run_config(args)
    data, graph = _load(cfg)
    report = falsify_monotonicity(data, graph, n_boot=args.replicates, seed=cfg.seed,
                                  min_count=args.min_count, z_crit=args.z)
    rows = report.comparisons if args.all else report.violations
    names = data.cause_names
    records = [{"cause": names[c.s], "lower": format_key(c.lower, names),
                "upper": format_key(c.upper, names), "p_lower": c.p_lower, "p_upper": c.p_upper,
                "diff": c.diff, "se": c.se, "z": c.z, "flagged": c.z < -args.z} for c in rows]
    lines = [f"Monotonicity check: {len(report.comparisons)} comparable pairs, "
             f"{len(report.violations)} negative differences, {len(report.flagged)} flagged "
             f"(z < -{args.z:g}); {report.skipped_cells} sparse cells skipped"]
    for r in records:
        lines.append(f"  {r['cause']}: pr(=1|{r['lower']})={r['p_lower']:.3f} > "
                     f"pr(=1|{r['upper']})={r['p_upper']:.3f}  diff={r['diff']:.3f} "
                     f"z={r['z']:.2f}{'  FLAG' if r['flagged'] else ''}")
    emit(records, ["\n".join(lines)], cfg.format)
    return EXIT_OK


def _oracle_records(spec, evidence_texts, event, draws, seed, kind=None, target=None):
    names = spec.names
    records, tables = [], []
    for e in evidence_texts:
        a = parse_assignment(e, names)
        x = tuple(a[k] for k in range(spec.p))
        evidence = Evidence(x, event)
        if kind == "PostICE":
            if target is None:
                raise ConfigError("PostICE needs --target (an intervention pattern)")
            t = parse_assignment(target, names)
            xp = tuple(t[k] for k in range(spec.p))
            val = true_estimand_with_se(spec, "PostICE", evidence, xp, draws, seed)
            records.append({"evidence": _pattern_label(x), "event": str(event), "kind": kind,
                            "target": _pattern_label(xp), "value": val.value, "mc_se": val.mc_se,
                            "n_evidence": val.n_evidence})
            tables.append(f"PostICE(Y_{_pattern_label(xp)} | X={_pattern_label(x)}, {event}) = "
                          f"{val.value:.2f} (MC se {val.mc_se:.3f})")
            continue
        kinds = [kind] if kind else list(MEDIATION_KINDS)
        ks = [int(target)] if target is not None else list(range(spec.p))
        cells = np.full((len(kinds), spec.p), np.nan)
        for i, kd in enumerate(kinds):
            for k in ks:
                val = true_estimand_with_se(spec, kd, evidence, k, draws, seed)
                cells[i, k] = val.value
                records.append({"evidence": _pattern_label(x), "event": str(event), "kind": kd,
                                "cause": names[k], "value": val.value, "mc_se": val.mc_se,
                                "n_evidence": val.n_evidence})
        tables.append(render_table(f"Oracle values given X={_pattern_label(x)}, {event}",
                                   kinds, names, cells))
    return records, tables


def cmd_simulate(args) -> int:
    spec = load_scm_spec(args.spec)
    if args.n < 1:
        raise ConfigError("--n must be positive")
    data, _ = generate(spec, args.n, args.seed)
    if args.out:
        write_csv(args.out, data)
    else:
        write_csv(sys.stdout, data)
    if args.truth:
        if not args.evidence or not args.event:
            raise ConfigError("--truth needs --evidence and --event")
        event = parse_event(args.event)
        records, _ = _oracle_records(spec, args.evidence, event, args.draws, args.seed + 1)
        with open(args.truth, "w") as fh:
            json.dump(records, fh, indent=2)
    return EXIT_OK


def cmd_oracle(args) -> int:
    spec = load_scm_spec(args.spec)
    if not args.evidence or not args.event:
        raise ConfigError("oracle needs --evidence and --event")
    event = parse_event(args.event)
    records, tables = _oracle_records(spec, args.evidence, event, args.draws, args.seed,
                                      args.kind, args.target)
    emit(records, tables, args.format)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML run configuration; flags override it")
    p.add_argument("--data", help="CSV file with a header row")
    p.add_argument("--causes", help="comma-separated cause columns in topological order")
    p.add_argument("--outcome", help="outcome column (default Y)")
    p.add_argument("--graph", help="YAML graph file (causes with parents, outcome_parents)")
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("table", "csv", "json"))


def _estimation_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--evidence", action="append",
                   help="cause assignment, e.g. 1,1,0 or E=1,HD=0 (repeatable)")
    p.add_argument("--event", help="outcome event, e.g. 'Y > 140' or '1 < Y <= 2 or Y > 5'")
    p.add_argument("--method", choices=("plugin", "grid"))
    p.add_argument("--bootstrap", type=int, metavar="B", help="bootstrap replicates (0 = none)")
    p.add_argument("--level", type=float, help="confidence level (default 0.95)")
    p.add_argument("--smoothing", type=float, metavar="ALPHA",
                   help="add-alpha smoothing of cause frequencies (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="postcause",
        description="Posterior causal attribution of a continuous outcome to binary causes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="posterior NDE/NIE/TCE for every cause")
    _data_args(p)
    _estimation_args(p)
    p.add_argument("--ice", action="store_true", help="also report PostICE for every intervention")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("ice-table", help="PostICE matrix over evidence and intervention patterns")
    _data_args(p)
    _estimation_args(p)
    p.set_defaults(func=cmd_ice_table)

    p = sub.add_parser("check-monotonicity", help="falsification check of monotone causes")
    _data_args(p)
    p.add_argument("--replicates", type=int, default=200)
    p.add_argument("--min-count", type=int, default=20)
    p.add_argument("--z", type=float, default=3.0, help="flag threshold (default 3)")
    p.add_argument("--all", action="store_true", help="list every comparable pair")
    p.set_defaults(func=cmd_check_monotonicity)

    p = sub.add_parser("simulate", help="draw a dataset from a structural causal model")
    p.add_argument("--spec", required=True, help="demo model name or YAML model file")
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.add_argument("--truth", help="write oracle values for --evidence/--event to this JSON file")
    p.add_argument("--evidence", action="append")
    p.add_argument("--event")
    p.add_argument("--draws", type=int, default=1_000_000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="Monte-Carlo ground truth from a structural causal model")
    p.add_argument("--spec", required=True)
    p.add_argument("--evidence", action="append")
    p.add_argument("--event")
    p.add_argument("--kind", choices=KINDS)
    p.add_argument("--target", help="cause index (0-based) or intervention pattern for PostICE")
    p.add_argument("--draws", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PositivityError, BootstrapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
