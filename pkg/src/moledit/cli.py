"""Command-line entry point: dataset mining, pair decomposition, batch
optimization, and report generation.

Exit codes: 0 full success, 1 I/O or data errors, 2 partial failure (some
molecules failed, details on stderr), 64 configuration/usage errors.

Output files are byte-identical across runs with the same inputs, config and
seed; wall-clock timing therefore goes to stderr and to a separate
``timings.json`` sidecar unless ``--embed-timing`` is given.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .metrics import RunRecord, RunSummary, rank_sum, summarize
from .molgraph import SmilesSyntaxError, parse_smiles
from .pairminer import build_dataset, read_labeled_file
from .scorer import (
    UnknownPropertyError,
    exact_oracle_scorer,
    get_property,
    group_contribution_scorer,
    load_group_table,
    noisy_scorer,
)
from .search import OptimizationTask, SearchConfig, run
from . import pairminer

_SEARCH_FIELDS = {f.name for f in dataclasses.fields(SearchConfig)}
_RUN_FIELDS = _SEARCH_FIELDS | {
    "property", "scorer", "direction", "jobs", "gc_table", "noise_sigma",
}

_DIRECTIONS = {
    "increase": 1, "decrease": -1, "+1": 1, "1": 1, "-1": -1, "up": 1, "down": -1,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # config errors exit 64, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(64)


def _json_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise _UsageError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise _UsageError("config file must hold a flat JSON object")
    unknown = set(raw) - _RUN_FIELDS
    if unknown:
        raise _UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return raw


def _parse_direction(value) -> int:
    if isinstance(value, int) and value in (1, -1):
        return value
    key = str(value).lower()
    if key not in _DIRECTIONS:
        raise _UsageError(f"bad direction {value!r} (use increase/decrease)")
    return _DIRECTIONS[key]


def _merge_config(args: argparse.Namespace) -> dict:
    """Built-in defaults, overridden by config-file values, overridden by
    explicitly passed CLI flags."""
    merged: dict = {f.name: getattr(SearchConfig(), f.name)
                    for f in dataclasses.fields(SearchConfig)}
    merged.update({
        "property": "heavy_atom_count", "scorer": "exact",
        "direction": "increase", "jobs": 1, "gc_table": None,
        "noise_sigma": 0.0,
    })
    merged.update(_load_config_file(getattr(args, "config", None)))
    overrides = {
        "num_simulations": args.num_simulations,
        "exploration_weight": args.exploration_weight,
        "max_depth": args.max_depth,
        "pruning_patience": args.pruning_patience,
        "max_branching": args.max_branching,
        "seed": args.seed,
        "strategy": args.strategy,
        "property": args.property,
        "scorer": args.scorer,
        "direction": args.direction,
        "jobs": args.jobs,
        "gc_table": args.gc_table,
        "noise_sigma": args.noise_sigma,
    }
    merged.update({k: v for k, v in overrides.items() if v is not None})
    if args.no_prior:
        merged["use_prior"] = False
    if args.no_leaf_value:
        merged["use_leaf_value"] = False
    if args.random_topk:
        merged["expansion_ranking"] = "random"
    return merged


def _build_scorer(name: str, property_name: str, gc_table: str | None,
                  noise_sigma: float, seed: int):
    if name == "exact":
        base = exact_oracle_scorer(get_property(property_name))
    elif name == "group":
        if gc_table is None:
            raise _UsageError("--scorer group needs --gc-table")
        base = group_contribution_scorer(load_group_table(gc_table))
    else:
        raise _UsageError(f"unknown scorer {name!r} (use exact or group)")
    if noise_sigma > 0:
        base = noisy_scorer(base, noise_sigma, seed)
    return base


def _optimize_worker(spec: dict) -> dict:
    """One task; module-level so process pools can pickle it."""
    molecule = parse_smiles(spec["smiles"])
    cfg = SearchConfig(**spec["cfg"])
    task = OptimizationTask(molecule, spec["property"], spec["direction"])
    scorer = _build_scorer(spec["scorer"], spec["property"],
                           spec["gc_table"], spec["noise_sigma"], cfg.seed)
    trajectory, stats = run(task, cfg, scorer)
    oracle = get_property(spec["property"])
    result = parse_smiles(trajectory.selected)
    return {
        "index": spec["index"],
        "trajectory": trajectory.to_json(),
        "stats": stats.to_json(),
        "y_start": oracle(molecule),
        "y_result": oracle(result),
        "wall_seconds": stats.wall_seconds,
    }


def cmd_optimize(args: argparse.Namespace) -> int:
    merged = _merge_config(args)
    direction = _parse_direction(merged["direction"])
    cfg_fields = {k: merged[k] for k in _SEARCH_FIELDS}
    try:
        SearchConfig(**cfg_fields)
        get_property(merged["property"])
    except (ValueError, UnknownPropertyError) as exc:
        raise _UsageError(str(exc)) from exc

    try:
        lines = Path(args.input).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        print(f"cannot read {args.input}: {exc}", file=sys.stderr)
        return 1

    specs = []
    failures = []
    for lineno, line in enumerate(lines, start=1):
        smiles = line.strip()
        if not smiles:
            continue
        try:
            parse_smiles(smiles)
        except SmilesSyntaxError as exc:
            failures.append((lineno, str(exc)))
            print(f"line {lineno}: {exc}", file=sys.stderr)
            continue
        task_cfg = dict(cfg_fields)
        task_cfg["seed"] = cfg_fields["seed"] + len(specs)
        specs.append({
            "index": len(specs), "smiles": smiles, "cfg": task_cfg,
            "property": merged["property"], "scorer": merged["scorer"],
            "direction": direction, "gc_table": merged["gc_table"],
            "noise_sigma": merged["noise_sigma"],
        })
    if not specs and not failures:
        raise _UsageError(f"no molecules in {args.input}")

    t0 = time.perf_counter()
    jobs = int(merged["jobs"])
    if jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_optimize_worker, specs))
    else:
        results = [_optimize_worker(spec) for spec in specs]
    total_seconds = time.perf_counter() - t0
    results.sort(key=lambda r: r["index"])

    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "trajectories.jsonl", "w", encoding="utf-8") as fh:
        for r in results:
            record = dict(r["trajectory"])
            record["stats"] = r["stats"]
            fh.write(_json_dumps(record) + "\n")

    records = [
        RunRecord(parse_smiles(r["trajectory"]["start"]),
                  parse_smiles(r["trajectory"]["selected"]),
                  r["y_start"], r["y_result"], r["wall_seconds"])
        for r in results
    ]
    summary_obj: dict = {"n": 0, "opt_mean": None, "avg_imp": None,
                         "suc_rate": None, "avg_time_minutes": None}
    if records:
        summary = summarize(records, direction)
        summary_obj = {
            "n": summary.n,
            "opt_mean": sum(r.y_result for r in records) / len(records),
            "avg_imp": summary.avg_imp,
            "suc_rate": summary.suc_rate,
            "avg_time_minutes": summary.avg_time_minutes if args.embed_timing else None,
        }
    (out_dir / "summary.json").write_text(_json_dumps(summary_obj) + "\n",
                                          encoding="utf-8")
    timings = {
        "per_task_seconds": [r["wall_seconds"] for r in results],
        "avg_time_minutes": (sum(r["wall_seconds"] for r in results)
                             / len(results) / 60.0) if results else None,
        "total_seconds": total_seconds,
    }
    (out_dir / "timings.json").write_text(json.dumps(timings, indent=2) + "\n",
                                          encoding="utf-8")
    print(f"{len(results)} optimized, {len(failures)} failed, "
          f"{total_seconds:.1f}s total", file=sys.stderr)
    return 2 if failures else 0


def cmd_mine(args: argparse.Namespace) -> int:
    merged = _merge_config(args)
    try:
        oracle = get_property(merged["property"])
    except UnknownPropertyError as exc:
        raise _UsageError(str(exc)) from exc
    try:
        entries = read_labeled_file(args.input)
    except OSError as exc:
        print(f"cannot read {args.input}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    if not entries:
        raise _UsageError(f"no labeled molecules in {args.input}")

    pairs = pairminer.mine_pairs(entries, args.max_edit_distance, args.limit)
    samples = build_dataset(entries, oracle, args.max_edit_distance, args.limit)
    with open(args.output, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(_json_dumps(sample.to_json()) + "\n")
    print(f"pairs: {len(pairs)}  samples: {len(samples)}")
    return 0


def cmd_decompose(args: argparse.Namespace) -> int:
    try:
        m_from = parse_smiles(args.source)
        m_to = parse_smiles(args.target)
    except SmilesSyntaxError as exc:
        raise _UsageError(str(exc)) from exc
    if args.max_len < 1:
        raise _UsageError("max_len must be >= 1")
    seq = pairminer.decompose(m_from, m_to, args.max_len)
    if seq is None:
        print(f"NOT FOUND within {args.max_len}")
    else:
        print(_json_dumps([a.to_json() for a in seq]))
    return 0


def _read_summary(path: str) -> tuple[str, RunSummary, dict]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    avg_time = raw.get("avg_time_minutes")
    if avg_time is None:
        sidecar = Path(path).parent / "timings.json"
        if sidecar.exists():
            with open(sidecar, encoding="utf-8") as fh:
                avg_time = json.load(fh).get("avg_time_minutes")
    summary = RunSummary(
        avg_imp=float(raw["avg_imp"]),
        suc_rate=float(raw["suc_rate"]),
        avg_time_minutes=float(avg_time) if avg_time is not None else 0.0,
        n=int(raw["n"]),
    )
    name = raw.get("name") or Path(path).parent.name or Path(path).stem
    return name, summary, raw


def cmd_report(args: argparse.Namespace) -> int:
    rows = []
    try:
        for path in args.summaries:
            name, summary, raw = _read_summary(path)
            rows.append((name, summary, raw.get("opt_mean")))
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        print(f"malformed summary: {exc}", file=sys.stderr)
        return 1
    if len(rows) >= 2:
        ranks = rank_sum({name: s for name, s, _ in rows})
    else:
        ranks = {rows[0][0]: 1}
    header = f"{'Config':<24} {'Opt. Mean':>10} {'Avg Imp':>9} " \
             f"{'Suc Rate':>9} {'Avg T':>8} {'Overall':>8}"
    print(header)
    print("-" * len(header))
    for name, s, opt_mean in rows:
        opt = f"{opt_mean:10.3f}" if opt_mean is not None else f"{'-':>10}"
        print(f"{name:<24} {opt} {s.avg_imp:9.3f} {s.suc_rate:9.2%} "
              f"{s.avg_time_minutes:8.3f} {ranks[name]:>8}")
    return 0


def _add_common_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat JSON config file")
    p.add_argument("--num-simulations", type=int, dest="num_simulations")
    p.add_argument("--exploration-weight", type=float, dest="exploration_weight")
    p.add_argument("--max-depth", type=int, dest="max_depth")
    p.add_argument("--pruning-patience", type=int, dest="pruning_patience")
    p.add_argument("--max-branching", type=int, dest="max_branching")
    p.add_argument("--seed", type=int)
    p.add_argument("--direction", choices=sorted(_DIRECTIONS))
    p.add_argument("--property")
    p.add_argument("--scorer", choices=["exact", "group"])
    p.add_argument("--gc-table", dest="gc_table")
    p.add_argument("--noise-sigma", type=float, dest="noise_sigma")
    p.add_argument("--strategy", choices=["mcts", "bfs"])
    p.add_argument("--no-prior", action="store_true")
    p.add_argument("--no-leaf-value", action="store_true")
    p.add_argument("--random-topk", action="store_true")
    p.add_argument("--jobs", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="moledit",
                     description="Molecule optimization by valid graph edits")
    sub = parser.add_subparsers(dest="command", required=True)

    p_opt = sub.add_parser("optimize", parents=[], help="optimize a file of start molecules")
    p_opt.add_argument("input", help="one SMILES per line")
    p_opt.add_argument("--output-dir", default="moledit-out")
    p_opt.add_argument("--embed-timing", action="store_true",
                       help="write wall-clock timing into summary.json "
                            "(makes output non-reproducible byte-for-byte)")
    _add_common_flags(p_opt)
    p_opt.set_defaults(func=cmd_optimize)

    p_mine = sub.add_parser("mine", help="mine an edit-response dataset")
    p_mine.add_argument("input", help="SMILES<tab>value per line")
    p_mine.add_argument("--output", default="dataset.jsonl")
    p_mine.add_argument("--max-edit-distance", type=int, default=2,
                        dest="max_edit_distance")
    p_mine.add_argument("--limit", type=int, default=1000)
    _add_common_flags(p_mine)
    p_mine.set_defaults(func=cmd_mine)

    p_dec = sub.add_parser("decompose", help="shortest edit sequence between two molecules")
    p_dec.add_argument("source")
    p_dec.add_argument("target")
    p_dec.add_argument("max_len", type=int)
    p_dec.set_defaults(func=cmd_decompose)

    p_rep = sub.add_parser("report", help="compare summary files")
    p_rep.add_argument("summaries", nargs="+")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"moledit: error: {exc}", file=sys.stderr)
        return 64
    except OSError as exc:
        print(f"moledit: I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
