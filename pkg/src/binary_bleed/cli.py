"""Command line front end: search, sweep, compare, gen-data.

Every flag mirrors a key of the JSON config accepted by ``--config``; flags
given on the command line override the file. Exit codes: 0 ok, 2 config
error, 3 evaluator error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, fields, replace
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .coordinator import ParallelAborted, ParallelResult, write_events
from .datagen import (
    ClusterGenSpec,
    GenerationError,
    MatrixGenSpec,
    gen_gaussian_clusters,
    gen_nmf_matrix,
    write_dataset,
)
from .experiments import (
    EVALUATORS,
    METHODS,
    ORDERS,
    AnyResult,
    ConfigError,
    RunConfig,
    SweepRow,
    aggregate,
    make_evaluator,
    run_method,
    sweep,
)
from .search import InvalidInput, SearchAborted, SearchResult

log = logging.getLogger("binary_bleed")

EXIT_OK, EXIT_CONFIG, EXIT_EVALUATOR = 0, 2, 3
RESULT_SCHEMA = "binary_bleed.result/1"
RECORD_FIELDS = ["run_id", "k", "score", "visit_index", "resource", "skipped_by"]
SUMMARY_FIELDS = ["run_id", "k_true", "repeat", "method", "order", "k_found",
                  "visited", "visited_fraction", "correct"]
AGGREGATE_FIELDS = ["method", "order", "runs", "mean_visited_fraction", "accuracy",
                    "within_one", "rmse"]


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--out", default=S, help="output directory (default: out)")
    p.add_argument("--space", default=S, help="k space as a:b (inclusive) or a,b,c")
    p.add_argument("--method", default=S, choices=METHODS)
    p.add_argument("--evaluator", default=S, choices=EVALUATORS)
    p.add_argument("--select", type=float, default=S)
    p.add_argument("--stop", type=float, default=S)
    p.add_argument("--direction", default=S, choices=["maximize", "minimize"])
    p.add_argument("--variant", default=S, choices=["T1", "T2", "T3", "T4"])
    p.add_argument("--order", default=S, choices=["pre", "post", "in"])
    p.add_argument("--ranks", type=int, default=S)
    p.add_argument("--threads", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--deterministic", action="store_true", default=S,
                   help="single-stepped round-robin scheduler for parallel runs")
    p.add_argument("--scheduler", default=S, choices=["round-robin", "random", "threads"])
    p.add_argument("--k0", type=int, default=S)
    p.add_argument("--width", type=float, default=S)
    p.add_argument("--data", default=S, help="BBMX or CSV matrix to score")
    p.add_argument("--k-true", dest="k_true", type=int, default=S)
    p.add_argument("--samples-per-cluster", dest="samples_per_cluster", type=int, default=S)
    p.add_argument("--dim", type=int, default=S)
    p.add_argument("--cluster-std", dest="cluster_std", type=float, default=S)
    p.add_argument("--noise-fraction", dest="noise_fraction", type=float, default=S)
    p.add_argument("--rows", type=int, default=S)
    p.add_argument("--cols", type=int, default=S)
    p.add_argument("--noise-level", dest="noise_level", type=float, default=S)
    p.add_argument("--restarts", type=int, default=S)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=S)
    p.add_argument("--n-init", dest="n_init", type=int, default=S)


def _add_sweep(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--k-true-range", dest="k_true_range", default=S)
    p.add_argument("--repeats", type=int, default=S)
    p.add_argument("--methods", type=_csv_list, default=S)
    p.add_argument("--orders", type=_csv_list, default=S,
                   help=f"comma list from {ORDERS}; 'recursive' is the serial search")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="binary-bleed", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run one search")
    _add_common(p)
    p = sub.add_parser("sweep", help="search over a range of k_true values")
    _add_common(p)
    _add_sweep(p)
    p = sub.add_parser("compare", help="visited fractions per method and order")
    _add_common(p)
    _add_sweep(p)
    p = sub.add_parser("gen-data", help="write a synthetic dataset and manifest")
    _add_common(p)
    p.add_argument("--kind", choices=["clusters", "nmf"], default="clusters")
    p.add_argument("--format", dest="fmt", choices=["bbmx", "csv"], default="bbmx")
    p.add_argument("--name", default="data")
    return parser


def load_config(args: argparse.Namespace) -> tuple[RunConfig, Path]:
    raw: dict = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
    known = {f.name for f in fields(RunConfig)}
    out = raw.pop("out", "out")
    for key, value in vars(args).items():
        if key in known:
            raw[key] = value
    out = getattr(args, "out", out)
    try:
        cfg = RunConfig.from_dict(raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate(), Path(out)


# -- writers ---------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x)) if isinstance(x, float) else str(x)


def record_rows(run_id: str, result: AnyResult) -> list[dict]:
    """Evaluated and skipped ks of one run as records.csv rows."""
    rows = []
    if isinstance(result, ParallelResult):
        for (rank, thread), recs in sorted(result.per_resource_records.items()):
            for r in recs:
                rows.append({"run_id": run_id, "k": r.k, "score": _fmt(r.score),
                             "visit_index": r.visit_index, "resource": f"{rank}:{thread}",
                             "skipped_by": ""})
        for (rank, thread), skips in sorted(result.skipped.items()):
            for k, reason in skips:
                rows.append({"run_id": run_id, "k": k, "score": "", "visit_index": "",
                             "resource": f"{rank}:{thread}", "skipped_by": reason})
    else:
        for r in result.records:
            rows.append({"run_id": run_id, "k": r.k, "score": _fmt(r.score),
                         "visit_index": r.visit_index, "resource": "serial", "skipped_by": ""})
        b = result.bounds
        for k in sorted(result.pruned):
            reason = f"k_min:{int(b.k_min)}" if k <= b.k_min else f"k_max:{int(b.k_max)}"
            rows.append({"run_id": run_id, "k": k, "score": "", "visit_index": "",
                         "resource": "serial", "skipped_by": reason})
    return rows


def write_csv(path: Path, fieldnames: Sequence[str], rows: Sequence[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def _config_echo(cfg: RunConfig) -> dict:
    return asdict(cfg)


def write_result(out: Path, cfg: RunConfig, result: Optional[AnyResult], status: str,
                 error: Optional[str] = None) -> None:
    payload = {"schema": RESULT_SCHEMA, "status": status, "config": _config_echo(cfg)}
    if result is not None:
        payload.update(result.to_dict())
    if error:
        payload["error"] = error
    (out / "result.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_events(out: Path, result: AnyResult) -> None:
    if isinstance(result, ParallelResult):
        with open(out / "events.jsonl", "w") as fh:
            write_events(result.events, fh)


def _summary_dict(row: SweepRow) -> dict:
    d = asdict(row)
    d["k_found"] = "" if row.k_found is None else row.k_found
    d["visited_fraction"] = repr(row.visited_fraction)
    d["correct"] = "true" if row.correct else "false"
    return d


# -- commands --------------------------------------------------------------

def cmd_search(cfg: RunConfig, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    try:
        evaluator = make_evaluator(cfg, cfg.k_true, cfg.seed)
    except (InvalidInput, GenerationError, OSError) as exc:
        raise ConfigError(str(exc)) from exc
    order = cfg.order if cfg.parallel else "recursive"
    try:
        result = run_method(cfg, evaluator, cfg.method, order)
    except SearchAborted as exc:
        partial = SearchResult(None, exc.records, len(cfg.k_space()), frozenset())
        write_csv(out / "records.csv", RECORD_FIELDS, record_rows("search", partial))
        write_result(out, cfg, None, "aborted", str(exc))
        log.error("%s", exc)
        return EXIT_EVALUATOR
    except ParallelAborted as exc:
        write_csv(out / "records.csv", RECORD_FIELDS, record_rows("search", exc.partial))
        _write_events(out, exc.partial)
        write_result(out, cfg, None, "aborted", str(exc))
        log.error("%s", exc)
        return EXIT_EVALUATOR
    write_result(out, cfg, result, "ok")
    write_csv(out / "records.csv", RECORD_FIELDS, record_rows("search", result))
    _write_events(out, result)
    print(f"k_optimal={result.k_optimal} visited={result.visited}/{result.space_size} "
          f"({result.visited_fraction:.1%})")
    return EXIT_OK


def _check_methods(cfg: RunConfig) -> None:
    for m in cfg.methods:
        cfg.thresholds(m)


def _run_sweep(cfg: RunConfig, out: Path) -> tuple[list[SweepRow], list[dict]]:
    out.mkdir(parents=True, exist_ok=True)
    records: list[dict] = []
    try:
        rows = sweep(cfg, on_result=lambda row, res: records.extend(record_rows(row.run_id, res)))
    except (SearchAborted, ParallelAborted):
        write_csv(out / "records.csv", RECORD_FIELDS, records)
        raise
    except (InvalidInput, GenerationError, OSError) as exc:
        raise ConfigError(str(exc)) from exc
    write_csv(out / "records.csv", RECORD_FIELDS, records)
    write_csv(out / "summary.csv", SUMMARY_FIELDS, [_summary_dict(r) for r in rows])
    return rows, records


def _write_sweep_result(out: Path, cfg: RunConfig, rows: list[SweepRow], agg: list[dict]) -> None:
    payload = {
        "schema": RESULT_SCHEMA,
        "status": "ok",
        "config": _config_echo(cfg),
        "runs": len(rows),
        "aggregate": agg,
    }
    (out / "result.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    _check_methods(cfg)
    rows, _ = _run_sweep(cfg, out)
    agg = aggregate(rows)
    write_csv(out / "aggregate.csv", AGGREGATE_FIELDS, [_agg_fmt(a) for a in agg])
    _write_sweep_result(out, cfg, rows, agg)
    _print_table(agg)
    return EXIT_OK


def cmd_compare(cfg: RunConfig, out: Path) -> int:
    cfg = replace(cfg, methods=list(METHODS), orders=["pre", "post"],
                  ranks=cfg.ranks or 4, threads=cfg.threads or 1)
    _check_methods(cfg)
    rows, _ = _run_sweep(cfg, out)
    agg = aggregate(rows)
    write_csv(out / "compare.csv", AGGREGATE_FIELDS, [_agg_fmt(a) for a in agg])
    _write_sweep_result(out, cfg, rows, agg)
    _print_table(agg)
    return EXIT_OK


def cmd_gen_data(cfg: RunConfig, out: Path, kind: str, fmt: str, name: str) -> int:
    if cfg.k_true is None:
        raise ConfigError("gen-data needs --k-true")
    try:
        if kind == "clusters":
            spec = ClusterGenSpec(cfg.k_true, cfg.samples_per_cluster, cfg.dim,
                                  cfg.cluster_std, cfg.noise_fraction, cfg.seed)
            data, labels = gen_gaussian_clusters(spec)
        else:
            spec = MatrixGenSpec(cfg.k_true, cfg.rows, cfg.cols, cfg.noise_level, cfg.seed)
            data, labels = gen_nmf_matrix(spec), None
    except (InvalidInput, GenerationError) as exc:
        raise ConfigError(str(exc)) from exc
    path = write_dataset(out, name, data, spec, fmt=fmt, labels=labels)
    print(f"wrote {path} shape={data.shape[0]}x{data.shape[1]}")
    return EXIT_OK


def _agg_fmt(a: dict) -> dict:
    return {k: repr(v) if isinstance(v, float) else v for k, v in a.items()}


def _print_table(agg: list[dict]) -> None:
    print(f"{'method':<11} {'order':<10} {'runs':>5} {'visited':>8} {'acc':>6} {'rmse':>6}")
    for a in agg:
        print(f"{a['method']:<11} {a['order']:<10} {a['runs']:>5} "
              f"{a['mean_visited_fraction']:>8.1%} {a['accuracy']:>6.2f} {a['rmse']:>6.2f}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg, out = load_config(args)
        if args.command == "search":
            return cmd_search(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, out)
        if args.command == "compare":
            return cmd_compare(cfg, out)
        return cmd_gen_data(cfg, out, args.kind, args.fmt, args.name)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SearchAborted, ParallelAborted) as exc:
        print(f"evaluator error: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR


if __name__ == "__main__":
    sys.exit(main())
