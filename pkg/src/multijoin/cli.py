"""Command-line surface.

Subcommands: ``index build``, ``index update``, ``query``, ``oracle``,
``bench``. Machine-readable JSON goes to stdout, diagnostics to stderr.
Exit codes: 0 ok, 2 bad input, 3 hasher/parameter incompatibility,
4 internal consistency failure.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
from pathlib import Path

from . import bench as bench_mod
from .corpus import Catalog, read_csv_table
from .discovery import MODES, STRATEGIES, QueryKey, brute_force_topk, discover_topk
from .errors import (
    BudgetError,
    CompatibilityError,
    ConsistencyError,
    FormatError,
    InputError,
    MultijoinError,
    NotFoundError,
)
from .hashers import DEFAULT_SEED, HASHER_NAMES, make_hasher
from .index import build_index, edit_from_json, load_index, save_index
from .xash import DEFAULT_FREQUENCY_ORDER, compute_params, load_frequency_table

ENV_DATA_DIR = "MULTIJOIN_DATA_DIR"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_COMPAT = 3
EXIT_INTERNAL = 4


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, sort_keys=True)
    sys.stdout.write("\n")


def _fail(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _default_dir(value: str | None, suffix: str) -> Path:
    if value:
        return Path(value)
    base = os.environ.get(ENV_DATA_DIR)
    if base:
        return Path(base) / suffix
    raise InputError(f"--{suffix}-dir is required (or set ${ENV_DATA_DIR})")


def _frequency_order(args: argparse.Namespace) -> str:
    if getattr(args, "frequency_table", None):
        return load_frequency_table(args.frequency_table)
    return DEFAULT_FREQUENCY_ORDER


def cmd_index_build(args: argparse.Namespace) -> int:
    corpus_dir = _default_dir(args.corpus_dir, "corpus")
    index_dir = _default_dir(args.index_dir, "index")
    catalog = Catalog()
    paths = sorted(Path(corpus_dir).rglob("*.csv"))
    if not paths:
        raise InputError(f"no tables: {corpus_dir} contains no CSV files")
    for path in paths:
        handle = catalog.ingest_csv(path, has_header=not args.no_header, delimiter=args.delimiter)
        if args.verbose:
            print(f"ingested {path} as table {handle.table_id}", file=sys.stderr)
    stats = catalog.stats
    frequency_order = _frequency_order(args)
    params = compute_params(args.bits, max(1, stats.unique_value_count), frequency_order)
    hasher = make_hasher(
        args.hasher,
        args.bits,
        corpus_stats=stats,
        params=params if args.hasher == "xash" else None,
        seed=args.seed,
        frequency_order=frequency_order,
    )
    index = build_index(catalog, hasher)
    save_index(index, index_dir)
    _emit(
        {
            "tables": len(catalog.table_ids),
            "rows": stats.total_rows,
            "unique_values": stats.unique_value_count,
            "hasher": hasher.name,
            "bits": args.bits,
            "ones_budget": params.ones_budget,
            "segment_width": params.segment_width,
            "length_bits": params.length_bits,
            "index_dir": str(index_dir),
        }
    )
    return EXIT_OK


def cmd_index_update(args: argparse.Namespace) -> int:
    index_dir = _default_dir(args.index_dir, "index")
    index = load_index(index_dir, _frequency_order(args))
    try:
        lines = Path(args.edit_file).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {args.edit_file}: {exc}") from exc
    applied: dict[str, int] = {}
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            edit = edit_from_json(record)
            index.apply_edit(edit)
        except (ValueError, MultijoinError) as exc:
            raise InputError(f"edit file line {line_no}: {exc}") from exc
        applied[record["edit"]] = applied.get(record["edit"], 0) + 1
    # All edits parsed and applied in memory; swap the directory atomically.
    staging = Path(tempfile.mkdtemp(prefix=".update-", dir=Path(index_dir).parent))
    try:
        save_index(index, staging)
        backup = Path(str(index_dir) + ".old")
        if backup.exists():
            shutil.rmtree(backup)
        os.replace(index_dir, backup)
        os.replace(staging, index_dir)
        shutil.rmtree(backup)
    finally:
        if staging.exists():
            shutil.rmtree(staging, ignore_errors=True)
    _emit({"applied": applied, "total": sum(applied.values())})
    return EXIT_OK


def _resolve_key_columns(tokens: list[str], columns: list[str]) -> tuple[int, ...]:
    resolved = []
    for token in tokens:
        if token.isdigit():
            column = int(token)
            if column >= len(columns):
                raise InputError(f"query table has no column {column}")
        else:
            try:
                column = columns.index(token)
            except ValueError:
                raise InputError(f"query table has no column named {token!r}") from None
        resolved.append(column)
    return tuple(resolved)


def cmd_query(args: argparse.Namespace) -> int:
    index_dir = _default_dir(args.index_dir, "index")
    index = load_index(index_dir, _frequency_order(args))
    table = read_csv_table(args.query_csv, has_header=not args.no_header, delimiter=args.delimiter)
    key_columns = _resolve_key_columns(args.key_columns, table.columns)
    query = QueryKey(table, key_columns, args.k)
    if args.mode == "oracle":
        result = brute_force_topk(query, index.catalog)
        _emit(
            {
                "mode": "oracle",
                "k": args.k,
                "results": [
                    {"table_id": e.table_id, "j": e.joinability, "mapping": list(e.mapping)}
                    for e in result.entries
                ],
            }
        )
        return EXIT_OK
    run = discover_topk(query, index, mode=args.mode, strategy=args.strategy, prune=not args.no_prune)
    if args.verbose:
        print(
            f"initial column {run.stats.initial_column}; "
            f"{run.stats.tables_fetched} candidate tables, "
            f"{run.stats.rows_checked} posting items checked",
            file=sys.stderr,
        )
    _emit(run.to_record())
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    args.mode = "oracle"
    return cmd_query(args)


def cmd_bench(args: argparse.Namespace) -> int:
    if args.spec_file:
        try:
            config = json.loads(Path(args.spec_file).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read bench spec {args.spec_file}: {exc}") from exc
    else:
        config = {}
    spec = bench_mod.spec_from_json(config.get("spec", {})) if config.get("spec") else bench_mod.DEFAULT_BENCH_SPEC
    seeds = tuple(config.get("seeds", [spec.seed]))
    report = bench_mod.run_benchmark(
        spec,
        seeds,
        hasher_names=tuple(config.get("hashers", ("xash", "bf", "ht"))),
        bits_list=tuple(config.get("bits", (128,))),
        modes=tuple(config.get("modes", ("mate",))),
        strategies=tuple(config.get("strategies", ("min_cardinality",))),
        k=config.get("k", 10),
        ablate=args.ablate or bool(config.get("ablate")),
        sweep=args.sweep or bool(config.get("sweep")),
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out_dir / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    (out_dir / "timings.json").write_text(
        json.dumps(report.timings, sort_keys=True) + "\n", encoding="utf-8"
    )
    _emit({"out_dir": str(out_dir), "cells": len(report.cells)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multijoin",
        description="Composite-key joinable-table discovery over CSV corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--index-dir", help=f"index directory (default ${ENV_DATA_DIR}/index)")
        p.add_argument("--frequency-table", help="JSON array of 37 characters, most frequent first")
        p.add_argument("--delimiter", default=",")
        p.add_argument("--no-header", action="store_true", help="CSV files have no header row")
        p.add_argument("-v", "--verbose", action="count", default=0)

    index_parser = sub.add_parser("index", help="build or update an index")
    index_sub = index_parser.add_subparsers(dest="index_command", required=True)

    build_p = index_sub.add_parser("build", help="index every CSV under a corpus directory")
    add_common(build_p)
    build_p.add_argument("--corpus-dir", help=f"corpus directory (default ${ENV_DATA_DIR}/corpus)")
    build_p.add_argument("--hasher", default="xash", choices=HASHER_NAMES)
    build_p.add_argument("--bits", type=int, default=128, choices=(128, 256, 512))
    build_p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    build_p.set_defaults(handler=cmd_index_build)

    update_p = index_sub.add_parser("update", help="apply a JSON-lines edit file")
    add_common(update_p)
    update_p.add_argument("edit_file")
    update_p.set_defaults(handler=cmd_index_update)

    query_p = sub.add_parser("query", help="find the top-k joinable tables")
    add_common(query_p)
    query_p.add_argument("query_csv")
    query_p.add_argument(
        "--key-columns", "-q", nargs="+", required=True,
        help="key columns by 0-based index or header name, in key order",
    )
    query_p.add_argument("-k", type=int, default=10)
    query_p.add_argument("--mode", default="mate", choices=MODES + ("oracle",))
    query_p.add_argument("--strategy", default="min_cardinality", choices=STRATEGIES)
    query_p.add_argument("--no-prune", action="store_true", help="disable both table-pruning rules")
    query_p.set_defaults(handler=cmd_query)

    oracle_p = sub.add_parser("oracle", help="exhaustive (slow) reference answer")
    add_common(oracle_p)
    oracle_p.add_argument("query_csv")
    oracle_p.add_argument("--key-columns", "-q", nargs="+", required=True)
    oracle_p.add_argument("-k", type=int, default=10)
    oracle_p.set_defaults(handler=cmd_oracle)

    bench_p = sub.add_parser("bench", help="generate synthetic corpora and run experiments")
    bench_p.add_argument("--spec-file", help="JSON bench configuration")
    bench_p.add_argument("--out-dir", required=True)
    bench_p.add_argument("--ablate", action="store_true", help="also run the feature ablation")
    bench_p.add_argument("--sweep", action="store_true", help="also run the key-size sweep")
    bench_p.set_defaults(handler=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (InputError, NotFoundError, FormatError, BudgetError) as exc:
        _fail(str(exc))
        return EXIT_INPUT
    except CompatibilityError as exc:
        _fail(str(exc))
        return EXIT_COMPAT
    except ConsistencyError as exc:
        _fail(str(exc))
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
