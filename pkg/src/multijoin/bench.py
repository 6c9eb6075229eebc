"""Synthetic corpora and the benchmark harness.

The generator plants ground-truth joins: each synthetic query gets a target
table, a column mapping, and a set of key tuples written into both sides,
with the remaining cells drawn from shared per-domain vocabularies, which
is what creates partial matches (and therefore filter pressure). In
``unique_key_component`` mode each tuple carries one globally unique token
and the sidecar truth is exact by construction; otherwise it is a floor.

Columns have syntactic domains: a character subset and a length band. That
mirrors real tables, where each column has its own value shape, and it is
the structure the xash features exploit.
"""

from __future__ import annotations

import csv
import json
import random
import statistics
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from .bits import BitArray
from .corpus import Catalog, Table
from .discovery import JoinResult, QueryKey, discover_topk
from .errors import ConsistencyError, InputError
from .hashers import HasherConfig, make_hasher
from .index import build_index
from .xash import (
    ALPHABET,
    XashParams,
    compute_params,
    position_bit,
    rotate_region,
    select_features,
)

LETTERS = "abcdefghijklmnopqrstuvwxyz"


# -- synthetic corpus spec -----------------------------------------------------


@dataclass(frozen=True)
class VocabSpec:
    """Word generator knobs.

    Every column gets a syntactic domain: a character subset plus a length
    band, so values in one column look alike and values across columns
    differ, the shape real tables have. ``categorical_domains`` of them use
    tiny pools (country/category-like columns with heavy repetition); the
    rest split the remaining ``pool_size`` budget (name-like columns).
    ``char_skew`` biases character draws toward globally frequent letters;
    ``word_skew`` biases word draws toward the head of each pool.
    """

    word_length: tuple[int, int] = (3, 12)
    char_skew: float = 1.1
    word_skew: float = 3.0
    pool_size: int = 400_000
    domains: int = 10
    categorical_domains: int = 3
    categorical_pool: int = 120


@dataclass(frozen=True)
class PlantedJoin:
    query_rows: int
    target_table: int
    key_size: int
    joinable_fraction: float


@dataclass(frozen=True)
class SyntheticSpec:
    """Corpus recipe. With ``unique_key_component`` every planted key tuple
    carries one globally unique token, which confines full matches to the
    planted rows and makes the sidecar truth exact; without it, queries are
    built purely from shared vocabulary, which floods the filters with
    near-misses (the regime the precision benchmarks need) at the cost of
    the truth being only a lower bound."""

    n_tables: int = 500
    rows_per_table: tuple[int, int] = (60, 220)
    cols_per_table: tuple[int, int] = (3, 8)
    vocabulary: VocabSpec = field(default_factory=VocabSpec)
    planted_joins: tuple[PlantedJoin, ...] = ()
    unique_key_component: bool = True
    # Fat tail of wide tables, as in web-table corpora; wide rows are what
    # saturate the unstructured filters.
    wide_table_fraction: float = 0.0
    wide_table_cols: tuple[int, int] = (16, 32)
    # When set, overwrite random cells with one-off values until the corpus
    # holds at least this many distinct values (the long tail of singleton
    # strings real corpora have). The distinct count steers the derived
    # ones-budget of the structured hash.
    singleton_floor: int | None = None
    seed: int = 0

    def validate(self) -> None:
        if self.n_tables < 1:
            raise InputError("need at least one table")
        for lo, hi in (self.rows_per_table, self.cols_per_table, self.wide_table_cols):
            if not 1 <= lo <= hi:
                raise InputError("size ranges must satisfy 1 <= lo <= hi")
        if not 0.0 <= self.wide_table_fraction <= 1.0:
            raise InputError("wide table fraction must lie in [0, 1]")
        for pj in self.planted_joins:
            if not 0 <= pj.target_table < self.n_tables:
                raise InputError(f"planted target {pj.target_table} outside the corpus")
            if pj.key_size < 1 or pj.key_size > self.cols_per_table[1]:
                raise InputError(f"key size {pj.key_size} unrealizable")
            if not 0.0 <= pj.joinable_fraction <= 1.0:
                raise InputError("joinable fraction must lie in [0, 1]")
            if pj.query_rows < 1:
                raise InputError("queries need at least one row")
            joinable = round(pj.query_rows * pj.joinable_fraction)
            if joinable > self.rows_per_table[0]:
                raise InputError(
                    f"cannot plant {joinable} joinable rows into tables with "
                    f"as few as {self.rows_per_table[0]} rows"
                )


def spec_from_json(obj: dict) -> SyntheticSpec:
    try:
        vocab = VocabSpec(**{
            k: tuple(v) if k == "word_length" else v
            for k, v in obj.get("vocabulary", {}).items()
        })
        joins = tuple(PlantedJoin(**pj) for pj in obj.get("planted_joins", ()))
        spec = SyntheticSpec(
            n_tables=obj.get("n_tables", 500),
            rows_per_table=tuple(obj.get("rows_per_table", (60, 220))),
            cols_per_table=tuple(obj.get("cols_per_table", (3, 8))),
            vocabulary=vocab,
            planted_joins=joins,
            unique_key_component=obj.get("unique_key_component", True),
            wide_table_fraction=obj.get("wide_table_fraction", 0.0),
            wide_table_cols=tuple(obj.get("wide_table_cols", (16, 32))),
            singleton_floor=obj.get("singleton_floor"),
            seed=obj.get("seed", 0),
        )
    except TypeError as exc:
        raise InputError(f"bad synthetic spec: {exc}") from exc
    spec.validate()
    return spec


def default_planted_joins(
    n_tables: int, count: int = 20, query_rows: int = 30,
    key_size: int = 3, joinable_fraction: float = 0.5,
) -> tuple[PlantedJoin, ...]:
    stride = max(1, n_tables // count)
    return tuple(
        PlantedJoin(query_rows, (i * stride) % n_tables, key_size, joinable_fraction)
        for i in range(count)
    )


#: Desk-scale default: minutes, not hours, but still enough near-misses to
#: separate the hashers.
DEFAULT_BENCH_SPEC = SyntheticSpec(
    n_tables=500,
    rows_per_table=(80, 260),
    cols_per_table=(3, 8),
    vocabulary=VocabSpec(),
    planted_joins=default_planted_joins(500),
    unique_key_component=False,
    wide_table_fraction=0.015,
    wide_table_cols=(14, 20),
    singleton_floor=500_000,
    seed=0,
)

#: Smaller corpus for the component-ablation study (many index builds).
ABLATION_SPEC = SyntheticSpec(
    n_tables=120,
    rows_per_table=(30, 90),
    cols_per_table=(3, 8),
    vocabulary=VocabSpec(pool_size=60_000, domains=8, categorical_domains=2),
    planted_joins=default_planted_joins(120, count=12),
    unique_key_component=False,
    seed=0,
)

#: Wider tables so composite keys up to six columns fit.
SWEEP_SPEC = SyntheticSpec(
    n_tables=120,
    rows_per_table=(30, 90),
    cols_per_table=(6, 8),
    vocabulary=VocabSpec(pool_size=60_000, domains=8, categorical_domains=2),
    planted_joins=default_planted_joins(120, count=12, key_size=6, joinable_fraction=0.4),
    unique_key_component=False,
    seed=0,
)


# -- generation ---------------------------------------------------------------


@dataclass(frozen=True)
class GeneratedQuery:
    query_id: int
    table: Table
    key_columns: tuple[int, ...]
    target_table: int
    true_joinability: int


@dataclass
class GeneratedCorpus:
    catalog: Catalog
    queries: list[GeneratedQuery]
    truth: dict[tuple[int, int], int]  # (query_id, table_id) -> joinability
    truth_is_exact: bool = True  # lower bound only when key tuples lack unique tokens


class _DomainVocab:
    """Per-domain word pool with a skewed draw distribution."""

    def __init__(
        self,
        rng: random.Random,
        spec: VocabSpec,
        global_rank: dict[str, int],
        pool_target: int,
    ) -> None:
        n_chars = rng.randint(8, 14)
        weights = [1.0 / (global_rank[c] + 1) ** spec.char_skew for c in LETTERS]
        self.chars = _weighted_sample_distinct(rng, LETTERS, weights, n_chars)
        lo, hi = spec.word_length
        self.len_lo = rng.randint(lo, max(lo, hi - 3))
        self.len_hi = min(hi, self.len_lo + rng.randint(2, 4))
        self.word_skew = spec.word_skew
        pool: set[str] = set()
        # Distinct words only; duplicates regenerate. Bounded by attempts so a
        # tiny char set cannot loop forever.
        attempts = 0
        while len(pool) < pool_target and attempts < pool_target * 20:
            attempts += 1
            length = rng.randint(self.len_lo, self.len_hi)
            pool.add("".join(rng.choice(self.chars) for _ in range(length)))
        self.pool = sorted(pool)
        rng.shuffle(self.pool)

    def draw(self, rng: random.Random) -> str:
        index = int(len(self.pool) * rng.random() ** self.word_skew)
        return self.pool[min(index, len(self.pool) - 1)]


def _build_domains(rng: random.Random, spec: VocabSpec, global_rank: dict[str, int]) -> list[_DomainVocab]:
    entity_count = max(1, spec.domains - spec.categorical_domains)
    entity_pool = max(50, spec.pool_size // entity_count)
    domains = [
        _DomainVocab(rng, spec, global_rank, spec.categorical_pool)
        for _ in range(spec.categorical_domains)
    ]
    domains += [
        _DomainVocab(rng, spec, global_rank, entity_pool) for _ in range(entity_count)
    ]
    return domains


def _top_up_singletons(
    rng: random.Random, grids: list[list[list[str]]], floor: int
) -> None:
    """Overwrite random cells with one-off strings until the corpus holds
    at least ``floor`` distinct values (bounded by the cell count)."""
    distinct: set[str] = set()
    cells: list[tuple[int, int, int]] = []
    for ti, grid in enumerate(grids):
        for ri, row in enumerate(grid):
            distinct.update(row)
            cells.extend((ti, ri, ci) for ci in range(len(row)))
    deficit = min(floor - len(distinct), len(cells))
    if deficit <= 0:
        return
    counter = 0
    for ti, ri, ci in rng.sample(cells, deficit):
        counter += 1
        padding = "".join(rng.choice(LETTERS) for _ in range(rng.randint(1, 9)))
        grids[ti][ri][ci] = f"sv{counter:06d}{padding}"


def _weighted_sample_distinct(
    rng: random.Random, items: str, weights: list[float], count: int
) -> list[str]:
    chosen: list[str] = []
    pool = list(items)
    w = list(weights)
    for _ in range(min(count, len(pool))):
        total = sum(w)
        pick = rng.random() * total
        cum = 0.0
        for i, weight in enumerate(w):
            cum += weight
            if pick <= cum:
                chosen.append(pool.pop(i))
                w.pop(i)
                break
        else:
            chosen.append(pool.pop())
            w.pop()
    return chosen


def generate_corpus(spec: SyntheticSpec, out_dir: str | Path | None = None) -> GeneratedCorpus:
    """Build a corpus with planted joins; optionally persist it.

    When ``out_dir`` is given, tables land in ``tables/``, query tables in
    ``queries/``, and the ground truth in ``ground_truth.jsonl`` with one
    ``{query_id, table_id, true_j}`` record per planted join. Fixed seeds
    give byte-identical output.
    """
    spec.validate()
    rng = random.Random(spec.seed)
    global_rank = {c: i for i, c in enumerate(" etaoinsrhldcumfpgwybvkxjqz0123456789")}
    domains = _build_domains(rng, spec.vocabulary, global_rank)

    table_domains: list[list[int]] = []
    grids: list[list[list[str]]] = []
    for _ in range(spec.n_tables):
        if rng.random() < spec.wide_table_fraction:
            n_cols = rng.randint(*spec.wide_table_cols)
        else:
            n_cols = rng.randint(*spec.cols_per_table)
        n_rows = rng.randint(*spec.rows_per_table)
        column_domains = [rng.randrange(len(domains)) for _ in range(n_cols)]
        table_domains.append(column_domains)
        grids.append(
            [[domains[column_domains[c]].draw(rng) for c in range(n_cols)] for _ in range(n_rows)]
        )

    unique_counter = 0

    def unique_token() -> str:
        nonlocal unique_counter
        unique_counter += 1
        padding = "".join(rng.choice(LETTERS) for _ in range(rng.randint(0, 8)))
        return f"uq{unique_counter:06d}{padding}"

    if spec.singleton_floor is not None:
        _top_up_singletons(rng, grids, spec.singleton_floor)

    queries: list[GeneratedQuery] = []
    truth: dict[tuple[int, int], int] = {}
    rows_taken: dict[int, set[int]] = {}
    for query_id, pj in enumerate(spec.planted_joins):
        target = pj.target_table
        grid = grids[target]
        n_cols = len(table_domains[target])
        if n_cols < pj.key_size:
            # Realizability: widen the target with extra domain columns.
            for _ in range(pj.key_size - n_cols):
                domain_id = rng.randrange(len(domains))
                table_domains[target].append(domain_id)
                for row in grid:
                    row.append(domains[domain_id].draw(rng))
            n_cols = len(table_domains[target])
        mapping = sorted(rng.sample(range(n_cols), pj.key_size))
        n_join = round(pj.query_rows * pj.joinable_fraction)
        taken = rows_taken.setdefault(target, set())
        available = [r for r in range(len(grid)) if r not in taken]
        if len(available) < n_join:
            raise InputError(
                f"table {target} has no room left to plant {n_join} more joinable rows"
            )
        planted_rows = sorted(rng.sample(available, n_join))
        taken.update(planted_rows)

        key_rows: list[list[str]] = []
        seen_tuples: set[tuple[str, ...]] = set()
        for i in range(pj.query_rows):
            for _attempt in range(64):
                values = [
                    domains[table_domains[target][col]].draw(rng) for col in mapping
                ]
                if spec.unique_key_component:
                    values[-1] = unique_token()
                if tuple(values) not in seen_tuples:
                    break
            seen_tuples.add(tuple(values))
            if i < n_join:
                for col, value in zip(mapping, values):
                    grid[planted_rows[i]][col] = value
            key_rows.append(values)
        rng.shuffle(key_rows)

        query_table = Table(
            -1,
            f"q{query_id:03d}",
            [f"k{i}" for i in range(pj.key_size)],
            key_rows,
        )
        queries.append(
            GeneratedQuery(query_id, query_table, tuple(range(pj.key_size)), target, n_join)
        )
        if n_join > 0:
            truth[(query_id, target)] = n_join

    catalog = Catalog()
    for ti, grid in enumerate(grids):
        catalog.add_table(f"t{ti:04d}", grid)

    corpus = GeneratedCorpus(catalog, queries, truth, truth_is_exact=spec.unique_key_component)
    if out_dir is not None:
        _write_corpus(corpus, Path(out_dir))
    return corpus


def _write_corpus(corpus: GeneratedCorpus, out_dir: Path) -> None:
    tables_dir = out_dir / "tables"
    queries_dir = out_dir / "queries"
    tables_dir.mkdir(parents=True, exist_ok=True)
    queries_dir.mkdir(parents=True, exist_ok=True)
    for table in corpus.catalog.tables:
        _write_csv(tables_dir / f"{table.name}.csv", table)
    for query in corpus.queries:
        _write_csv(queries_dir / f"{query.table.name}.csv", query.table)
    with (out_dir / "ground_truth.jsonl").open("w", encoding="utf-8") as fh:
        for (query_id, table_id), true_j in sorted(corpus.truth.items()):
            fh.write(
                json.dumps(
                    {"query_id": query_id, "table_id": table_id, "true_j": true_j},
                    sort_keys=True,
                )
                + "\n"
            )


def _write_csv(path: Path, table: Table) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.columns)
        writer.writerows(table.raw_rows)


# -- xash component ablation ----------------------------------------------------


class ComponentXashHasher:
    """Structured hash with individual features switched off, for ablations.

    Recomposes the public feature/position/rotation pieces; with every flag
    on it reproduces the full hash bit for bit.
    """

    def __init__(
        self,
        params: XashParams,
        use_chars: bool = True,
        use_positions: bool = True,
        use_length: bool = True,
        use_rotation: bool = True,
    ) -> None:
        self.params = params
        self.bits = params.bits
        self.use_chars = use_chars
        self.use_positions = use_positions
        self.use_length = use_length
        self.use_rotation = use_rotation
        flags = "".join(
            token
            for token, on in (
                ("C", use_chars), ("P", use_positions), ("L", use_length), ("R", use_rotation),
            )
            if on
        )
        self.name = f"xash[{flags}]"

    def hash(self, value: str) -> BitArray:
        p = self.params
        features = select_features(value, p)
        length = features.value_length
        indices = []
        if self.use_length:
            indices.append(length % p.length_bits)
        if self.use_chars:
            for char, position in features.selected:
                offset = (
                    position_bit(position, length, p.segment_width)
                    if self.use_positions
                    else 1
                )
                indices.append(p.length_bits + ALPHABET.index(char) * p.segment_width + offset - 1)
        raw = BitArray.from_indices(p.bits, indices)
        if not self.use_rotation:
            return raw
        return rotate_region(raw, p.length_bits, p.char_region_bits, length % p.char_region_bits)

    @property
    def config(self) -> HasherConfig:
        return HasherConfig(
            name=self.name,
            bits=self.bits,
            ones_budget=self.params.ones_budget,
            segment_width=self.params.segment_width,
            length_bits=self.params.length_bits,
            digest=self.params.digest,
        )


#: Feature ladder for the ablation study, weakest first.
ABLATION_LADDER: tuple[tuple[str, dict[str, bool]], ...] = (
    ("length", {"use_chars": False, "use_positions": False, "use_length": True, "use_rotation": False}),
    ("chars", {"use_chars": True, "use_positions": False, "use_length": False, "use_rotation": False}),
    ("chars+positions", {"use_chars": True, "use_positions": True, "use_length": False, "use_rotation": False}),
    ("chars+positions+length", {"use_chars": True, "use_positions": True, "use_length": True, "use_rotation": False}),
    ("full", {"use_chars": True, "use_positions": True, "use_length": True, "use_rotation": True}),
)


def ablate_xash(
    catalog: Catalog,
    queries: list[GeneratedQuery],
    bits: int = 128,
    k: int = 10,
) -> dict[str, dict[str, float]]:
    """Mean precision and false-positive count per feature subset."""
    params = compute_params(bits, max(1, catalog.stats.unique_value_count))
    out: dict[str, dict[str, float]] = {}
    for label, flags in ABLATION_LADDER:
        hasher = ComponentXashHasher(params, **flags)
        index = build_index(catalog, hasher)
        precisions = []
        false_positives = 0
        for query in queries:
            run = discover_topk(
                QueryKey(query.table, query.key_columns, k), index, mode="mate"
            )
            precisions.append(run.stats.precision)
            false_positives += run.stats.false_positives
        out[label] = {
            "precision": statistics.mean(precisions) if precisions else 1.0,
            "false_positives": float(false_positives),
        }
    return out


# -- the experiment matrix -------------------------------------------------------


@dataclass(frozen=True)
class CellRecord:
    hasher: str
    bits: int
    mode: str
    strategy: str
    seed: int
    query_id: int
    precision: float
    true_positives: int
    false_positives: int
    candidates: int
    rows_checked: int
    rows_verified: int
    wall_time_ms: float
    joinabilities: tuple[int, ...]


def run_matrix(
    catalog: Catalog,
    queries: list[GeneratedQuery],
    *,
    hasher_names: tuple[str, ...] = ("xash", "bf", "ht"),
    bits_list: tuple[int, ...] = (128,),
    modes: tuple[str, ...] = ("mate",),
    strategies: tuple[str, ...] = ("min_cardinality",),
    k: int = 10,
    seed: int = 0,
) -> list[CellRecord]:
    """One instrumented run per grid cell.

    When several modes are requested their joinability multisets must agree
    per query; a disagreement aborts the whole matrix, since timing a wrong
    answer is worthless.
    """
    records: list[CellRecord] = []
    reference_scores: dict[tuple[str, int], tuple[int, ...]] = {}
    for name in hasher_names:
        for bits in bits_list:
            hasher = make_hasher(name, bits, corpus_stats=catalog.stats)
            index = build_index(catalog, hasher)
            for strategy in strategies:
                for query in queries:
                    key = QueryKey(query.table, query.key_columns, k)
                    mode_results: dict[str, JoinResult] = {}
                    for mode in modes:
                        run = discover_topk(key, index, mode=mode, strategy=strategy)
                        mode_results[mode] = run.result
                        records.append(
                            CellRecord(
                                hasher=name,
                                bits=bits,
                                mode=mode,
                                strategy=strategy,
                                seed=seed,
                                query_id=query.query_id,
                                precision=run.stats.precision,
                                true_positives=run.stats.true_positives,
                                false_positives=run.stats.false_positives,
                                candidates=run.stats.candidates,
                                rows_checked=run.stats.rows_checked,
                                rows_verified=run.stats.rows_verified,
                                wall_time_ms=run.stats.wall_time_ms,
                                joinabilities=tuple(run.result.joinability_values()),
                            )
                        )
                    _assert_modes_agree(mode_results, name, bits, query.query_id)
                    # Filters change cost, never answers: every hasher must
                    # report the same scores for the same query.
                    scores = tuple(mode_results[modes[0]].joinability_values())
                    anchor = reference_scores.setdefault((strategy, query.query_id), scores)
                    if scores != anchor:
                        raise ConsistencyError(
                            f"hasher {name}-{bits} changed the answer for query "
                            f"{query.query_id}: {scores} vs {anchor}"
                        )
    return records


def _assert_modes_agree(
    mode_results: dict[str, JoinResult], hasher: str, bits: int, query_id: int
) -> None:
    if len(mode_results) < 2:
        return
    reference_mode = next(iter(mode_results))
    reference = mode_results[reference_mode].joinability_values()
    for mode, result in mode_results.items():
        if result.joinability_values() != reference:
            raise ConsistencyError(
                f"mode {mode} disagrees with {reference_mode} on query {query_id} "
                f"({hasher}-{bits}): {result.joinability_values()} vs {reference}"
            )


@dataclass
class BenchReport:
    """Aggregated metrics per (hasher, bits, mode, strategy) cell.

    Wall times are collected separately so the report itself is
    byte-deterministic under a fixed seed.
    """

    cells: dict[str, dict[str, float]]
    ablation: dict[str, dict[str, float]] | None = None
    key_size_sweep: dict[str, dict[str, float]] | None = None
    timings: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> str:
        payload: dict = {"cells": self.cells}
        if self.ablation is not None:
            payload["ablation"] = self.ablation
        if self.key_size_sweep is not None:
            payload["key_size_sweep"] = self.key_size_sweep
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        lines = ["cell,metric,value"]
        for cell in sorted(self.cells):
            for metric in sorted(self.cells[cell]):
                lines.append(f"{cell},{metric},{self.cells[cell][metric]!r}")
        for label, table in (("ablation", self.ablation), ("key_size_sweep", self.key_size_sweep)):
            if table is not None:
                for row in sorted(table):
                    for metric in sorted(table[row]):
                        lines.append(f"{label}:{row},{metric},{table[row][metric]!r}")
        return "\n".join(lines) + "\n"


def aggregate_records(records: list[CellRecord]) -> dict[str, dict[str, float]]:
    grouped: dict[str, list[CellRecord]] = {}
    for record in records:
        key = f"{record.hasher}-{record.bits}-{record.mode}-{record.strategy}"
        grouped.setdefault(key, []).append(record)
    cells: dict[str, dict[str, float]] = {}
    for key, group in grouped.items():
        precisions = [r.precision for r in group]
        cells[key] = {
            "runs": float(len(group)),
            "precision_mean": statistics.mean(precisions),
            "precision_stdev": statistics.pstdev(precisions),
            "false_positives": float(sum(r.false_positives for r in group)),
            "true_positives": float(sum(r.true_positives for r in group)),
            "rows_checked_mean": statistics.mean(r.rows_checked for r in group),
            "rows_verified_mean": statistics.mean(r.rows_verified for r in group),
        }
    return cells


def key_size_sweep(
    spec: SyntheticSpec = SWEEP_SPEC,
    key_sizes: tuple[int, ...] = (2, 3, 4, 5, 6),
    seeds: tuple[int, ...] = (0,),
    hasher_name: str = "xash",
    bits: int = 128,
    k: int = 10,
) -> dict[str, dict[str, float]]:
    """Re-run the same queries with key prefixes of growing width.

    Wider keys put more bits into the query super key, so masking only gets
    stricter; fewer rows reach verification.
    """
    if max(key_sizes) > max(pj.key_size for pj in spec.planted_joins):
        raise InputError("sweep needs planted joins at least as wide as the largest key")
    totals: dict[int, dict[str, list[float]]] = {
        m: {"rows_verified": [], "false_positives": []} for m in key_sizes
    }
    for seed in seeds:
        corpus = generate_corpus(replace(spec, seed=seed))
        hasher = make_hasher(hasher_name, bits, corpus_stats=corpus.catalog.stats)
        index = build_index(corpus.catalog, hasher)
        for query in corpus.queries:
            for m in key_sizes:
                key = QueryKey(query.table, query.key_columns[:m], k)
                run = discover_topk(key, index, mode="mate")
                totals[m]["rows_verified"].append(float(run.stats.rows_verified))
                totals[m]["false_positives"].append(float(run.stats.false_positives))
    return {
        f"m={m}": {
            "rows_verified_mean": statistics.mean(series["rows_verified"]),
            "false_positives_mean": statistics.mean(series["false_positives"]),
        }
        for m, series in totals.items()
    }


def run_benchmark(
    spec: SyntheticSpec,
    seeds: tuple[int, ...] = (0,),
    *,
    hasher_names: tuple[str, ...] = ("xash", "bf", "ht"),
    bits_list: tuple[int, ...] = (128,),
    modes: tuple[str, ...] = ("mate",),
    strategies: tuple[str, ...] = ("min_cardinality",),
    k: int = 10,
    ablate: bool = False,
    sweep: bool = False,
    verify_truth: bool = True,
) -> BenchReport:
    """Generate corpora across seeds and run the whole matrix."""
    started = time.perf_counter()
    records: list[CellRecord] = []
    ablation_accumulator: dict[str, list[dict[str, float]]] = {}
    for seed in seeds:
        corpus = generate_corpus(replace(spec, seed=seed))
        if verify_truth:
            _verify_planted_truth(corpus)
        records.extend(
            run_matrix(
                corpus.catalog,
                corpus.queries,
                hasher_names=hasher_names,
                bits_list=bits_list,
                modes=modes,
                strategies=strategies,
                k=k,
                seed=seed,
            )
        )
        if ablate:
            for label, metrics in ablate_xash(corpus.catalog, corpus.queries, k=k).items():
                ablation_accumulator.setdefault(label, []).append(metrics)

    report = BenchReport(cells=aggregate_records(records))
    if ablate:
        report.ablation = {
            label: {
                "precision_mean": statistics.mean(m["precision"] for m in series),
                "false_positives_mean": statistics.mean(m["false_positives"] for m in series),
            }
            for label, series in ablation_accumulator.items()
        }
    if sweep:
        report.key_size_sweep = key_size_sweep(seeds=seeds)
    report.timings["total_seconds"] = time.perf_counter() - started
    return report


def _verify_planted_truth(corpus: GeneratedCorpus) -> None:
    """Planted joinability must survive contact with the discovery pipeline.

    Checked via one masked run per query against its target table; a full
    oracle pass over a large corpus would defeat the point of a benchmark.
    Without unique key tokens accidental joins may add to the planted
    score, so the truth is only a floor.
    """
    stats = corpus.catalog.stats
    hasher = make_hasher("xash", 128, corpus_stats=stats)
    index = build_index(corpus.catalog, hasher)
    for query in corpus.queries:
        expected = query.true_joinability
        if expected == 0:
            continue
        run = discover_topk(
            QueryKey(query.table, query.key_columns, len(corpus.catalog.table_ids)), index
        )
        found = {e.table_id: e.joinability for e in run.result.entries}
        got = found.get(query.target_table, 0)
        ok = got == expected if corpus.truth_is_exact else got >= expected
        if not ok:
            raise ConsistencyError(
                f"planted truth violated for query {query.query_id}: expected "
                f"{'exactly' if corpus.truth_is_exact else 'at least'} "
                f"{expected} at table {query.target_table}, found {got}"
            )


# -- analytic collision comparison ------------------------------------------------


@dataclass(frozen=True)
class CollisionCheck:
    bits: int
    rare_chars: int
    lhbf_side: Fraction
    xash_side: Fraction
    char_only_holds: bool
    lhbf_side_with_length: Fraction
    xash_side_with_length: Fraction
    with_length_holds: bool


def analytic_collision_check(bits: int, rare_chars: int) -> CollisionCheck:
    """Exact comparison of pairwise collision odds: two-hash Bloom vs xash.

    The xash side is the probability that a random other value selects the
    same ``rare_chars`` characters into the same position buckets; the
    length-augmented variant also charges for agreeing on the length bit.
    Everything is evaluated in exact rational arithmetic.
    """
    if bits not in (128, 256, 512):
        raise InputError("bits must be one of 128, 256, 512")
    if not 1 <= rare_chars <= 37:
        raise InputError("the character count must lie in [1, 37]")
    params = compute_params(bits, 1)
    beta = params.segment_width
    k = rare_chars

    lhbf_char = Fraction(2, bits * (bits - 1))
    xash_char = Fraction(1, beta) * Fraction(1, (37 - k + 1) ** (k - 1))
    lhbf_len = Fraction(1, bits * (bits - 1))
    xash_len = Fraction(1, params.length_bits) * xash_char
    return CollisionCheck(
        bits=bits,
        rare_chars=k,
        lhbf_side=lhbf_char,
        xash_side=xash_char,
        char_only_holds=lhbf_char > xash_char,
        lhbf_side_with_length=lhbf_len,
        xash_side_with_length=xash_len,
        with_length_holds=lhbf_len > xash_len,
    )
