"""Top-k joinable-table discovery on composite keys.

``discover_topk`` runs the filtered pipeline: pick an initial query column,
fetch its posting lists, walk candidate tables in decreasing posting-count
order under two pruning rules, drop rows whose super key cannot mask the
query key, then verify survivors exactly. ``scr`` (verify every initial
hit) and ``mcr`` (intersect per-column fetches) are the baseline modes;
``brute_force_topk`` is the exhaustive oracle. All of them return the same
joinability scores, they only differ in how much work they do.

Joinability between a query key and a candidate table is the number of
distinct query key tuples matched under the single best injective
column mapping; ties between mappings break toward the lexicographically
smallest column tuple, ties between tables toward the smaller table id.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass

from .bits import BitArray
from .corpus import Catalog, Table
from .errors import BudgetError, CompatibilityError, InputError, NotFoundError
from .hashers import RowValueHasher
from .index import Index

MODES = ("mate", "scr", "mcr")
STRATEGIES = ("min_cardinality", "column_order", "longest_string", "worst", "best")


@dataclass(frozen=True)
class QueryKey:
    """A query table with its ordered composite-key columns and result size."""

    table: Table
    key_columns: tuple[int, ...]
    k: int

    def __post_init__(self) -> None:
        if not self.key_columns:
            raise InputError("composite key needs at least one column")
        if len(set(self.key_columns)) != len(self.key_columns):
            raise InputError("key columns must be distinct")
        for c in self.key_columns:
            if not 0 <= c < self.table.n_cols:
                raise NotFoundError(f"query table has no column {c}")
        if self.k < 1:
            raise InputError("k must be at least 1")

    def key_tuple(self, row_id: int) -> tuple[str, ...]:
        row = self.table.rows[row_id]
        return tuple(row[c] for c in self.key_columns)


@dataclass(frozen=True)
class QueryRowKey:
    row_id: int
    key_tuple: tuple[str, ...]
    super_key: BitArray


@dataclass(frozen=True)
class JoinEntry:
    table_id: int
    joinability: int
    mapping: tuple[int, ...]


@dataclass(frozen=True)
class JoinResult:
    entries: tuple[JoinEntry, ...]

    def joinability_values(self) -> list[int]:
        return sorted((e.joinability for e in self.entries), reverse=True)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class RunStats:
    """Instrumentation for one discovery run."""

    mode: str
    hasher: str
    bits: int
    k: int
    strategy: str
    initial_column: int
    tables_fetched: int = 0
    tables_pruned_rule1: int = 0
    tables_pruned_rule2: int = 0
    rows_checked: int = 0
    candidates: int = 0
    true_positives: int = 0
    false_positives: int = 0
    rows_verified: int = 0
    wall_time_ms: float = 0.0

    @property
    def precision(self) -> float:
        verified = self.true_positives + self.false_positives
        return self.true_positives / verified if verified else 1.0


@dataclass
class DiscoveryRun:
    result: JoinResult
    stats: RunStats

    def to_record(self) -> dict:
        s = self.stats
        return {
            "mode": s.mode,
            "hasher": s.hasher,
            "bits": s.bits,
            "k": s.k,
            "strategy": s.strategy,
            "initial_column": s.initial_column,
            "tables_fetched": s.tables_fetched,
            "tables_pruned_rule1": s.tables_pruned_rule1,
            "tables_pruned_rule2": s.tables_pruned_rule2,
            "rows_checked": s.rows_checked,
            "TP": s.true_positives,
            "FP": s.false_positives,
            "precision": s.precision,
            "wall_time_ms": s.wall_time_ms,
            "results": [
                {"table_id": e.table_id, "j": e.joinability, "mapping": list(e.mapping)}
                for e in self.result.entries
            ],
        }


@dataclass(frozen=True)
class FilterStats:
    candidates: int
    true_positives: int
    false_positives: int
    rows_verified: int
    precision: float


def count_filter_stats(run: DiscoveryRun) -> FilterStats:
    """Filter quality of a completed run; precision is 1.0 with nothing to verify."""
    s = run.stats
    return FilterStats(
        candidates=s.candidates,
        true_positives=s.true_positives,
        false_positives=s.false_positives,
        rows_verified=s.rows_verified,
        precision=s.precision,
    )


# -- building blocks ----------------------------------------------------------


def mapping_count(n_cols: int, key_size: int) -> int:
    """Number of size-``key_size`` column selections out of ``n_cols``."""
    if key_size < 1:
        raise InputError("key size must be at least 1")
    if n_cols < key_size:
        return 0
    return math.comb(n_cols, key_size)


def mask_covers(query_sk: BitArray, row_sk: BitArray) -> bool:
    """True when ORing the query key into the row's super key changes nothing."""
    return row_sk.covers(query_sk)


def select_initial_column(
    query_table: Table,
    key_columns: tuple[int, ...],
    strategy: str = "min_cardinality",
    index: Index | None = None,
) -> int:
    """Pick the key column whose posting lists seed candidate generation.

    ``min_cardinality`` (the default heuristic) wants few distinct values;
    ``worst``/``best`` are oracle strategies that maximize/minimize the
    actual number of fetched posting items and need the index. Ties break
    in key-column order.
    """
    if strategy == "column_order":
        return key_columns[0]
    if strategy == "min_cardinality":
        return min(key_columns, key=lambda c: (len(set(query_table.column_values(c))),
                                               key_columns.index(c)))
    if strategy == "longest_string":
        return max(
            key_columns,
            key=lambda c: (
                max((len(v) for v in query_table.column_values(c)), default=0),
                -key_columns.index(c),
            ),
        )
    if strategy in ("worst", "best"):
        if index is None:
            raise InputError(f"strategy {strategy!r} needs index access")

        def fetched(c: int) -> int:
            return sum(
                len(index.postings.get(v, ()))
                for v in set(query_table.column_values(c))
            )

        if strategy == "worst":
            return max(key_columns, key=lambda c: (fetched(c), -key_columns.index(c)))
        return min(key_columns, key=lambda c: (fetched(c), key_columns.index(c)))
    raise InputError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def build_query_superkey_map(
    query_table: Table,
    key_columns: tuple[int, ...],
    initial_column: int,
    hasher: RowValueHasher,
) -> dict[str, list[QueryRowKey]]:
    """Group query rows by initial-column value, with their aggregated keys.

    Each row's super key ORs the hashes of exactly its key values, so a
    candidate row's super key can be probed in one mask operation.
    """
    if initial_column not in key_columns:
        raise InputError("initial column must be one of the key columns")
    cache: dict[str, BitArray] = {}
    grouped: dict[str, list[QueryRowKey]] = {}
    for row_id, row in enumerate(query_table.rows):
        key_tuple = tuple(row[c] for c in key_columns)
        sk = BitArray.zeros(hasher.bits)
        for value in key_tuple:
            got = cache.get(value)
            if got is None:
                got = cache[value] = hasher.hash(value)
            sk |= got
        grouped.setdefault(row[initial_column], []).append(
            QueryRowKey(row_id, key_tuple, sk)
        )
    return grouped


class DiscoveryState:
    """Top-k heap plus the pruning threshold derived from it.

    The heap orders by (joinability, -table_id) so its root is the entry
    that final ranking (descending joinability, ascending table id) would
    drop first. Zero-score tables never enter.
    """

    def __init__(self, k: int) -> None:
        self.k = k
        self._heap: list[tuple[int, int]] = []

    @property
    def full(self) -> bool:
        return len(self._heap) >= self.k

    @property
    def threshold(self) -> int | None:
        """Joinability of the worst kept table; defined only when full."""
        return self._heap[0][0] if self.full else None

    def offer(self, table_id: int, joinability: int) -> None:
        if joinability <= 0:
            return
        entry = (joinability, -table_id)
        if not self.full:
            heapq.heappush(self._heap, entry)
        elif entry > self._heap[0]:
            heapq.heapreplace(self._heap, entry)

    def ranked(self) -> list[tuple[int, int]]:
        """(table_id, joinability) best first."""
        return [(-neg, j) for j, neg in sorted(self._heap, key=lambda e: (-e[0], -e[1]))]


def prune_table_rule1(posting_count: int, state: DiscoveryState) -> bool:
    """Stop all discovery: later tables have even fewer posting items."""
    threshold = state.threshold
    return threshold is not None and posting_count <= threshold


def prune_table_rule2(
    posting_count: int, rows_checked: int, rows_matched: int, state: DiscoveryState
) -> bool:
    """Skip the current table: even if every remaining row matches, it loses."""
    threshold = state.threshold
    return (
        threshold is not None
        and posting_count - rows_checked + rows_matched <= threshold
    )


# -- exact verification --------------------------------------------------------


def _matching_mappings(
    key_tuple: tuple[str, ...], row: list[str]
) -> list[tuple[int, ...]]:
    """All injective column mappings under which ``row`` contains the tuple.

    Column ids are assigned per key position; a candidate cell may not be
    consumed twice.
    """
    per_position: list[list[int]] = []
    for value in key_tuple:
        columns = [c for c, cell in enumerate(row) if cell == value]
        if not columns:
            return []
        per_position.append(columns)

    results: list[tuple[int, ...]] = []
    chosen: list[int] = []
    used: set[int] = set()

    def backtrack(position: int) -> None:
        if position == len(per_position):
            results.append(tuple(chosen))
            return
        for column in per_position[position]:
            if column not in used:
                used.add(column)
                chosen.append(column)
                backtrack(position + 1)
                chosen.pop()
                used.remove(column)

    backtrack(0)
    return results


def mapping_joinability(
    query_table: Table,
    key_columns: tuple[int, ...],
    candidate_table: Table,
    mapping: tuple[int, ...],
    count_row_pairs: bool = False,
) -> int:
    """Score one explicit column mapping over whole tables."""
    if len(mapping) != len(key_columns):
        raise InputError("mapping must assign one candidate column per key column")
    query_tuples = [tuple(row[c] for c in key_columns) for row in query_table.rows]
    if count_row_pairs:
        projections = [tuple(row[c] for c in mapping) for row in candidate_table.rows]
        return sum(1 for qt in query_tuples for pt in projections if qt == pt)
    projected = {tuple(row[c] for c in mapping) for row in candidate_table.rows}
    return len(set(query_tuples) & projected)


def joinability(
    query_table: Table,
    key_columns: tuple[int, ...],
    candidate_table: Table,
    candidate_pairs: list[tuple[int, int]],
    count_row_pairs: bool = False,
) -> tuple[int, tuple[int, ...]]:
    """Best (score, mapping) over the surviving (query_row, candidate_row) pairs.

    By default a distinct query key tuple counts once no matter how many
    row pairs realize it; ``count_row_pairs`` switches to counting pairs.
    """
    verdicts = _verify_pairs(query_table, key_columns, candidate_table, candidate_pairs)
    return _best_mapping(verdicts, count_row_pairs)


def _verify_pairs(
    query_table: Table,
    key_columns: tuple[int, ...],
    candidate_table: Table,
    candidate_pairs: list[tuple[int, int]],
) -> list[tuple[tuple[str, ...], int, list[tuple[int, ...]]]]:
    out = []
    for q_row, c_row in sorted(set(candidate_pairs)):
        key_tuple = tuple(query_table.rows[q_row][c] for c in key_columns)
        out.append((key_tuple, c_row, _matching_mappings(key_tuple, candidate_table.rows[c_row])))
    return out


def _best_mapping(
    verdicts: list[tuple[tuple[str, ...], int, list[tuple[int, ...]]]],
    count_row_pairs: bool,
) -> tuple[int, tuple[int, ...]]:
    tuple_buckets: dict[tuple[int, ...], set[tuple[str, ...]]] = {}
    pair_buckets: dict[tuple[int, ...], int] = {}
    for key_tuple, _c_row, mappings in verdicts:
        for mapping in mappings:
            if count_row_pairs:
                pair_buckets[mapping] = pair_buckets.get(mapping, 0) + 1
            else:
                tuple_buckets.setdefault(mapping, set()).add(key_tuple)
    buckets = (
        pair_buckets
        if count_row_pairs
        else {m: len(tuples) for m, tuples in tuple_buckets.items()}
    )
    if not buckets:
        return 0, ()
    best_score = max(buckets.values())
    best = min(m for m, score in buckets.items() if score == best_score)
    return best_score, best


# -- the discovery modes -------------------------------------------------------


def discover_topk(
    query: QueryKey,
    index: Index,
    *,
    mode: str = "mate",
    strategy: str = "min_cardinality",
    prune: bool = True,
    count_row_pairs: bool = False,
    hasher: RowValueHasher | None = None,
) -> DiscoveryRun:
    """Find the top-k joinable tables for a composite-key query.

    A caller-supplied hasher must match the index's configuration exactly;
    by default the index's own hasher is used. Tables that score zero are
    never returned.
    """
    if mode not in MODES:
        raise InputError(f"unknown mode {mode!r}; expected one of {MODES}")
    if hasher is None:
        hasher = index.hasher
    elif hasher.config != index.config:
        raise CompatibilityError(
            "query-side hasher does not match the index "
            f"({hasher.config} vs {index.config})"
        )

    started = time.perf_counter()
    initial_column = select_initial_column(query.table, query.key_columns, strategy, index)
    stats = RunStats(
        mode=mode,
        hasher=hasher.name,
        bits=hasher.bits,
        k=query.k,
        strategy=strategy,
        initial_column=initial_column,
    )
    state = DiscoveryState(query.k)
    mappings_by_table: dict[int, tuple[int, ...]] = {}

    if mode in ("mate", "scr"):
        qmap = build_query_superkey_map(query.table, query.key_columns, initial_column, hasher)
        _scan_initial_hits(
            query, index, qmap, state, stats, mappings_by_table,
            masked=(mode == "mate"), prune=prune, count_row_pairs=count_row_pairs,
        )
    else:
        _scan_intersection(query, index, state, stats, mappings_by_table, count_row_pairs)

    entries = tuple(
        JoinEntry(table_id, j, mappings_by_table[table_id]) for table_id, j in state.ranked()
    )
    stats.wall_time_ms = (time.perf_counter() - started) * 1000.0
    return DiscoveryRun(JoinResult(entries), stats)


def _scan_initial_hits(
    query: QueryKey,
    index: Index,
    qmap: dict[str, list[QueryRowKey]],
    state: DiscoveryState,
    stats: RunStats,
    mappings_by_table: dict[int, tuple[int, ...]],
    masked: bool,
    prune: bool,
    count_row_pairs: bool,
) -> None:
    by_table: dict[int, list[tuple[int, int, str]]] = {}
    for value in sorted(qmap):
        for loc in index.postings.get(value, ()):
            by_table.setdefault(loc.table_id, []).append((loc.row_id, loc.column_id, value))

    order = sorted(by_table, key=lambda t: (-len(by_table[t]), t))
    stats.tables_fetched = len(order)

    for position, table_id in enumerate(order):
        items = sorted(by_table[table_id])
        posting_count = len(items)
        if prune and prune_table_rule1(posting_count, state):
            stats.tables_pruned_rule1 = len(order) - position
            break
        table = index.catalog.get_table(table_id)
        rows_checked = 0
        rows_matched = 0
        # pair -> matching mappings, or None when not yet verified
        pairs: dict[tuple[int, int], list[tuple[int, ...]] | None] = {}
        skipped = False
        for row_id, _column_id, value in items:
            if prune and prune_table_rule2(posting_count, rows_checked, rows_matched, state):
                stats.tables_pruned_rule2 += 1
                skipped = True
                break
            row_sk = index.superkeys[(table_id, row_id)]
            item_matched = False
            for query_row in qmap[value]:
                pair = (query_row.row_id, row_id)
                if masked:
                    if mask_covers(query_row.super_key, row_sk):
                        pairs.setdefault(pair, None)
                        item_matched = True
                else:
                    if pair in pairs:
                        found = pairs[pair]
                    else:
                        found = pairs[pair] = _matching_mappings(
                            query_row.key_tuple, table.rows[row_id]
                        )
                    if found:
                        item_matched = True
            rows_checked += 1
            if item_matched:
                rows_matched += 1
        stats.rows_checked += rows_checked
        if skipped:
            continue
        score, mapping = _aggregate_table(
            query, table, pairs, stats, count_row_pairs
        )
        if score > 0:
            mappings_by_table[table_id] = mapping
            state.offer(table_id, score)


def _scan_intersection(
    query: QueryKey,
    index: Index,
    state: DiscoveryState,
    stats: RunStats,
    mappings_by_table: dict[int, tuple[int, ...]],
    count_row_pairs: bool,
) -> None:
    """Fetch every key column's posting lists and intersect the row sets."""
    per_column_rows: list[set[tuple[int, int]]] = []
    rows_by_first_value: dict[str, set[tuple[int, int]]] = {}
    fetched_tables: set[int] = set()
    for position, column in enumerate(query.key_columns):
        rows: set[tuple[int, int]] = set()
        for value in set(query.table.column_values(column)):
            for loc in index.postings.get(value, ()):
                rows.add((loc.table_id, loc.row_id))
                fetched_tables.add(loc.table_id)
                if position == 0:
                    rows_by_first_value.setdefault(value, set()).add(
                        (loc.table_id, loc.row_id)
                    )
        per_column_rows.append(rows)
    survivors = set.intersection(*per_column_rows)
    stats.tables_fetched = len(fetched_tables)

    pairs_by_table: dict[int, dict[tuple[int, int], None]] = {}
    first_column = query.key_columns[0]
    for q_row, row in enumerate(query.table.rows):
        for table_id, row_id in rows_by_first_value.get(row[first_column], ()):
            if (table_id, row_id) in survivors:
                pairs_by_table.setdefault(table_id, {})[(q_row, row_id)] = None

    for table_id in sorted(pairs_by_table):
        table = index.catalog.get_table(table_id)
        pairs: dict[tuple[int, int], list[tuple[int, ...]] | None] = dict(
            pairs_by_table[table_id]
        )
        stats.rows_checked += len(pairs)
        score, mapping = _aggregate_table(query, table, pairs, stats, count_row_pairs)
        if score > 0:
            mappings_by_table[table_id] = mapping
            state.offer(table_id, score)


def _aggregate_table(
    query: QueryKey,
    table: Table,
    pairs: dict[tuple[int, int], list[tuple[int, ...]] | None],
    stats: RunStats,
    count_row_pairs: bool,
) -> tuple[int, tuple[int, ...]]:
    verdicts = []
    verified_rows: set[int] = set()
    for (q_row, c_row), mappings in sorted(pairs.items()):
        key_tuple = query.key_tuple(q_row)
        if mappings is None:
            mappings = _matching_mappings(key_tuple, table.rows[c_row])
        verified_rows.add(c_row)
        if mappings:
            stats.true_positives += 1
        else:
            stats.false_positives += 1
        verdicts.append((key_tuple, c_row, mappings))
    stats.candidates += len(pairs)
    stats.rows_verified += len(verified_rows)
    return _best_mapping(verdicts, count_row_pairs)


# -- exhaustive oracle ---------------------------------------------------------


def brute_force_topk(
    query: QueryKey,
    catalog: Catalog,
    *,
    budget: int = 20_000_000,
    count_row_pairs: bool = False,
) -> JoinResult:
    """Exact top-k by enumerating every column mapping of every table.

    Refuses corpora where mappings x rows would exceed ``budget``.
    """
    key_size = len(query.key_columns)
    cost = sum(
        math.perm(t.n_cols, key_size) * max(1, t.n_rows)
        for t in catalog.tables
        if t.n_cols >= key_size
    )
    if cost > budget:
        raise BudgetError(f"exhaustive evaluation cost {cost} exceeds budget {budget}")

    query_tuples = {query.key_tuple(r) for r in range(query.table.n_rows)}
    scored: list[tuple[int, int, tuple[int, ...]]] = []
    for table in catalog.tables:
        if table.n_cols < key_size:
            continue
        best_score = 0
        best_mapping: tuple[int, ...] = ()
        for mapping in itertools.permutations(range(table.n_cols), key_size):
            if count_row_pairs:
                score = mapping_joinability(
                    query.table, query.key_columns, table, mapping, count_row_pairs=True
                )
            else:
                projected = {tuple(row[c] for c in mapping) for row in table.rows}
                score = len(query_tuples & projected)
            if score > best_score:  # permutations arrive in lexicographic order
                best_score, best_mapping = score, mapping
        if best_score > 0:
            scored.append((best_score, table.table_id, best_mapping))
    scored.sort(key=lambda s: (-s[0], s[1]))
    return JoinResult(
        tuple(JoinEntry(t, j, m) for j, t, m in scored[: query.k])
    )
