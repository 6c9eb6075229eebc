"""CSV corpus loading, normalization, and cataloging.

Tables keep both raw and normalized cells; the index and all equality
checks run on normalized text only. Normalization is lowercase + trim +
collapse of internal whitespace, which makes value equality
case-insensitive everywhere downstream.
"""

from __future__ import annotations

import copy
import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from .errors import InputError, NotFoundError


def normalize_value(raw: str) -> str:
    """Normalize a cell: lowercase, strip, collapse runs of whitespace.

    Idempotent; the empty string maps to itself. Characters with no
    dedicated hash segment (punctuation, non-ASCII) are kept: they count
    toward the value length and character positions.
    """
    return " ".join(raw.lower().split())


class CellLocation(NamedTuple):
    """Address of one cell; all ids are 0-based."""

    table_id: int
    column_id: int
    row_id: int


@dataclass(frozen=True)
class TableHandle:
    table_id: int
    name: str
    n_rows: int
    n_cols: int
    source_path: str


@dataclass(frozen=True)
class CorpusStats:
    unique_value_count: int
    total_rows: int
    avg_columns: float


class Table:
    """One relational table: header names plus raw and normalized rows."""

    def __init__(
        self,
        table_id: int,
        name: str,
        columns: list[str],
        raw_rows: list[list[str]],
        source_path: str = "",
    ) -> None:
        self.table_id = table_id
        self.name = name
        self.columns = columns
        self.raw_rows = raw_rows
        self.rows = [[normalize_value(cell) for cell in row] for row in raw_rows]
        self.source_path = source_path

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    def handle(self) -> TableHandle:
        return TableHandle(self.table_id, self.name, self.n_rows, self.n_cols, self.source_path)

    def column_values(self, column_id: int) -> list[str]:
        if not 0 <= column_id < self.n_cols:
            raise NotFoundError(f"table {self.table_id} has no column {column_id}")
        return [row[column_id] for row in self.rows]


def _pad_rectangular(columns: list[str], rows: list[list[str]]) -> tuple[list[str], list[list[str]]]:
    width = max([len(columns)] + [len(r) for r in rows]) if rows or columns else 0
    columns = columns + [f"col{i}" for i in range(len(columns), width)]
    rows = [row + [""] * (width - len(row)) for row in rows]
    return columns, rows


def read_csv_table(
    path: str | Path,
    has_header: bool = True,
    delimiter: str = ",",
    name: str | None = None,
    table_id: int = -1,
) -> Table:
    """Read a CSV into a standalone Table (not registered anywhere).

    Ragged rows are padded with empty cells; a file with zero data rows is
    rejected.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh, delimiter=delimiter)
            records = [list(row) for row in reader]
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc

    if has_header and records:
        header, data = records[0], records[1:]
    else:
        header, data = [], records
    if not data:
        raise InputError(f"{path} has no data rows")
    if not header:
        header = [f"col{i}" for i in range(max(len(r) for r in data))]
    columns, rows = _pad_rectangular(header, data)
    if not columns:
        raise InputError(f"{path} has no columns")
    return Table(table_id, name or path.stem, columns, rows, source_path=str(path))


class Catalog:
    """Registry of ingested tables plus corpus-level statistics.

    Built single-writer; once ingestion is done the catalog is treated as
    immutable and is safe to read from any number of threads. The mutating
    methods below exist for the index-update path, which requires exclusive
    access.
    """

    def __init__(self) -> None:
        self._tables: dict[int, Table] = {}
        self._next_id = 0
        self._version = 0
        self._stats_cache: tuple[int, CorpusStats] | None = None

    # -- registration -----------------------------------------------------

    def ingest_csv(
        self,
        path: str | Path,
        has_header: bool = True,
        delimiter: str = ",",
        name: str | None = None,
    ) -> TableHandle:
        table = read_csv_table(path, has_header=has_header, delimiter=delimiter, name=name)
        return self._register(table)

    def add_table(self, name: str, raw_rows: list[list[str]], source_path: str = "") -> TableHandle:
        """Register an in-memory table; ragged rows are padded like CSV ingest."""
        if not raw_rows:
            raise InputError("a table needs at least one row")
        columns, rows = _pad_rectangular([], raw_rows)
        if not columns:
            raise InputError("a table needs at least one column")
        return self._register(Table(-1, name, columns, rows, source_path=source_path))

    def _register(self, table: Table) -> TableHandle:
        table.table_id = self._next_id
        self._next_id += 1
        self._tables[table.table_id] = table
        self._touch()
        return table.handle()

    def _touch(self) -> None:
        self._version += 1

    # -- lookups ----------------------------------------------------------

    @property
    def table_ids(self) -> list[int]:
        return sorted(self._tables)

    @property
    def tables(self) -> list[Table]:
        return [self._tables[i] for i in self.table_ids]

    def get_table(self, table_id: int) -> Table:
        try:
            return self._tables[table_id]
        except KeyError:
            raise NotFoundError(f"no table {table_id}") from None

    def get_row(self, table_id: int, row_id: int) -> list[str]:
        """Return one row's normalized cells in column order."""
        table = self.get_table(table_id)
        if not 0 <= row_id < table.n_rows:
            raise NotFoundError(f"table {table_id} has no row {row_id}")
        return list(table.rows[row_id])

    def column_cardinality(self, table_id: int, column_id: int) -> int:
        """Number of distinct normalized values in one column."""
        return len(set(self.get_table(table_id).column_values(column_id)))

    @property
    def stats(self) -> CorpusStats:
        if self._stats_cache is not None and self._stats_cache[0] == self._version:
            return self._stats_cache[1]
        unique: set[str] = set()
        total_rows = 0
        for table in self._tables.values():
            total_rows += table.n_rows
            for row in table.rows:
                unique.update(row)
        n_tables = len(self._tables)
        avg_cols = (
            sum(t.n_cols for t in self._tables.values()) / n_tables if n_tables else 0.0
        )
        stats = CorpusStats(len(unique), total_rows, avg_cols)
        self._stats_cache = (self._version, stats)
        return stats

    def copy(self) -> Catalog:
        clone = Catalog()
        clone._tables = {tid: copy.deepcopy(t) for tid, t in self._tables.items()}
        clone._next_id = self._next_id
        return clone

    # -- mutation (exclusive access required) ------------------------------

    def insert_row(self, table_id: int, raw_values: list[str]) -> int:
        table = self.get_table(table_id)
        if len(raw_values) > table.n_cols:
            raise InputError(
                f"row has {len(raw_values)} cells but table {table_id} has {table.n_cols} columns"
            )
        raw = list(raw_values) + [""] * (table.n_cols - len(raw_values))
        table.raw_rows.append(raw)
        table.rows.append([normalize_value(c) for c in raw])
        self._touch()
        return table.n_rows - 1

    def add_column(self, table_id: int, raw_values: list[str], name: str | None = None) -> int:
        table = self.get_table(table_id)
        if len(raw_values) != table.n_rows:
            raise InputError(
                f"column has {len(raw_values)} cells but table {table_id} has {table.n_rows} rows"
            )
        column_id = table.n_cols
        table.columns.append(name or f"col{column_id}")
        for row, raw_row, value in zip(table.rows, table.raw_rows, raw_values):
            raw_row.append(value)
            row.append(normalize_value(value))
        self._touch()
        return column_id

    def update_cell(self, table_id: int, column_id: int, row_id: int, raw_value: str) -> None:
        table = self.get_table(table_id)
        if not 0 <= row_id < table.n_rows:
            raise NotFoundError(f"table {table_id} has no row {row_id}")
        if not 0 <= column_id < table.n_cols:
            raise NotFoundError(f"table {table_id} has no column {column_id}")
        table.raw_rows[row_id][column_id] = raw_value
        table.rows[row_id][column_id] = normalize_value(raw_value)
        self._touch()

    def delete_table(self, table_id: int) -> None:
        if table_id not in self._tables:
            raise NotFoundError(f"no table {table_id}")
        del self._tables[table_id]
        self._touch()

    def delete_row(self, table_id: int, row_id: int) -> None:
        table = self.get_table(table_id)
        if not 0 <= row_id < table.n_rows:
            raise NotFoundError(f"table {table_id} has no row {row_id}")
        del table.raw_rows[row_id]
        del table.rows[row_id]
        self._touch()

    def delete_column(self, table_id: int, column_id: int) -> None:
        table = self.get_table(table_id)
        if not 0 <= column_id < table.n_cols:
            raise NotFoundError(f"table {table_id} has no column {column_id}")
        if table.n_cols == 1:
            raise InputError(f"cannot delete the last column of table {table_id}")
        del table.columns[column_id]
        for row, raw_row in zip(table.rows, table.raw_rows):
            del row[column_id]
            del raw_row[column_id]
        self._touch()

    # -- persistence -------------------------------------------------------

    def to_jsonl(self) -> str:
        lines = []
        for table in self.tables:
            handle = table.handle()
            lines.append(
                json.dumps(
                    {
                        "table_id": handle.table_id,
                        "name": handle.name,
                        "n_rows": handle.n_rows,
                        "n_cols": handle.n_cols,
                        "source_path": handle.source_path,
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")


def handles_from_jsonl(text: str) -> list[TableHandle]:
    handles = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            handles.append(
                TableHandle(
                    int(rec["table_id"]),
                    str(rec["name"]),
                    int(rec["n_rows"]),
                    int(rec["n_cols"]),
                    str(rec["source_path"]),
                )
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(f"bad catalog record on line {line_no}: {exc}") from exc
    return handles
