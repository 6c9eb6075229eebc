"""Shared fixtures: the running-example corpus and random-corpus helpers."""

from __future__ import annotations

import random

import pytest

from multijoin.bits import BitArray
from multijoin.corpus import Catalog, Table

# Candidate table with German headers; the query's famous first row joins
# against row 1 (0-based). "muhammad" occurs in rows 1, 4, 5.
T1_ROWS = [
    ["Omar", "Noor", "Egypt", "Driver"],
    ["Muhammad", "Lee", "US", "Dancer"],
    ["Mia", "Kim", "UK", "Teacher"],
    ["Sara", "Chen", "Canada", "Pilot"],
    ["Muhammad", "Ali", "US", "Boxer"],
    ["Muhammad", "Lee", "Germany", "Birder"],
]
T1_COLUMNS = ["Vorname", "Nachname", "Land", "Beruf"]

T2_ROWS = [
    ["Muhammad", "Khan", "Pakistan", "Poet"],
    ["Lina", "Park", "Korea", "Chef"],
    ["Muhammad", "Diaz", "Spain", "Actor"],
]

T3_ROWS = [
    ["apple", "red", "fruit"],
    ["plum", "purple", "fruit"],
]

# Query table d: five of its six key tuples appear in T1 under the column
# mapping (Vorname, Nachname, Land) = (0, 1, 2).
QUERY_ROWS = [
    ["Muhammad", "Lee", "US"],
    ["Muhammad", "Ali", "US"],
    ["Mia", "Kim", "UK"],
    ["Sara", "Chen", "Canada"],
    ["Omar", "Noor", "Egypt"],
    ["Lina", "Park", "Korea"],
]
QUERY_COLUMNS = ["F. Name", "L. Name", "Country"]


@pytest.fixture
def example_catalog() -> Catalog:
    catalog = Catalog()
    catalog.add_table("T1", [list(r) for r in T1_ROWS])
    catalog.add_table("T2", [list(r) for r in T2_ROWS])
    catalog.add_table("T3", [list(r) for r in T3_ROWS])
    return catalog


@pytest.fixture
def example_query() -> Table:
    return Table(-1, "d", list(QUERY_COLUMNS), [list(r) for r in QUERY_ROWS])


# Toy 8-bit hash values from the worked masking example; "Muhammad" is
# given as a 7-bit string and is zero-padded on the left.
TOY_HASHES = {
    "muhammad": "01001000",
    "lee": "01100000",
    "us": "00010100",
    "ali": "00010001",
    "germany": "10001001",
    "dancer": "10000010",
    "boxer": "10000001",
    "birder": "00001001",
}


class FixedHasher:
    """Test hasher with a hard-coded value table."""

    name = "fixed"

    def __init__(self, table: dict[str, str], bits: int = 8) -> None:
        self.table = table
        self.bits = bits

    def hash(self, value: str) -> BitArray:
        return BitArray.from_string(self.table[value])

    @property
    def config(self):  # pragma: no cover - only identity matters
        from multijoin.hashers import HasherConfig

        return HasherConfig(name=self.name, bits=self.bits)


WORDS = [
    "ada", "bo", "cat", "dog", "eel", "fig", "gnu", "hen", "ivy", "jay",
    "kiwi", "lark", "mole", "newt", "owl", "pug", "quail", "rat", "seal",
    "toad", "urchin", "vole", "wasp", "yak", "zebu", "ash", "birch", "cedar",
]


def random_catalog(
    rng: random.Random,
    max_tables: int = 6,
    max_rows: int = 12,
    max_cols: int = 4,
    vocabulary: list[str] | None = None,
) -> Catalog:
    words = vocabulary or WORDS
    catalog = Catalog()
    for t in range(rng.randint(1, max_tables)):
        n_cols = rng.randint(1, max_cols)
        n_rows = rng.randint(1, max_rows)
        rows = [[rng.choice(words) for _ in range(n_cols)] for _ in range(n_rows)]
        catalog.add_table(f"t{t}", rows)
    return catalog


def random_edits(rng: random.Random, catalog: Catalog, count: int):
    """Yield valid edits against a catalog that evolves as they apply."""
    from multijoin.index import (
        AddColumn,
        DeleteColumn,
        DeleteRow,
        DeleteTable,
        InsertRow,
        InsertTable,
        UpdateCell,
    )

    words = ["red", "blue", "lime", "onyx", "pearl", "slate"]
    for _ in range(count):
        ids = catalog.table_ids
        choices = ["insert_table", "insert_row", "add_column", "update_cell"]
        if ids:
            choices += ["delete_row", "delete_column", "delete_table"]
        kind = rng.choice(choices)
        if kind == "insert_table" or not ids:
            yield InsertTable(
                f"new{rng.randrange(1000)}",
                [[rng.choice(words) for _ in range(2)] for _ in range(rng.randint(1, 3))],
            )
            continue
        table = catalog.get_table(rng.choice(ids))
        if kind == "insert_row":
            yield InsertRow(table.table_id, [rng.choice(words) for _ in range(table.n_cols)])
        elif kind == "add_column":
            yield AddColumn(table.table_id, [rng.choice(words) for _ in range(table.n_rows)])
        elif kind == "update_cell" and table.n_rows:
            yield UpdateCell(
                table.table_id,
                rng.randrange(table.n_cols),
                rng.randrange(table.n_rows),
                rng.choice(words),
            )
        elif kind == "delete_row" and table.n_rows > 1:
            yield DeleteRow(table.table_id, rng.randrange(table.n_rows))
        elif kind == "delete_column" and table.n_cols > 1:
            yield DeleteColumn(table.table_id, rng.randrange(table.n_cols))
        elif kind == "delete_table" and len(ids) > 1:
            yield DeleteTable(table.table_id)


def random_query(
    rng: random.Random,
    catalog: Catalog,
    key_size: int,
    n_rows: int = 5,
    vocabulary: list[str] | None = None,
) -> Table:
    """Query rows mix fresh vocabulary with tuples copied from corpus rows,
    so exact joins exist often but not always."""
    words = vocabulary or WORDS
    rows: list[list[str]] = []
    tables = catalog.tables
    for _ in range(n_rows):
        if rng.random() < 0.5:
            source = rng.choice(tables)
            if source.n_cols >= key_size:
                row = rng.choice(source.rows)
                columns = rng.sample(range(source.n_cols), key_size)
                rows.append([row[c] for c in columns])
                continue
        rows.append([rng.choice(words) for _ in range(key_size)])
    return Table(-1, "q", [f"k{i}" for i in range(key_size)], rows)
