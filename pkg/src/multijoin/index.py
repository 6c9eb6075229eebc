"""Extended inverted index: postings plus one super key per row.

The super key of a row is the bitwise OR of the hash of every cell value in
that row, so any subset of the row's values is masked by it. Postings map
each normalized value to every (table, column, row) where it occurs.

Edits keep the index equal to what a fresh build of the edited corpus
would produce: row and column ids stay dense (deletes renumber the ids
after the gap), table ids are monotone and never reused. Row deletion
never re-hashes surviving rows; column deletion and cell updates do, since
bits contributed by a removed value cannot be subtracted from an OR.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

from .bits import BitArray
from .corpus import Catalog, CellLocation, Table, handles_from_jsonl
from .errors import FormatError, InputError, NotFoundError
from .hashers import HasherConfig, RowValueHasher, hasher_from_config
from .xash import DEFAULT_FREQUENCY_ORDER

MAGIC = b"MATEIDX1"
FORMAT_VERSION = 1

CATALOG_FILE = "catalog.jsonl"
TERMS_FILE = "terms.bin"
POSTINGS_FILE = "postings.bin"
SUPERKEYS_FILE = "superkeys.bin"

_POSTING_STRUCT = struct.Struct("<IHI")  # table_id, column_id, row_id
_SUPERKEY_KEY_STRUCT = struct.Struct("<II")  # table_id, row_id


def _loc_order(loc: CellLocation) -> tuple[int, int, int]:
    return (loc.table_id, loc.row_id, loc.column_id)


@dataclass(frozen=True)
class PostingList:
    value: str
    items: tuple[CellLocation, ...]

    def __len__(self) -> int:
        return len(self.items)


def super_key(row_values: Iterable[str], hasher: RowValueHasher) -> BitArray:
    """OR-fold of the hash of every value in a row; zero array for no values."""
    result = BitArray.zeros(hasher.bits)
    for value in row_values:
        result |= hasher.hash(value)
    return result


# -- edits ------------------------------------------------------------------


@dataclass(frozen=True)
class InsertTable:
    name: str
    rows: list[list[str]]


@dataclass(frozen=True)
class InsertRow:
    table_id: int
    values: list[str]


@dataclass(frozen=True)
class AddColumn:
    table_id: int
    values: list[str]
    name: str | None = None


@dataclass(frozen=True)
class UpdateCell:
    table_id: int
    column_id: int
    row_id: int
    value: str


@dataclass(frozen=True)
class DeleteTable:
    table_id: int


@dataclass(frozen=True)
class DeleteRow:
    table_id: int
    row_id: int


@dataclass(frozen=True)
class DeleteColumn:
    table_id: int
    column_id: int


Edit = Union[InsertTable, InsertRow, AddColumn, UpdateCell, DeleteTable, DeleteRow, DeleteColumn]

_EDIT_NAMES: dict[type, str] = {
    InsertTable: "insert_table",
    InsertRow: "insert_row",
    AddColumn: "add_column",
    UpdateCell: "update_cell",
    DeleteTable: "delete_table",
    DeleteRow: "delete_row",
    DeleteColumn: "delete_column",
}
_EDIT_TYPES = {name: cls for cls, name in _EDIT_NAMES.items()}


def _as_cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, (str, int, float)):
        return str(value)
    raise InputError(f"cell payload must be a scalar, got {type(value).__name__}")


def edit_from_json(record: dict) -> Edit:
    """Decode one edit record; see README for the field layout per variant."""
    if not isinstance(record, dict) or "edit" not in record:
        raise InputError("edit record must be an object with an 'edit' field")
    kind = record["edit"]
    try:
        if kind == "insert_table":
            rows = [[_as_cell(c) for c in row] for row in record["rows"]]
            return InsertTable(name=str(record["name"]), rows=rows)
        if kind == "insert_row":
            return InsertRow(int(record["table_id"]), [_as_cell(c) for c in record["values"]])
        if kind == "add_column":
            name = record.get("name")
            return AddColumn(
                int(record["table_id"]),
                [_as_cell(c) for c in record["values"]],
                str(name) if name is not None else None,
            )
        if kind == "update_cell":
            return UpdateCell(
                int(record["table_id"]),
                int(record["column_id"]),
                int(record["row_id"]),
                _as_cell(record["value"]),
            )
        if kind == "delete_table":
            return DeleteTable(int(record["table_id"]))
        if kind == "delete_row":
            return DeleteRow(int(record["table_id"]), int(record["row_id"]))
        if kind == "delete_column":
            return DeleteColumn(int(record["table_id"]), int(record["column_id"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad {kind!r} edit record: {exc}") from exc
    raise InputError(f"unknown edit kind {kind!r}")


def edit_to_json(edit: Edit) -> dict:
    name = _EDIT_NAMES[type(edit)]
    record: dict = {"edit": name}
    record.update({k: v for k, v in vars(edit).items() if v is not None})
    return record


def apply_edit_to_catalog(catalog: Catalog, edit: Edit) -> None:
    """Apply the corpus-side effect of an edit (no index maintenance)."""
    if isinstance(edit, InsertTable):
        catalog.add_table(edit.name, [list(r) for r in edit.rows])
    elif isinstance(edit, InsertRow):
        catalog.insert_row(edit.table_id, list(edit.values))
    elif isinstance(edit, AddColumn):
        catalog.add_column(edit.table_id, list(edit.values), edit.name)
    elif isinstance(edit, UpdateCell):
        catalog.update_cell(edit.table_id, edit.column_id, edit.row_id, edit.value)
    elif isinstance(edit, DeleteTable):
        catalog.delete_table(edit.table_id)
    elif isinstance(edit, DeleteRow):
        catalog.delete_row(edit.table_id, edit.row_id)
    elif isinstance(edit, DeleteColumn):
        catalog.delete_column(edit.table_id, edit.column_id)
    else:
        raise InputError(f"unknown edit {edit!r}")


# -- the index ---------------------------------------------------------------


class Index:
    """Immutable after build/load except through :meth:`apply_edit`.

    Concurrent reads are safe; edits require exclusive access.
    """

    def __init__(
        self,
        catalog: Catalog,
        hasher: RowValueHasher,
        postings: dict[str, list[CellLocation]],
        superkeys: dict[tuple[int, int], BitArray],
    ) -> None:
        self.catalog = catalog
        self.hasher = hasher
        self.postings = postings
        self.superkeys = superkeys

    # -- queries -----------------------------------------------------------

    def lookup(self, value: str) -> PostingList:
        """Posting list of a normalized value; empty when absent."""
        return PostingList(value, tuple(self.postings.get(value, ())))

    def super_key_of(self, table_id: int, row_id: int) -> BitArray:
        try:
            return self.superkeys[(table_id, row_id)]
        except KeyError:
            raise NotFoundError(f"no super key for table {table_id} row {row_id}") from None

    @property
    def config(self) -> HasherConfig:
        return self.hasher.config

    def n_postings(self) -> int:
        return sum(len(items) for items in self.postings.values())

    # -- incremental maintenance -------------------------------------------

    def _hash_value(self, value: str, cache: dict[str, BitArray] | None = None) -> BitArray:
        if cache is None:
            return self.hasher.hash(value)
        got = cache.get(value)
        if got is None:
            got = cache[value] = self.hasher.hash(value)
        return got

    def _add_posting(self, value: str, loc: CellLocation) -> None:
        items = self.postings.setdefault(value, [])
        items.append(loc)
        items.sort(key=_loc_order)

    def _remove_posting(self, value: str, loc: CellLocation) -> None:
        items = self.postings.get(value)
        if not items or loc not in items:
            raise NotFoundError(f"no posting for {value!r} at {loc}")
        items.remove(loc)
        if not items:
            del self.postings[value]

    def _index_table(self, table: Table, cache: dict[str, BitArray] | None = None) -> None:
        tid = table.table_id
        for row_id, row in enumerate(table.rows):
            key = BitArray.zeros(self.hasher.bits)
            for column_id, value in enumerate(row):
                self._add_posting(value, CellLocation(tid, column_id, row_id))
                key |= self._hash_value(value, cache)
            self.superkeys[(tid, row_id)] = key

    def _add_table_postings(self, table: Table) -> None:
        tid = table.table_id
        for row_id, row in enumerate(table.rows):
            for column_id, value in enumerate(row):
                self._add_posting(value, CellLocation(tid, column_id, row_id))

    def _drop_table_entries(self, table: Table) -> None:
        tid = table.table_id
        for value in {cell for row in table.rows for cell in row}:
            remaining = [loc for loc in self.postings[value] if loc.table_id != tid]
            if remaining:
                self.postings[value] = remaining
            else:
                del self.postings[value]
        for row_id in range(table.n_rows):
            del self.superkeys[(tid, row_id)]

    def apply_edit(self, edit: Edit) -> None:
        """Apply one edit; afterwards the index equals a fresh build of the
        edited corpus."""
        if isinstance(edit, InsertTable):
            handle = self.catalog.add_table(edit.name, [list(r) for r in edit.rows])
            self._index_table(self.catalog.get_table(handle.table_id))
        elif isinstance(edit, InsertRow):
            row_id = self.catalog.insert_row(edit.table_id, list(edit.values))
            table = self.catalog.get_table(edit.table_id)
            row = table.rows[row_id]
            key = BitArray.zeros(self.hasher.bits)
            for column_id, value in enumerate(row):
                self._add_posting(value, CellLocation(edit.table_id, column_id, row_id))
                key |= self.hasher.hash(value)
            self.superkeys[(edit.table_id, row_id)] = key
        elif isinstance(edit, AddColumn):
            column_id = self.catalog.add_column(edit.table_id, list(edit.values), edit.name)
            table = self.catalog.get_table(edit.table_id)
            for row_id, row in enumerate(table.rows):
                value = row[column_id]
                self._add_posting(value, CellLocation(edit.table_id, column_id, row_id))
                # New value only adds bits; the old key stays valid under OR.
                self.superkeys[(edit.table_id, row_id)] |= self.hasher.hash(value)
        elif isinstance(edit, UpdateCell):
            table = self.catalog.get_table(edit.table_id)
            if not 0 <= edit.row_id < table.n_rows:
                raise NotFoundError(f"table {edit.table_id} has no row {edit.row_id}")
            if not 0 <= edit.column_id < table.n_cols:
                raise NotFoundError(f"table {edit.table_id} has no column {edit.column_id}")
            old_value = table.rows[edit.row_id][edit.column_id]
            loc = CellLocation(edit.table_id, edit.column_id, edit.row_id)
            self.catalog.update_cell(edit.table_id, edit.column_id, edit.row_id, edit.value)
            new_value = table.rows[edit.row_id][edit.column_id]
            if new_value != old_value:
                self._remove_posting(old_value, loc)
                self._add_posting(new_value, loc)
            # The old value's bits may not be shared by the rest of the row,
            # so the whole row is re-hashed.
            self.superkeys[(edit.table_id, edit.row_id)] = super_key(
                table.rows[edit.row_id], self.hasher
            )
        elif isinstance(edit, DeleteTable):
            table = self.catalog.get_table(edit.table_id)
            self._drop_table_entries(table)
            self.catalog.delete_table(edit.table_id)
        elif isinstance(edit, DeleteRow):
            table = self.catalog.get_table(edit.table_id)
            if not 0 <= edit.row_id < table.n_rows:
                raise NotFoundError(f"table {edit.table_id} has no row {edit.row_id}")
            # Surviving rows keep their bit arrays; only ids after the gap shift.
            kept_keys = [
                self.superkeys[(edit.table_id, r)]
                for r in range(table.n_rows)
                if r != edit.row_id
            ]
            self._drop_table_entries(table)
            self.catalog.delete_row(edit.table_id, edit.row_id)
            for row_id, key in enumerate(kept_keys):
                self.superkeys[(edit.table_id, row_id)] = key
            self._add_table_postings(table)
        elif isinstance(edit, DeleteColumn):
            table = self.catalog.get_table(edit.table_id)
            if not 0 <= edit.column_id < table.n_cols:
                raise NotFoundError(f"table {edit.table_id} has no column {edit.column_id}")
            if table.n_cols == 1:
                raise InputError(f"cannot delete the last column of table {edit.table_id}")
            self._drop_table_entries(table)
            self.catalog.delete_column(edit.table_id, edit.column_id)
            # Removed values may have contributed bits nothing else sets.
            self._index_table(table)
        else:
            raise InputError(f"unknown edit {edit!r}")


# -- persistence --------------------------------------------------------------


def _pack_header(config: HasherConfig, record_count: int) -> bytes:
    token = config.name.encode("ascii")
    return b"".join(
        (
            MAGIC,
            struct.pack("<H", FORMAT_VERSION),
            struct.pack("<B", len(token)),
            token,
            struct.pack(
                "<HHHHHQ",
                config.bits,
                config.ones_budget,
                config.segment_width,
                config.length_bits,
                config.hash_count,
                config.seed,
            ),
            config.digest,
            struct.pack("<Q", record_count),
        )
    )


def _checksum(body: bytes) -> bytes:
    return hashlib.blake2b(body, digest_size=8).digest()


def _read_header(data: bytes, path: Path) -> tuple[HasherConfig, int, int]:
    """Return (config, record_count, body_offset); checksum already verified."""
    if len(data) < len(MAGIC) + 3:
        raise FormatError(f"{path} is truncated")
    if data[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path} has a bad magic header")
    offset = len(MAGIC)
    (version,) = struct.unpack_from("<H", data, offset)
    offset += 2
    if version != FORMAT_VERSION:
        raise FormatError(f"{path} has unsupported version {version}")
    (token_len,) = struct.unpack_from("<B", data, offset)
    offset += 1
    token = data[offset : offset + token_len].decode("ascii")
    offset += token_len
    bits, ones, seg, length_bits, hash_count, seed = struct.unpack_from("<HHHHHQ", data, offset)
    offset += struct.calcsize("<HHHHHQ")
    digest = data[offset : offset + 8]
    offset += 8
    (count,) = struct.unpack_from("<Q", data, offset)
    offset += 8
    config = HasherConfig(
        name=token,
        bits=bits,
        ones_budget=ones,
        segment_width=seg,
        length_bits=length_bits,
        hash_count=hash_count,
        seed=seed,
        digest=digest,
    )
    return config, count, offset


def _read_checked(path: Path) -> bytes:
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if len(data) < 8:
        raise FormatError(f"{path} is truncated")
    body, stored = data[:-8], data[-8:]
    if _checksum(body) != stored:
        raise FormatError(f"{path} failed its checksum")
    return body


def build_index(catalog: Catalog, hasher: RowValueHasher) -> Index:
    """Hash and index every row of every table in the catalog."""
    index = Index(catalog, hasher, {}, {})
    cache: dict[str, BitArray] = {}
    postings = index.postings
    superkeys = index.superkeys
    width = hasher.bits
    for table in catalog.tables:
        tid = table.table_id
        for row_id, row in enumerate(table.rows):
            key_value = 0
            for column_id, value in enumerate(row):
                postings.setdefault(value, []).append(CellLocation(tid, column_id, row_id))
                got = cache.get(value)
                if got is None:
                    got = cache[value] = hasher.hash(value)
                key_value |= got.value
            superkeys[(tid, row_id)] = BitArray(width, key_value)
    for items in postings.values():
        items.sort(key=_loc_order)
    return index


def save_index(index: Index, directory: str | Path) -> None:
    """Persist the index; identical inputs produce byte-identical files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    config = index.config

    postings_chunks: list[bytes] = []
    terms_chunks: list[bytes] = []
    offset = 0
    n_items = 0
    for value in sorted(index.postings):
        items = index.postings[value]
        encoded = value.encode("utf-8")
        terms_chunks.append(struct.pack("<I", len(encoded)))
        terms_chunks.append(encoded)
        terms_chunks.append(struct.pack("<QI", offset, len(items)))
        for loc in items:
            postings_chunks.append(_POSTING_STRUCT.pack(loc.table_id, loc.column_id, loc.row_id))
        offset += len(items) * _POSTING_STRUCT.size
        n_items += len(items)

    superkey_chunks: list[bytes] = []
    for (table_id, row_id) in sorted(index.superkeys):
        superkey_chunks.append(_SUPERKEY_KEY_STRUCT.pack(table_id, row_id))
        superkey_chunks.append(index.superkeys[(table_id, row_id)].to_bytes())

    files = {
        TERMS_FILE: _pack_header(config, len(index.postings)) + b"".join(terms_chunks),
        POSTINGS_FILE: _pack_header(config, n_items) + b"".join(postings_chunks),
        SUPERKEYS_FILE: _pack_header(config, len(index.superkeys)) + b"".join(superkey_chunks),
    }
    for name, body in files.items():
        (directory / name).write_bytes(body + _checksum(body))
    (directory / CATALOG_FILE).write_text(index.catalog.to_jsonl(), encoding="utf-8")


def load_index(
    directory: str | Path,
    frequency_order: str = DEFAULT_FREQUENCY_ORDER,
) -> Index:
    """Load a persisted index; the catalog's cell values are rebuilt from
    the postings, which cover every cell."""
    directory = Path(directory)
    try:
        handles = handles_from_jsonl((directory / CATALOG_FILE).read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"cannot read {directory / CATALOG_FILE}: {exc}") from exc

    terms_body = _read_checked(directory / TERMS_FILE)
    postings_body = _read_checked(directory / POSTINGS_FILE)
    superkeys_body = _read_checked(directory / SUPERKEYS_FILE)

    config, n_terms, terms_at = _read_header(terms_body, directory / TERMS_FILE)
    p_config, n_items, postings_at = _read_header(postings_body, directory / POSTINGS_FILE)
    s_config, n_keys, superkeys_at = _read_header(superkeys_body, directory / SUPERKEYS_FILE)
    if config != p_config or config != s_config:
        raise FormatError(f"{directory}: index files disagree on hasher configuration")
    hasher = hasher_from_config(config, frequency_order)

    grids: dict[int, list[list[str | None]]] = {}
    for handle in handles:
        grids[handle.table_id] = [[None] * handle.n_cols for _ in range(handle.n_rows)]

    postings: dict[str, list[CellLocation]] = {}
    postings_data = postings_body[postings_at:]
    if len(postings_data) != n_items * _POSTING_STRUCT.size:
        raise FormatError(f"{directory / POSTINGS_FILE} length disagrees with its header")
    at = terms_at
    for _ in range(n_terms):
        try:
            (value_len,) = struct.unpack_from("<I", terms_body, at)
            at += 4
            value = terms_body[at : at + value_len].decode("utf-8")
            at += value_len
            item_offset, item_count = struct.unpack_from("<QI", terms_body, at)
            at += 12
        except (struct.error, UnicodeDecodeError) as exc:
            raise FormatError(f"{directory / TERMS_FILE} is corrupt: {exc}") from exc
        items = []
        for i in range(item_count):
            start = item_offset + i * _POSTING_STRUCT.size
            try:
                table_id, column_id, row_id = _POSTING_STRUCT.unpack_from(postings_data, start)
            except struct.error as exc:
                raise FormatError(f"{directory / POSTINGS_FILE} is corrupt: {exc}") from exc
            loc = CellLocation(table_id, column_id, row_id)
            items.append(loc)
            grid = grids.get(table_id)
            if grid is None or row_id >= len(grid) or column_id >= len(grid[row_id]):
                raise FormatError(f"posting {loc} points outside the catalog")
            grid[row_id][column_id] = value
        postings[value] = items
    if at != len(terms_body):
        raise FormatError(f"{directory / TERMS_FILE} has trailing bytes")

    superkeys: dict[tuple[int, int], BitArray] = {}
    key_bytes = config.bits // 8
    record = _SUPERKEY_KEY_STRUCT.size + key_bytes
    superkeys_data = superkeys_body[superkeys_at:]
    if len(superkeys_data) != n_keys * record:
        raise FormatError(f"{directory / SUPERKEYS_FILE} length disagrees with its header")
    for i in range(n_keys):
        start = i * record
        table_id, row_id = _SUPERKEY_KEY_STRUCT.unpack_from(superkeys_data, start)
        payload = superkeys_data[start + _SUPERKEY_KEY_STRUCT.size : start + record]
        superkeys[(table_id, row_id)] = BitArray.from_bytes(payload, config.bits)

    catalog = Catalog()
    for handle in handles:
        grid = grids[handle.table_id]
        for row_id, row in enumerate(grid):
            if any(cell is None for cell in row):
                raise FormatError(
                    f"table {handle.table_id} row {row_id} is not fully covered by postings"
                )
        table = Table(
            handle.table_id,
            handle.name,
            [f"col{i}" for i in range(handle.n_cols)],
            [[cell for cell in row] for row in grid],  # type: ignore[misc]
            source_path=handle.source_path,
        )
        catalog._tables[handle.table_id] = table
        catalog._next_id = max(catalog._next_id, handle.table_id + 1)
        if handle.n_rows and (handle.table_id, 0) not in superkeys:
            raise FormatError(f"table {handle.table_id} has rows but no super keys")
    catalog._touch()

    return Index(catalog, hasher, postings, superkeys)
