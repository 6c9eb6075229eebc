"""Row-value hashers behind one interface.

``xash`` is the structured hash; ``bf`` (Bloom), ``lhbf`` (two-function
Bloom), ``ht`` (single bit), and ``uniform`` (full-width pseudorandom) are
the baselines. All are deterministic and width-correct, so the index and
discovery layers never care which one is active. The seeded baselines share
one 64-bit keyed hash as their base function; only its uniformity matters.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from .bits import BitArray
from .corpus import CorpusStats
from .errors import CompatibilityError, InputError
from .xash import DEFAULT_FREQUENCY_ORDER, XashParams, compute_params, xash

HASHER_NAMES = ("xash", "bf", "lhbf", "ht", "uniform")

#: Fixed default seed so benchmark runs reproduce; override via flag.
DEFAULT_SEED = 0x00C0FFEE


@runtime_checkable
class RowValueHasher(Protocol):
    name: str
    bits: int

    def hash(self, value: str) -> BitArray: ...

    @property
    def config(self) -> HasherConfig: ...


@dataclass(frozen=True)
class HasherConfig:
    """Everything needed to reconstruct a hasher exactly.

    Persisted in index headers; query-side hashers must match field for
    field or masking loses its no-false-negative guarantee.
    """

    name: str
    bits: int
    ones_budget: int = 0
    segment_width: int = 0
    length_bits: int = 0
    hash_count: int = 0
    seed: int = 0
    digest: bytes = b"\x00" * 8


@dataclass(frozen=True)
class BloomParams:
    bits: int
    hash_count: int
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if not 1 <= self.hash_count <= self.bits:
            raise CompatibilityError(
                f"hash count {self.hash_count} outside [1, {self.bits}]"
            )


def optimal_bf_hash_count(bits: int, avg_columns: float) -> int:
    """Hash-function count for a Bloom filter sized to ``avg_columns`` values.

    Nearest-integer rounding of ``(bits / avg_columns) * ln 2``, floored at 1.
    """
    if avg_columns < 1:
        raise InputError("average column count must be at least 1")
    return max(1, round(bits / avg_columns * math.log(2)))


def _base_hash64(value: str, seed: int, salt: bytes) -> int:
    key = struct.pack("<Q", seed & 0xFFFFFFFFFFFFFFFF) + salt
    digest = hashlib.blake2b(value.encode("utf-8"), digest_size=8, key=key).digest()
    return int.from_bytes(digest, "little")


def _lhbf_positions(h1: int, h2: int, count: int, bits: int) -> list[int]:
    return [(h1 + i * h2) % bits for i in range(count)]


class XashHasher:
    """Structured hash; at most ``ones_budget`` bits per value."""

    name = "xash"

    def __init__(self, params: XashParams) -> None:
        self.params = params
        self.bits = params.bits

    def hash(self, value: str) -> BitArray:
        return xash(value, self.params)

    @property
    def config(self) -> HasherConfig:
        p = self.params
        return HasherConfig(
            name=self.name,
            bits=p.bits,
            ones_budget=p.ones_budget,
            segment_width=p.segment_width,
            length_bits=p.length_bits,
            digest=p.digest,
        )


class BloomHasher:
    """Classic Bloom insertion: ``hash_count`` independently salted positions."""

    name = "bf"

    def __init__(self, bits: int, hash_count: int, seed: int = DEFAULT_SEED) -> None:
        self.bloom_params = BloomParams(bits, hash_count, seed)
        self.bits = bits

    def hash(self, value: str) -> BitArray:
        p = self.bloom_params
        positions = (
            _base_hash64(value, p.seed, struct.pack("<I", i)) % p.bits
            for i in range(p.hash_count)
        )
        return BitArray.from_indices(p.bits, positions)

    @property
    def config(self) -> HasherConfig:
        p = self.bloom_params
        return HasherConfig(
            name=self.name, bits=p.bits, hash_count=p.hash_count, seed=p.seed
        )


class LhbfHasher:
    """Bloom variant deriving all positions from two base hashes."""

    name = "lhbf"

    def __init__(self, bits: int, hash_count: int, seed: int = DEFAULT_SEED) -> None:
        self.bloom_params = BloomParams(bits, hash_count, seed)
        self.bits = bits

    def hash(self, value: str) -> BitArray:
        p = self.bloom_params
        h1 = _base_hash64(value, p.seed, b"h1")
        h2 = _base_hash64(value, p.seed, b"h2")
        return BitArray.from_indices(p.bits, _lhbf_positions(h1, h2, p.hash_count, p.bits))

    @property
    def config(self) -> HasherConfig:
        p = self.bloom_params
        return HasherConfig(
            name=self.name, bits=p.bits, hash_count=p.hash_count, seed=p.seed
        )


class HtHasher:
    """Exactly one bit per value; identical to a one-function Bloom filter."""

    name = "ht"

    def __init__(self, bits: int, seed: int = DEFAULT_SEED) -> None:
        self.bits = bits
        self.seed = seed

    def hash(self, value: str) -> BitArray:
        position = _base_hash64(value, self.seed, struct.pack("<I", 0)) % self.bits
        return BitArray.from_indices(self.bits, (position,))

    @property
    def config(self) -> HasherConfig:
        return HasherConfig(name=self.name, bits=self.bits, seed=self.seed)


class UniformHasher:
    """Full-width pseudorandom bits; about half the array set per value."""

    name = "uniform"

    def __init__(self, bits: int, seed: int = DEFAULT_SEED) -> None:
        if bits % 8:
            raise CompatibilityError("uniform hash width must be byte-aligned")
        self.bits = bits
        self.seed = seed

    def hash(self, value: str) -> BitArray:
        key = struct.pack("<Q", self.seed & 0xFFFFFFFFFFFFFFFF) + b"uni"
        digest = hashlib.blake2b(
            value.encode("utf-8"), digest_size=self.bits // 8, key=key
        ).digest()
        return BitArray.from_bytes(digest, self.bits)

    @property
    def config(self) -> HasherConfig:
        return HasherConfig(name=self.name, bits=self.bits, seed=self.seed)


def bloom_hash(value: str, params: BloomParams) -> BitArray:
    return BloomHasher(params.bits, params.hash_count, params.seed).hash(value)


def lhbf_hash(value: str, bits: int, seed: int = DEFAULT_SEED, hash_count: int = 2) -> BitArray:
    return LhbfHasher(bits, hash_count, seed).hash(value)


def ht_hash(value: str, bits: int, seed: int = DEFAULT_SEED) -> BitArray:
    return HtHasher(bits, seed).hash(value)


def uniform_hash(value: str, bits: int, seed: int = DEFAULT_SEED) -> BitArray:
    return UniformHasher(bits, seed).hash(value)


def make_hasher(
    name: str,
    bits: int,
    *,
    corpus_stats: CorpusStats | None = None,
    params: XashParams | None = None,
    hash_count: int | None = None,
    seed: int = DEFAULT_SEED,
    frequency_order: str = DEFAULT_FREQUENCY_ORDER,
) -> RowValueHasher:
    """Build a hasher by its name token.

    ``xash`` derives its layout from the corpus's distinct-value count;
    ``bf``/``lhbf`` size their hash count from the corpus's average column
    count unless one is given explicitly.
    """
    if name == "xash":
        if params is None:
            unique = corpus_stats.unique_value_count if corpus_stats else 1
            params = compute_params(bits, max(1, unique), frequency_order)
        return XashHasher(params)
    if name in ("bf", "lhbf"):
        if hash_count is None:
            if corpus_stats is None:
                raise InputError(f"{name} needs corpus stats or an explicit hash count")
            hash_count = optimal_bf_hash_count(bits, max(1.0, corpus_stats.avg_columns))
        cls = BloomHasher if name == "bf" else LhbfHasher
        return cls(bits, hash_count, seed)
    if name == "ht":
        return HtHasher(bits, seed)
    if name == "uniform":
        return UniformHasher(bits, seed)
    raise InputError(f"unknown hasher {name!r}; expected one of {HASHER_NAMES}")


def hasher_from_config(
    config: HasherConfig, frequency_order: str = DEFAULT_FREQUENCY_ORDER
) -> RowValueHasher:
    """Reconstruct a hasher from a persisted config; validates the ranking digest."""
    if config.name == "xash":
        params = XashParams(
            bits=config.bits,
            ones_budget=config.ones_budget,
            segment_width=config.segment_width,
            length_bits=config.length_bits,
            frequency_order=frequency_order,
        )
        if params.digest != config.digest:
            raise CompatibilityError(
                "frequency table does not match the one the index was built with"
            )
        return XashHasher(params)
    if config.name == "bf":
        return BloomHasher(config.bits, config.hash_count, config.seed)
    if config.name == "lhbf":
        return LhbfHasher(config.bits, config.hash_count, config.seed)
    if config.name == "ht":
        return HtHasher(config.bits, config.seed)
    if config.name == "uniform":
        return UniformHasher(config.bits, config.seed)
    raise InputError(f"unknown hasher {config.name!r}")
