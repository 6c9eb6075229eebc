"""The xash row-value hash.

A value is encoded into a fixed-width bit array split into one length
segment followed by 37 character segments (digits, letters, space). The
encoding sets at most ``ones_budget`` bits: one length bit plus one bit per
selected character, where selection takes the globally least frequent
characters of the value and each bit's offset inside its segment encodes
the character's average position. Finally the character region is rotated
left by the value length, so that values of different lengths land their
character bits in different places.

The exact layout (segment order, bit direction, rotation amount) is part
of the on-disk index contract and must not change between releases.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path

from .bits import BitArray
from .errors import CompatibilityError, InputError

SUPPORTED_WIDTHS = (128, 256, 512)

#: The 37 hashable characters; index order fixes the character segment order.
ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyz "

#: Default global character ranking, most frequent first. Space leads, then
#: letters by typical English frequency, then digits. Any permutation of the
#: alphabet can be substituted, but index and query sides must agree.
DEFAULT_FREQUENCY_ORDER = " etaoinsrhldcumfpgwybvkxjqz0123456789"


def frequency_table_digest(frequency_order: str) -> bytes:
    """8-byte digest binding an index to its character ranking."""
    payload = json.dumps(list(frequency_order)).encode("utf-8")
    return hashlib.blake2b(payload, digest_size=8).digest()


def load_frequency_table(path: str | Path) -> str:
    """Load a ranking file: a JSON array of 37 single-character strings."""
    try:
        entries = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read frequency table {path}: {exc}") from exc
    if (
        not isinstance(entries, list)
        or len(entries) != len(ALPHABET)
        or any(not isinstance(c, str) or len(c) != 1 for c in entries)
        or sorted(entries) != sorted(ALPHABET)
    ):
        raise InputError(
            f"frequency table {path} must be a JSON array holding a permutation "
            f"of the {len(ALPHABET)}-character alphabet"
        )
    return "".join(entries)


@dataclass(frozen=True)
class XashParams:
    """Derived layout constants for one hash width and corpus size.

    ``segment_width`` is the largest width such that 37 character segments
    still leave at least one length bit; ``length_bits`` takes the rest.
    ``ones_budget`` is the smallest number of set bits whose combination
    count exceeds the corpus's distinct-value count (floored at 2: one
    length bit plus at least one character bit).
    """

    bits: int
    ones_budget: int
    segment_width: int
    length_bits: int
    frequency_order: str = DEFAULT_FREQUENCY_ORDER

    def __post_init__(self) -> None:
        if self.bits not in SUPPORTED_WIDTHS:
            raise CompatibilityError(f"hash width must be one of {SUPPORTED_WIDTHS}")
        if not (37 * self.segment_width < self.bits <= 37 * (self.segment_width + 1)):
            raise CompatibilityError("segment width is not maximal for this hash width")
        if self.length_bits != self.bits - 37 * self.segment_width:
            raise CompatibilityError("length segment must take all remaining bits")
        if self.ones_budget < 2:
            raise CompatibilityError("ones budget must allow a length bit and a character bit")
        if sorted(self.frequency_order) != sorted(ALPHABET):
            raise CompatibilityError("frequency order must be a permutation of the alphabet")

    @cached_property
    def rank(self) -> dict[str, int]:
        """Character -> frequency rank (0 = most frequent)."""
        return {c: i for i, c in enumerate(self.frequency_order)}

    @property
    def char_region_bits(self) -> int:
        return 37 * self.segment_width

    @property
    def digest(self) -> bytes:
        return frequency_table_digest(self.frequency_order)


def compute_params(
    bits: int,
    corpus_unique_count: int,
    frequency_order: str = DEFAULT_FREQUENCY_ORDER,
) -> XashParams:
    """Derive the bit layout for a hash width and distinct-value count."""
    if bits not in SUPPORTED_WIDTHS:
        raise CompatibilityError(f"hash width must be one of {SUPPORTED_WIDTHS}")
    if corpus_unique_count < 1:
        raise InputError("corpus must contain at least one distinct value")
    ones_budget = 0
    for candidate in range(2, bits + 1):
        if math.comb(bits, candidate) > corpus_unique_count:
            ones_budget = candidate
            break
    if not ones_budget:
        raise CompatibilityError(
            f"{corpus_unique_count} distinct values cannot be told apart in {bits} bits"
        )
    segment_width = (bits - 1) // 37
    return XashParams(
        bits=bits,
        ones_budget=ones_budget,
        segment_width=segment_width,
        length_bits=bits - 37 * segment_width,
        frequency_order=frequency_order,
    )


@dataclass(frozen=True)
class FeatureSet:
    """Selected characters with exact average positions, plus value length.

    ``selected`` holds at most ``ones_budget - 1`` distinct in-alphabet
    characters, least frequent first.
    """

    selected: tuple[tuple[str, Fraction], ...]
    value_length: int


def select_features(value: str, params: XashParams) -> FeatureSet:
    """Pick the least frequent in-alphabet characters of a value.

    Positions are 1-based over the full value (characters outside the
    alphabet still occupy positions); repeats contribute the exact rational
    mean of their positions. Rank ties break lexicographically.
    """
    positions: dict[str, list[int]] = {}
    for i, char in enumerate(value, start=1):
        if char in params.rank:
            positions.setdefault(char, []).append(i)
    ordered = sorted(positions, key=lambda c: (-params.rank[c], c))
    chosen = ordered[: params.ones_budget - 1]
    selected = tuple(
        (c, Fraction(sum(positions[c]), len(positions[c]))) for c in chosen
    )
    return FeatureSet(selected=selected, value_length=len(value))


def position_bit(position: Fraction | int, value_length: int, segment_width: int) -> int:
    """Map an average character position to a 1-based segment offset.

    Computes ``ceil(position * segment_width / value_length)`` in exact
    arithmetic; the result always lies in ``[1, segment_width]``.
    """
    if value_length < 1:
        raise InputError("cannot place characters in an empty value")
    pos = Fraction(position)
    if not 1 <= pos <= value_length:
        raise InputError(f"position {pos} outside [1, {value_length}]")
    numerator = pos.numerator * segment_width
    denominator = pos.denominator * value_length
    return -(-numerator // denominator)


def rotate_region(bits: BitArray, region_start: int, region_len: int, amount: int) -> BitArray:
    """Circularly rotate ``region_len`` bits left by ``amount``; the rest stay put."""
    if region_start < 0 or region_len < 0 or region_start + region_len > bits.width:
        raise InputError(
            f"region [{region_start}, {region_start + region_len}) outside width {bits.width}"
        )
    if amount < 0:
        raise InputError("rotation amount must be non-negative")
    if region_len == 0:
        return bits
    amount %= region_len
    if amount == 0:
        return bits
    tail_bits = bits.width - (region_start + region_len)
    region_mask = ((1 << region_len) - 1) << tail_bits
    region = (bits.value & region_mask) >> tail_bits
    rotated = ((region << amount) | (region >> (region_len - amount))) & ((1 << region_len) - 1)
    return BitArray(bits.width, (bits.value & ~region_mask) | (rotated << tail_bits))


def xash(value: str, params: XashParams) -> BitArray:
    """Hash one normalized value into its fixed-width bit array.

    Layout: bits ``[0, length_bits)`` form the length segment; the rest is
    37 segments of ``segment_width`` bits in alphabet order. One length bit
    is set at ``len(value) % length_bits``, one bit per selected character
    at its position offset, and the whole character region is rotated left
    by ``len(value)``.
    """
    features = select_features(value, params)
    length = features.value_length
    indices = [length % params.length_bits]
    for char, position in features.selected:
        offset = position_bit(position, length, params.segment_width)
        segment = ALPHABET.index(char)
        indices.append(params.length_bits + segment * params.segment_width + offset - 1)
    raw = BitArray.from_indices(params.bits, indices)
    return rotate_region(
        raw,
        params.length_bits,
        params.char_region_bits,
        length % params.char_region_bits,
    )
