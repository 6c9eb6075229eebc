"""Fixed-width bit arrays.

Bit index 0 is the left-most bit, which is also the most significant bit of
byte 0 in the serialized form. All binary operations require equal widths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import CompatibilityError


@dataclass(frozen=True, slots=True)
class BitArray:
    """Immutable bit vector of a fixed width.

    The payload is kept as an int whose bit ``width - 1 - i`` holds array
    bit ``i``, so ``int.bit_count`` and bitwise ops stay cheap.
    """

    width: int
    value: int

    def __post_init__(self) -> None:
        if self.width <= 0:
            raise CompatibilityError(f"bit array width must be positive, got {self.width}")
        if self.value < 0 or self.value >> self.width:
            raise CompatibilityError("bit array payload does not fit its width")

    @classmethod
    def zeros(cls, width: int) -> BitArray:
        return cls(width, 0)

    @classmethod
    def from_indices(cls, width: int, indices: Iterable[int]) -> BitArray:
        value = 0
        for i in indices:
            if not 0 <= i < width:
                raise CompatibilityError(f"bit index {i} out of range for width {width}")
            value |= 1 << (width - 1 - i)
        return cls(width, value)

    @classmethod
    def from_string(cls, text: str) -> BitArray:
        """Parse a left-to-right string of '0'/'1' characters."""
        if not text or set(text) - {"0", "1"}:
            raise CompatibilityError(f"not a bit string: {text!r}")
        return cls(len(text), int(text, 2))

    @classmethod
    def from_bytes(cls, data: bytes, width: int) -> BitArray:
        if len(data) * 8 != width:
            raise CompatibilityError(f"{len(data)} bytes cannot hold width {width}")
        return cls(width, int.from_bytes(data, "big"))

    def to_string(self) -> str:
        return format(self.value, f"0{self.width}b")

    def to_bytes(self) -> bytes:
        if self.width % 8:
            raise CompatibilityError("only byte-aligned widths serialize to bytes")
        return self.value.to_bytes(self.width // 8, "big")

    def test(self, index: int) -> bool:
        if not 0 <= index < self.width:
            raise CompatibilityError(f"bit index {index} out of range for width {self.width}")
        return bool((self.value >> (self.width - 1 - index)) & 1)

    def popcount(self) -> int:
        return self.value.bit_count()

    def indices(self) -> Iterator[int]:
        """Yield the positions of set bits, left to right."""
        for i in range(self.width):
            if (self.value >> (self.width - 1 - i)) & 1:
                yield i

    def _check_width(self, other: BitArray) -> None:
        if self.width != other.width:
            raise CompatibilityError(
                f"width mismatch: {self.width} vs {other.width}"
            )

    def __or__(self, other: BitArray) -> BitArray:
        self._check_width(other)
        return BitArray(self.width, self.value | other.value)

    def __and__(self, other: BitArray) -> BitArray:
        self._check_width(other)
        return BitArray(self.width, self.value & other.value)

    def covers(self, other: BitArray) -> bool:
        """True when every set bit of ``other`` is also set here."""
        self._check_width(other)
        return other.value | self.value == self.value

    def __str__(self) -> str:
        return self.to_string()
