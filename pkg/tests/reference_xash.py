"""Straight-line reference construction of the structured hash.

Deliberately independent of the package: everything is spelled out on
strings and lists so the tests can cross-check the production bit layout
against a second, dumber implementation.
"""

from __future__ import annotations

from fractions import Fraction

REF_ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyz "
REF_FREQUENCY = " etaoinsrhldcumfpgwybvkxjqz0123456789"  # most frequent first


def reference_xash(
    value: str,
    bits: int = 128,
    ones_budget: int = 4,
    frequency: str = REF_FREQUENCY,
) -> str:
    """Return the hash as a '0'/'1' string, bit 0 left-most."""
    segment_width = (bits - 1) // 37
    length_bits = bits - 37 * segment_width

    out = ["0"] * bits
    length = len(value)
    out[length % length_bits] = "1"

    positions: dict[str, list[int]] = {}
    for i, ch in enumerate(value):
        if ch in REF_ALPHABET:
            positions.setdefault(ch, []).append(i + 1)  # 1-based positions

    # least frequent first; lexicographic on rank ties
    ranked = sorted(positions, key=lambda c: (-frequency.index(c), c))
    for ch in ranked[: ones_budget - 1]:
        mean = Fraction(sum(positions[ch]), len(positions[ch]))
        # ceil(mean * width / length) without floats
        numerator = mean.numerator * segment_width
        denominator = mean.denominator * length
        offset = -(-numerator // denominator)
        bit = length_bits + REF_ALPHABET.index(ch) * segment_width + (offset - 1)
        out[bit] = "1"

    region = out[length_bits:]
    shift = length % len(region)
    region = region[shift:] + region[:shift]
    return "".join(out[:length_bits] + region)
