"""Fixed-length bit patterns, the cover order and superposition.

A pattern is stored as one Python integer used as a packed little-endian bit
array: position ``i`` is bit ``i`` of the integer (least significant first).
That is the same layout the signature file writes, byte by byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence


class LengthMismatchError(ValueError):
    """Raised when two patterns (or a codebook and a source) disagree on length."""


@dataclass(frozen=True)
class BitPattern:
    length: int
    bits: int = 0

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("pattern length must be positive, got %d" % self.length)
        if self.bits < 0 or self.bits >> self.length:
            raise ValueError("bits set outside [0, %d)" % self.length)

    @classmethod
    def zeros(cls, length: int) -> "BitPattern":
        return cls(length, 0)

    @classmethod
    def ones(cls, length: int) -> "BitPattern":
        return cls(length, (1 << length) - 1)

    @classmethod
    def from_positions(cls, length: int, positions: Iterable[int]) -> "BitPattern":
        bits = 0
        for i in positions:
            i = int(i)  # numpy integers would overflow the shift past bit 63
            if not 0 <= i < length:
                raise ValueError("position %d outside [0, %d)" % (i, length))
            bits |= 1 << i
        return cls(length, bits)

    @classmethod
    def from_string(cls, text: str) -> "BitPattern":
        """Parse ``'0101'``; character ``i`` is bit position ``i``."""
        if not text or set(text) - {"0", "1"}:
            raise ValueError("expected a non-empty string of 0/1, got %r" % text)
        return cls(len(text), int(text[::-1], 2))

    @classmethod
    def from_bytes(cls, length: int, data: bytes) -> "BitPattern":
        if len(data) != (length + 7) // 8:
            raise ValueError("need %d bytes for %d bits" % ((length + 7) // 8, length))
        return cls(length, int.from_bytes(data, "little"))

    def to_bytes(self) -> bytes:
        return self.bits.to_bytes((self.length + 7) // 8, "little")

    @property
    def weight(self) -> int:
        return self.bits.bit_count()

    def positions(self) -> list[int]:
        out = []
        b = self.bits
        while b:
            low = b & -b
            out.append(low.bit_length() - 1)
            b ^= low
        return out

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (self.bits >> i) & 1

    def __len__(self) -> int:
        return self.length

    def __str__(self) -> str:
        return format(self.bits, "0%db" % self.length)[::-1]

    def __or__(self, other: "BitPattern") -> "BitPattern":
        return bit_or(self, other)

    def __le__(self, other: "BitPattern") -> bool:
        return covers(other, self)

    def __ge__(self, other: "BitPattern") -> bool:
        return covers(self, other)


def _check_same_length(a: BitPattern, b: BitPattern):
    if a.length != b.length:
        raise LengthMismatchError("length mismatch: %d vs %d" % (a.length, b.length))


def bit_or(a: BitPattern, b: BitPattern) -> BitPattern:
    _check_same_length(a, b)
    return BitPattern(a.length, a.bits | b.bits)


def covers(big: BitPattern, small: BitPattern) -> bool:
    """True iff every bit set in ``small`` is also set in ``big``."""
    _check_same_length(big, small)
    return small.bits & ~big.bits == 0


def superimpose(codebook: Sequence[BitPattern], source: BitPattern) -> BitPattern:
    """OR together the code words of all bits set in ``source``."""
    if len(codebook) != source.length:
        raise LengthMismatchError(
            "codebook has %d words but source has %d bits" % (len(codebook), source.length))
    n = codebook[0].length
    for word in codebook:
        if word.length != n:
            raise LengthMismatchError("codebook words differ in length")
    bits = reduce(lambda acc, j: acc | codebook[j].bits, source.positions(), 0)
    return BitPattern(n, bits)
