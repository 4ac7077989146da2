"""Coalitions as fixed-capacity bitsets, binomial tables, and kernel weights.

Players are indexed 0..d-1 internally; all user-facing text renders them
1-based. A coalition is stored as an integer bitmask where bit i set means
player i is present. The textual form is a binary string of length d with
player 0 leftmost, e.g. "1010" is {0, 2} for d=4.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

MAX_PLAYERS = 128


class InvalidDimensionError(ValueError):
    """Raised when a player count is out of the supported range."""


def _check_d(d: int) -> None:
    if not isinstance(d, int) or d < 1 or d > MAX_PLAYERS:
        raise InvalidDimensionError(
            f"player count must be an integer in [1, {MAX_PLAYERS}], got {d!r}"
        )


@dataclass(frozen=True)
class Coalition:
    """An immutable subset of the d players, held as a bitmask."""

    mask: int
    d: int

    def __post_init__(self) -> None:
        _check_d(self.d)
        if self.mask < 0 or self.mask >> self.d:
            raise ValueError(
                f"mask {self.mask:#x} has bits outside the {self.d}-player range"
            )

    @staticmethod
    def empty(d: int) -> "Coalition":
        return Coalition(0, d)

    @staticmethod
    def full(d: int) -> "Coalition":
        return Coalition((1 << d) - 1, d)

    @staticmethod
    def of(members: Sequence[int], d: int) -> "Coalition":
        mask = 0
        for i in members:
            if not 0 <= i < d:
                raise ValueError(f"player index {i} out of range for d={d}")
            mask |= 1 << i
        return Coalition(mask, d)

    @staticmethod
    def from_bitstring(text: str) -> "Coalition":
        if not text or any(ch not in "01" for ch in text):
            raise ValueError(f"not a coalition bitstring: {text!r}")
        d = len(text)
        mask = 0
        for i, ch in enumerate(text):
            if ch == "1":
                mask |= 1 << i
        return Coalition(mask, d)

    def bitstring(self) -> str:
        return "".join("1" if self.mask >> i & 1 else "0" for i in range(self.d))

    def size(self) -> int:
        return self.mask.bit_count()

    def members(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.d) if self.mask >> i & 1)

    def has(self, player: int) -> bool:
        return bool(self.mask >> player & 1)

    def add(self, player: int) -> "Coalition":
        if not 0 <= player < self.d:
            raise ValueError(f"player index {player} out of range for d={self.d}")
        return Coalition(self.mask | (1 << player), self.d)

    def union(self, other: "Coalition") -> "Coalition":
        self._check_same_d(other)
        return Coalition(self.mask | other.mask, self.d)

    def intersection(self, other: "Coalition") -> "Coalition":
        self._check_same_d(other)
        return Coalition(self.mask & other.mask, self.d)

    def complement(self) -> "Coalition":
        return Coalition(self.mask ^ ((1 << self.d) - 1), self.d)

    def issubset(self, other: "Coalition") -> bool:
        self._check_same_d(other)
        return self.mask & ~other.mask == 0

    def _check_same_d(self, other: "Coalition") -> None:
        if self.d != other.d:
            raise ValueError(f"dimension mismatch: d={self.d} vs d={other.d}")

    def __str__(self) -> str:
        # 1-based in human-readable output.
        return "{" + ",".join(str(i + 1) for i in self.members()) + "}"


class BinomialTable:
    """Exact binomial coefficients C(n, k) for n <= max_n, via the Pascal recurrence."""

    def __init__(self, max_n: int) -> None:
        if max_n < 0:
            raise ValueError("max_n must be nonnegative")
        self.max_n = max_n
        rows: list[list[int]] = [[1]]
        for n in range(1, max_n + 1):
            prev = rows[-1]
            row = [1] * (n + 1)
            for k in range(1, n):
                row[k] = prev[k - 1] + prev[k]
            rows.append(row)
        self._rows = rows

    def value(self, n: int, k: int) -> int:
        if n < 0 or n > self.max_n:
            raise ValueError(f"n={n} outside table range [0, {self.max_n}]")
        if k < 0 or k > n:
            return 0
        return self._rows[n][k]


_TABLE = BinomialTable(0)


def binomial(n: int, k: int) -> int:
    """C(n, k) as an exact integer; 0 outside the triangle."""
    global _TABLE
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > _TABLE.max_n:
        _TABLE = BinomialTable(max(n, 2 * _TABLE.max_n, MAX_PLAYERS))
    return _TABLE.value(n, k)


def shapley_weight(s: int, d: int) -> float:
    """Kernel weight of a coalition of size s among d players.

    1 / C(d-2, s-1) for proper nonempty coalitions, 0 at the empty and
    grand coalitions.
    """
    if d < 2:
        raise InvalidDimensionError(f"kernel weight needs d >= 2, got d={d}")
    if not 0 <= s <= d:
        raise ValueError(f"coalition size {s} out of range [0, {d}]")
    if s == 0 or s == d:
        return 0.0
    return 1.0 / binomial(d - 2, s - 1)


def enumerate_subset_masks(d: int, size: int) -> Iterator[int]:
    """Yield all C(d, size) masks of the given popcount in colexicographic order.

    Colex order on fixed-size subsets coincides with ascending mask order,
    which Gosper's hack produces directly.
    """
    _check_d(d)
    if size < 0 or size > d:
        raise ValueError(f"subset size {size} out of range [0, {d}]")
    if size == 0:
        yield 0
        return
    limit = 1 << d
    mask = (1 << size) - 1
    while mask < limit:
        yield mask
        low = mask & -mask
        ripple = mask + low
        mask = ripple | ((mask ^ ripple) >> (low.bit_length() + 1))


def enumerate_subsets(d: int, size: int) -> Iterator[Coalition]:
    """Coalitions of a fixed size, in the deterministic colexicographic order."""
    for mask in enumerate_subset_masks(d, size):
        yield Coalition(mask, d)
