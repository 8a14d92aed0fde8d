"""Bit-sequence representation and 4-bit parity-block machinery.

Keys are stored as numpy ``uint8`` arrays holding one logical bit per
element.  All block operations are defined on logical bit positions:
block ``k`` covers positions ``4k .. 4k+3`` of the current arrangement,
with a trailing partial block of 1-3 bits allowed on truncated keys.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BLOCK_BITS = 4


class SiftedKey:
    """A fixed-length sequence of bits held by one party.

    Session-initial keys must have ``n % 4 == 0`` and ``n >= 8`` (enforced
    by the protocol session, not here); truncated keys may have any
    length, including zero.
    """

    __slots__ = ("bits",)

    def __init__(self, bits) -> None:
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1:
            raise ValueError("key bits must be one-dimensional")
        if arr.size and arr.max() > 1:
            raise ValueError("key bits must be 0 or 1")
        self.bits = arr

    @classmethod
    def from_string(cls, s: str) -> "SiftedKey":
        """Build a key from a string like ``"01101000"`` (spaces ignored)."""
        s = s.replace(" ", "")
        return cls(np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0"))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "SiftedKey":
        return cls(rng.integers(0, 2, size=n, dtype=np.uint8))

    @property
    def n(self) -> int:
        return self.bits.size

    def __len__(self) -> int:
        return self.bits.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, SiftedKey):
            return NotImplemented
        return self.bits.size == other.bits.size and bool(
            np.array_equal(self.bits, other.bits)
        )

    def __repr__(self) -> str:
        if self.n <= 32:
            return f"SiftedKey({self.to01()!r})"
        return f"SiftedKey(n={self.n})"

    def to01(self) -> str:
        return "".join("01"[b] for b in self.bits)

    def hamming_distance(self, other: "SiftedKey") -> int:
        if len(self) != len(other):
            raise ValueError("length mismatch")
        return int(np.count_nonzero(self.bits != other.bits))


@dataclass(frozen=True)
class BlockRef:
    """Identifies one 4-bit block of one iteration's permuted key."""

    iteration: int
    block_index: int

    def __post_init__(self) -> None:
        if self.iteration < 1:
            raise ValueError("iteration must be >= 1")
        if self.block_index < 0:
            raise ValueError("block_index must be >= 0")


@dataclass
class IndexMap:
    """Provenance of each current position of a (truncated, permuted) key.

    ``current_to_original[p]`` is the position the bit at ``p`` occupied in
    the session-initial key; ``current_to_first_block[p]`` is the block the
    bit belonged to in the first iteration's arrangement (-1 before the
    first permutation has been applied).
    """

    current_to_original: np.ndarray
    current_to_first_block: np.ndarray

    @classmethod
    def identity(cls, n: int) -> "IndexMap":
        return cls(
            current_to_original=np.arange(n, dtype=np.int64),
            current_to_first_block=np.full(n, -1, dtype=np.int64),
        )

    def __len__(self) -> int:
        return self.current_to_original.size

    def permuted(self, perm: np.ndarray) -> "IndexMap":
        """Compose with a permutation applied to the current arrangement."""
        return IndexMap(
            current_to_original=self.current_to_original[perm],
            current_to_first_block=self.current_to_first_block[perm],
        )

    def restricted(self, keep: np.ndarray) -> "IndexMap":
        """Keep only the positions selected by ``keep`` (bool mask or index array)."""
        return IndexMap(
            current_to_original=self.current_to_original[keep],
            current_to_first_block=self.current_to_first_block[keep],
        )

    def assign_first_blocks(self) -> None:
        """Record the block structure of the current arrangement as iteration 1's."""
        n = len(self)
        self.current_to_first_block = np.arange(n, dtype=np.int64) // BLOCK_BITS


def block_count(length: int) -> int:
    """Number of 4-bit blocks covering ``length`` bits (ceiling division)."""
    if length < 0:
        raise ValueError("length must be >= 0")
    return (length + BLOCK_BITS - 1) // BLOCK_BITS


def block_parity(bits) -> int:
    """XOR of a block of 1 to 4 bits."""
    arr = np.asarray(bits, dtype=np.uint8)
    if not 1 <= arr.size <= BLOCK_BITS:
        raise ValueError("block must hold 1 to 4 bits")
    return int(arr.sum() & 1)


def all_block_parities(key) -> np.ndarray:
    """Parity of every 4-bit block of ``key``, in block order.

    Accepts a SiftedKey or a raw bit array.  The trailing partial block,
    if any, is treated as an ordinary block over its available bits.
    """
    bits = key.bits if isinstance(key, SiftedKey) else np.asarray(key, dtype=np.uint8)
    n = bits.size
    if n == 0:
        return np.empty(0, dtype=np.uint8)
    pad = (-n) % BLOCK_BITS
    if pad:
        bits = np.concatenate([bits, np.zeros(pad, dtype=np.uint8)])
    return (bits.reshape(-1, BLOCK_BITS).sum(axis=1) & 1).astype(np.uint8)


def trace_blocks(positions, index_map: IndexMap) -> set[int]:
    """First-iteration block indices containing the given current positions."""
    pos = np.asarray(sorted(positions), dtype=np.int64)
    if pos.size == 0:
        return set()
    if pos.min() < 0 or pos.max() >= len(index_map):
        raise IndexError("position out of range of current key")
    return set(int(b) for b in np.unique(index_map.current_to_first_block[pos]))
