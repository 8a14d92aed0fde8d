"""Deterministic shared permutations derived from pre-shared key material.

Both parties derive identical permutations without communication, so the
generator below is part of the wire-level contract and is pinned
bit-exactly:

* Generator state: 64-bit, splitmix64.  Each call advances the state by
  the odd constant ``0x9E3779B97F4A7C15`` (mod 2**64) and returns the
  mixed state::

      z = state
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9   (mod 2**64)
      z = (z ^ (z >> 27)) * 0x94D049BB133111EB   (mod 2**64)
      z ^= z >> 31

* Bounded draw in ``[0, r)``: modulo rejection.  Let
  ``limit = 2**64 - (2**64 mod r)``.  Draw 64-bit values until one is
  ``< limit``, then return ``value mod r``.

* Shuffle: Fisher-Yates over ``a = [0, 1, .., len-1]``, iterating
  ``i = len-1 .. 1`` and swapping ``a[i]`` with ``a[j]`` where ``j`` is a
  bounded draw in ``[0, i+1)``.

Golden vectors for this construction live in
``conformance/permutation_vectors.txt`` and were generated by a
standalone reference implementation (``conformance/generate_vectors.py``).

Per-iteration 64-bit seeds are derived from the 256-bit master seed as
the first 8 bytes (little-endian) of ``SHA-256(seed_material || domain ||
index)`` with ``index`` a 4-byte little-endian counter.  Domain tags:
``b"perm"`` for protocol iterations, ``b"est"`` for pre-protocol
estimation rounds, ``b"discard"`` for privacy-discard position selection.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass

import numpy as np
from numba import njit

from .keymodel import IndexMap, SiftedKey

SEED_BYTES = 32

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class MasterSeed:
    """256-bit shared secret standing in for pre-established QKD key material."""

    seed_material: bytes

    def __post_init__(self) -> None:
        if len(self.seed_material) != SEED_BYTES:
            raise ValueError(f"seed material must be {SEED_BYTES} bytes")

    @classmethod
    def from_int(cls, value: int) -> "MasterSeed":
        return cls(value.to_bytes(SEED_BYTES, "little"))

    @classmethod
    def random(cls) -> "MasterSeed":
        return cls(secrets.token_bytes(SEED_BYTES))

    def derive(self, domain: bytes, index: int) -> int:
        """64-bit sub-seed for (domain, index); pure function of the material."""
        h = hashlib.sha256(
            self.seed_material + domain + index.to_bytes(4, "little")
        ).digest()
        return int.from_bytes(h[:8], "little")


@dataclass(frozen=True)
class PermutationPlan:
    """The m per-iteration shuffle seeds both parties derive identically."""

    max_iterations: int
    iteration_seeds: tuple[int, ...]

    def seed_for(self, iteration: int) -> int:
        """Seed for protocol iteration j (1-based)."""
        if not 1 <= iteration <= self.max_iterations:
            raise IndexError("iteration out of plan range")
        return self.iteration_seeds[iteration - 1]


def derive_plan(seed: MasterSeed, m: int) -> PermutationPlan:
    """Derive the m iteration seeds from the master seed.

    Prefix-stable: plans for the same seed agree on their common prefix.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    return PermutationPlan(
        max_iterations=m,
        iteration_seeds=tuple(seed.derive(b"perm", j) for j in range(1, m + 1)),
    )


@njit(cache=True)
def _fisher_yates(seed: np.uint64, length: np.int64) -> np.ndarray:  # pragma: no cover
    perm = np.arange(length, dtype=np.int64)
    state = np.uint64(seed)
    gamma = np.uint64(0x9E3779B97F4A7C15)
    mix1 = np.uint64(0xBF58476D1CE4E5B9)
    mix2 = np.uint64(0x94D049BB133111EB)
    full = np.uint64(0xFFFFFFFFFFFFFFFF)
    zero = np.uint64(0)
    for i in range(length - 1, 0, -1):
        r = np.uint64(i + 1)
        # 2**64 mod r, computed in wrapping uint64 arithmetic
        rem = ((full % r) + np.uint64(1)) % r
        while True:
            state = state + gamma
            z = state
            z = (z ^ (z >> np.uint64(30))) * mix1
            z = (z ^ (z >> np.uint64(27))) * mix2
            z = z ^ (z >> np.uint64(31))
            if rem == zero or z < zero - rem:
                break
        j = np.int64(z % r)
        tmp = perm[i]
        perm[i] = perm[j]
        perm[j] = tmp
    return perm


def splitmix64_stream(seed: int, count: int) -> list[int]:
    """First ``count`` raw 64-bit outputs of the documented generator."""
    out = []
    state = seed & _MASK64
    for _ in range(count):
        state = (state + _GAMMA) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        z ^= z >> 31
        out.append(z)
    return out


def permutation_of(iter_seed: int, length: int) -> np.ndarray:
    """The pinned Fisher-Yates permutation of ``[0, length)`` for one seed."""
    if length < 0:
        raise ValueError("length must be >= 0")
    if length == 0:
        return np.empty(0, dtype=np.int64)
    return _fisher_yates(np.uint64(iter_seed & _MASK64), np.int64(length))


def apply_permutation(
    key: SiftedKey, perm: np.ndarray, index_map: IndexMap | None = None
) -> tuple[SiftedKey, IndexMap]:
    """Rearrange a key so output bit i is input bit ``perm[i]``.

    The index map (identity when omitted) is composed with the same
    permutation so provenance follows the bits.
    """
    perm = np.asarray(perm, dtype=np.int64)
    if perm.size != len(key):
        raise ValueError("permutation length must match key length")
    if index_map is None:
        index_map = IndexMap.identity(len(key))
    return SiftedKey(key.bits[perm]), index_map.permuted(perm)
