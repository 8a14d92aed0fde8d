#!/usr/bin/env python3
"""Standalone reference generator for the permutation conformance vectors.

Implements the documented splitmix64 + modulo-rejection + Fisher-Yates
construction directly in pure Python, with no dependency on the library,
and writes ``permutation_vectors.txt``.  Run once; the output is frozen
and checked into the repository.

File format, one vector per line:

    <seed-hex> <length> <i0,i1,...>
"""

import os

GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK = (1 << 64) - 1


def next_u64(state):
    state = (state + GAMMA) & MASK
    z = state
    z = ((z ^ (z >> 30)) * MIX1) & MASK
    z = ((z ^ (z >> 27)) * MIX2) & MASK
    z ^= z >> 31
    return state, z


def bounded(state, r):
    limit = (1 << 64) - ((1 << 64) % r)
    while True:
        state, z = next_u64(state)
        if z < limit:
            return state, z % r


def permutation(seed, length):
    perm = list(range(length))
    state = seed & MASK
    for i in range(length - 1, 0, -1):
        state, j = bounded(state, i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


VECTORS = [
    (0x0000000000000000, 1),
    (0x0000000000000000, 8),
    (0x0000000000000001, 8),
    (0x123456789ABCDEF0, 8),
    (0xDEADBEEFCAFEBABE, 16),
    (0x0000000000000042, 32),
    (0xFFFFFFFFFFFFFFFF, 32),
    (0x0123456789ABCDEF, 100),
    (0x5555555555555555, 257),
    (0xA5A5A5A5A5A5A5A5, 1000),
]


def main():
    out = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                       "permutation_vectors.txt")
    with open(out, "w") as fh:
        fh.write("# seed-hex length permutation\n")
        for seed, length in VECTORS:
            perm = permutation(seed, length)
            fh.write("%016x %d %s\n" % (seed, length,
                                        ",".join(str(i) for i in perm)))
    print("wrote", out)


if __name__ == "__main__":
    main()
