"""Closed-form expected mismatch-block counts and their inversion to a QBER
estimate.

The forward model: with q error bits placed uniformly at random over an
n-bit key grouped into 4-bit blocks, the expected number of blocks with
mismatching parity is

    m(n, q) = q (n-q) (n^2 - 2nq - 3n + 2q^2 + 4) / ((n-3)(n-2)(n-1))

which decomposes into the expected counts of blocks holding exactly one
error and exactly three errors.  Inverting m over its monotone range
recovers q from an observed mismatch count; a fitted cubic gives a
cheaper approximate inverse for the low-QBER operating range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.optimize import brentq

from .keymodel import BLOCK_BITS, block_count

# Fitted cubic inverse for n = 1024 and its length rescaling.
POLY_C1 = 0.00010813
POLY_C2 = -0.00778112
POLY_C3 = 1.351
POLY_C4 = 2.45078125
POLY_REF_N = 1024

_EXHAUSTIVE_MAX_N = 24


class OutOfMonotoneRangeError(ValueError):
    """Observed mismatch count exceeds what any q in the monotone range yields.

    Callers must treat the channel as too noisy for estimation.
    """


@dataclass(frozen=True)
class MismatchObservation:
    """One permutation round's worth of evidence: key length and odd-block count."""

    n: int
    mismatch_count: float

    def __post_init__(self) -> None:
        if not 0 <= self.mismatch_count <= block_count(self.n):
            raise ValueError("mismatch_count outside [0, block_count(n)]")


@dataclass(frozen=True)
class ErrorEstimate:
    """Estimated error-bit count and the derived QBER."""

    q_hat: float
    qber_hat: float
    method: str

    @classmethod
    def of(cls, q_hat: float, n: int, method: str) -> "ErrorEstimate":
        return cls(q_hat=q_hat, qber_hat=q_hat / n, method=method)


def _validate(n: int, q: float) -> None:
    if n < 8 or n % BLOCK_BITS != 0:
        raise ValueError("n must be >= 8 and divisible by 4")
    if not 0 <= q <= n:
        raise ValueError("q must lie in [0, n]")


def expected_mismatch(n: int, q: float) -> float:
    """Expected number of odd-parity blocks for q errors over n bits."""
    _validate(n, q)
    return (
        q * (n - q) * (n * n - 2 * n * q - 3 * n + 2 * q * q + 4)
        / ((n - 3) * (n - 2) * (n - 1))
    )


def expected_single_blocks(n: int, q: float) -> float:
    """Expected number of blocks containing exactly one error."""
    _validate(n, q)
    return q * (n - q - 2) * (n - q - 1) * (n - q) / ((n - 3) * (n - 2) * (n - 1))


def expected_triple_blocks(n: int, q: float) -> float:
    """Expected number of blocks containing exactly three errors."""
    _validate(n, q)
    return q * (q - 1) * (q - 2) * (n - q) / ((n - 3) * (n - 2) * (n - 1))


def exhaustive_oracle(n: int, q: int, blocks_with: int | None = None) -> Fraction:
    """Exact expected odd-block count by enumerating all C(n, q) placements.

    With ``blocks_with`` set to 1 or 3, counts blocks holding exactly that
    many errors instead of all odd-parity blocks.  Independent of the
    closed forms above; rejects n > 24 (combinatorial blowup).
    """
    _validate(n, q)
    if n > _EXHAUSTIVE_MAX_N:
        raise ValueError(f"exhaustive oracle limited to n <= {_EXHAUSTIVE_MAX_N}")
    q = int(q)
    nblocks = block_count(n)
    total = 0
    for placement in combinations(range(n), q):
        per_block = [0] * nblocks
        for pos in placement:
            per_block[pos // BLOCK_BITS] += 1
        if blocks_with is None:
            total += sum(1 for c in per_block if c & 1)
        else:
            total += sum(1 for c in per_block if c == blocks_with)
    return Fraction(total, math.comb(n, q))


def exhaustive_oracle_table(n: int) -> dict[int, Fraction]:
    """Exact expected odd-block count for every q at once, via full 2^n sweep.

    Vectorized companion of :func:`exhaustive_oracle`; enumerates all 2^n
    error patterns and averages per Hamming weight.
    """
    _validate(n, 0)
    if n > _EXHAUSTIVE_MAX_N:
        raise ValueError(f"exhaustive table limited to n <= {_EXHAUSTIVE_MAX_N}")
    totals = np.zeros(n + 1, dtype=np.int64)
    shifts = np.arange(n, dtype=np.uint32)
    chunk = 1 << 16
    for start in range(0, 1 << n, chunk):
        patterns = np.arange(start, min(start + chunk, 1 << n), dtype=np.uint32)
        bits = ((patterns[:, None] >> shifts) & 1).astype(np.int8)
        weights = bits.sum(axis=1)
        per_block = bits.reshape(len(patterns), block_count(n), BLOCK_BITS).sum(axis=2)
        odd = (per_block & 1).sum(axis=1)
        totals += np.bincount(weights, weights=odd, minlength=n + 1).astype(np.int64)
    return {q: Fraction(int(totals[q]), math.comb(n, q)) for q in range(n + 1)}


def sample_mismatch_counts(
    n: int, q: int, trials: int, rng: np.random.Generator
) -> np.ndarray:
    """Odd-block counts from ``trials`` uniform placements of exactly q errors."""
    _validate(n, q)
    q = int(q)
    counts = np.empty(trials, dtype=np.int64)
    nblocks = block_count(n)
    for t in range(trials):
        pos = rng.choice(n, size=q, replace=False)
        per_block = np.bincount(pos >> 2, minlength=nblocks)
        counts[t] = np.count_nonzero(per_block & 1)
    return counts


def monte_carlo_oracle(
    n: int, q: int, trials: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Sample mean odd-block count and its standard error."""
    counts = sample_mismatch_counts(n, q, trials, rng)
    mean = float(counts.mean())
    sem = float(counts.std(ddof=1) / np.sqrt(trials))
    return mean, sem


@lru_cache(maxsize=None)
def monotone_peak(n: int) -> tuple[float, float]:
    """(q_peak, m_peak): where the forward curve stops increasing in q.

    The forward model is quartic in q and only its initial rising branch
    is invertible; the peak is located from the derivative's smallest
    positive root and cached per n.
    """
    _validate(n, 0)
    d = (n - 3) * (n - 2) * (n - 1)
    # numerator coefficients of m(n, q) in q, highest degree first
    inner = np.array([2.0, -2.0 * n, n * n - 3.0 * n + 4.0])
    numer = np.polymul(np.polymul([-1.0, n], inner), [1.0, 0.0])
    deriv = np.polyder(numer)
    roots = np.roots(deriv)
    real = roots[np.abs(roots.imag) < 1e-9].real
    candidates = sorted(r for r in real if 0 < r < n)
    if not candidates:
        raise RuntimeError(f"no interior peak found for n={n}")
    q_peak = float(candidates[0])
    return q_peak, expected_mismatch(n, q_peak)


def invert_exact(n: int, m_bar: float, tol: float = 1e-6) -> ErrorEstimate:
    """Recover q from an expected mismatch count by bisection.

    Only the rising branch of the forward curve is considered; counts
    above its maximum raise :class:`OutOfMonotoneRangeError`.
    """
    if m_bar < 0:
        raise ValueError("m_bar must be >= 0")
    q_peak, m_peak = monotone_peak(n)
    if m_bar > m_peak:
        raise OutOfMonotoneRangeError(
            f"mismatch count {m_bar:.3f} exceeds achievable maximum "
            f"{m_peak:.3f} at n={n}"
        )
    if m_bar == 0:
        return ErrorEstimate.of(0.0, n, "exact-inversion")
    q_hat = brentq(
        lambda q: expected_mismatch(n, q) - m_bar, 0.0, q_peak, xtol=tol
    )
    return ErrorEstimate.of(float(q_hat), n, "exact-inversion")


def invert_poly(n: int, m_bar: float) -> ErrorEstimate:
    """Approximate inverse via the fitted cubic, rescaled from n = 1024.

    Fast path for the low-QBER operating range; the result is clamped to
    [0, n] to absorb approximation overshoot.  Note the cubic has a
    nonzero intercept (q = 2.45 at m_bar = 0 for n = 1024); prefer
    :func:`invert_exact` when accuracy matters.
    """
    if m_bar < 0:
        raise ValueError("m_bar must be >= 0")
    _validate(n, 0)
    s = POLY_REF_N / n
    q_hat = (
        POLY_C1 * s * s * m_bar**3
        + POLY_C2 * s * m_bar**2
        + POLY_C3 * m_bar
        + POLY_C4 / s
    )
    return ErrorEstimate.of(float(min(max(q_hat, 0.0), n)), n, "polynomial")


def estimate_from_samples(
    observations: list[MismatchObservation], method: str = "exact"
) -> ErrorEstimate:
    """Average same-n observations and invert to an error estimate.

    ``method`` selects "exact" (bisection, default) or "poly" (fast
    approximate inverse).
    """
    if not observations:
        raise ValueError("at least one observation required")
    n = observations[0].n
    if any(o.n != n for o in observations):
        raise ValueError("all observations must share the same n")
    m_bar = sum(o.mismatch_count for o in observations) / len(observations)
    if method == "exact":
        return invert_exact(n, m_bar)
    if method == "poly":
        return invert_poly(n, m_bar)
    raise ValueError(f"unknown method {method!r}")
