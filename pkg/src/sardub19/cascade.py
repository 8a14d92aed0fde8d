"""Cascade baseline: multi-pass parity blocks with interactive binary
search and back-tracking, plus its separate sample-based QBER estimation.

Accounting follows the head-to-head methodology: the estimation step
publicly compares (and removes) a fixed fraction of the key; every block
parity and every binary-search parity is counted as one disclosed bit;
independent binary searches within a pass run in batched rounds of two
frames each (one parity vector from Alice, one direction vector from
Bob).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimator import ErrorEstimate
from .keymodel import SiftedKey
from .simnet import Channel, make_channel
from .wire import BitSample, BlockParities, IndexList

DEFAULT_PASSES = 4
BLOCK_RULE_NUMERATOR = 0.73
DEFAULT_SAMPLE_FRACTION = 0.25


@dataclass(frozen=True)
class CascadeConfig:
    passes: int = DEFAULT_PASSES
    shuffle_seed: int = 0

    def __post_init__(self) -> None:
        if self.passes < 1:
            raise ValueError("passes must be >= 1")


@dataclass
class CascadeResult:
    corrected_key: SiftedKey
    parities_disclosed: int
    estimation_bits_discarded: int
    messages: int
    residual_errors: int
    qber_estimate: ErrorEstimate | None = None


def initial_block_size(qber_est: float, n: int) -> int:
    """Pass-1 block size from the standard rule, clamped to [2, n]."""
    if qber_est <= 0:
        return n
    return min(n, max(2, round(BLOCK_RULE_NUMERATOR / qber_est)))


def sample_estimate(
    alice_key: SiftedKey,
    bob_key: SiftedKey,
    fraction: float,
    seed: int,
    channel: Channel | None = None,
) -> tuple[ErrorEstimate, SiftedKey, SiftedKey]:
    """Publicly compare a random sample of positions and remove them.

    Both parties derive the sample positions from the shared seed; Alice
    discloses her sample bits, Bob replies with the mismatch count.  The
    estimate is the observed mismatch fraction.
    """
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie in (0, 1)")
    if len(alice_key) != len(bob_key):
        raise ValueError("key length mismatch")
    if channel is None:
        channel = make_channel()
    n = len(alice_key)
    k = round(fraction * n)
    rng = np.random.default_rng(seed)
    positions = np.sort(rng.choice(n, size=k, replace=False))

    channel.a.send(BitSample(0, tuple(int(b) for b in alice_key.bits[positions])))
    sample = channel.b.recv()
    mismatches = int(
        np.count_nonzero(np.asarray(sample.bits, dtype=np.uint8) != bob_key.bits[positions])
    )
    channel.b.send(IndexList(0, (mismatches,)))
    channel.a.recv()

    keep = np.ones(n, dtype=bool)
    keep[positions] = False
    qber = mismatches / k if k else 0.0
    estimate = ErrorEstimate(q_hat=qber * n, qber_hat=qber, method="sample-comparison")
    return estimate, SiftedKey(alice_key.bits[keep]), SiftedKey(bob_key.bits[keep])


class _PassLayout:
    """One pass's permuted order and block geometry."""

    def __init__(self, order: np.ndarray, block_size: int) -> None:
        self.order = order
        self.block_size = block_size
        n = order.size
        self.n_blocks = -(-n // block_size)
        # position -> (block id, offset inside the pass's permuted order)
        self.slot_of = np.empty(n, dtype=np.int64)
        self.slot_of[order] = np.arange(n, dtype=np.int64)

    def block_of(self, pos: int) -> int:
        return int(self.slot_of[pos]) // self.block_size

    def block_positions(self, block: int) -> np.ndarray:
        lo = block * self.block_size
        hi = min(lo + self.block_size, self.order.size)
        return self.order[lo:hi]


def cascade_reconcile(
    alice_key: SiftedKey,
    bob_key: SiftedKey,
    qber_est: float,
    cfg: CascadeConfig = CascadeConfig(),
    channel: Channel | None = None,
) -> CascadeResult:
    """Run the full back-tracking Cascade, correcting Bob toward Alice.

    Residual errors (ground truth) are reported, never hidden.
    """
    if len(alice_key) != len(bob_key):
        raise ValueError("key length mismatch")
    if channel is None:
        channel = make_channel()
    n = len(alice_key)
    a = alice_key.bits
    b = bob_key.bits.copy()
    rng = np.random.default_rng(cfg.shuffle_seed)
    k1 = initial_block_size(qber_est, n)

    layouts: list[_PassLayout] = []
    diff_parity: list[np.ndarray] = []  # per pass, per block: current parity mismatch
    parities_disclosed = 0

    def announce_pass(layout: _PassLayout) -> np.ndarray:
        """Alice sends the pass's block parities; returns the mismatch vector."""
        nonlocal parities_disclosed
        starts = np.arange(0, n, layout.block_size)
        a_par = (np.add.reduceat(a[layout.order], starts) & 1).astype(np.uint8)
        b_par = (np.add.reduceat(b[layout.order], starts) & 1).astype(np.uint8)
        channel.a.send(BlockParities(len(layouts), tuple(int(p) for p in a_par)))
        channel.b.recv()
        parities_disclosed += layout.n_blocks
        return (a_par != b_par).astype(np.uint8)

    def binary_search_round(intervals: list[tuple[int, np.ndarray]]) -> list[tuple[int, np.ndarray]]:
        """Halve every active interval; two frames per round, one parity per interval."""
        nonlocal parities_disclosed
        halves = []
        a_parities = []
        for _, pos in intervals:
            mid = pos.size // 2
            left = pos[:mid]
            a_parities.append(int(a[left].sum() & 1))
            halves.append((left, pos[mid:]))
        channel.a.send(BlockParities(0, tuple(a_parities)))
        channel.b.recv()
        parities_disclosed += len(intervals)
        nxt = []
        directions = []
        for (pass_idx, _), (left, right), a_par in zip(intervals, halves, a_parities):
            b_par = int(b[left].sum() & 1)
            go_left = b_par != a_par
            directions.append(int(go_left))
            nxt.append((pass_idx, left if go_left else right))
        channel.b.send(IndexList(0, tuple(directions)))
        channel.a.recv()
        return nxt

    def resolve_odd_blocks() -> None:
        """Search every odd block, cascading corrections into earlier passes."""
        while True:
            # gather odd blocks, earliest pass (smallest blocks) first
            work: list[tuple[int, int]] = []
            for p, parity in enumerate(diff_parity):
                odd = np.flatnonzero(parity)
                if odd.size:
                    work = [(p, int(blk)) for blk in odd]
                    break
            if not work:
                return
            # Bob tells Alice which blocks to search
            channel.b.send(IndexList(0, tuple(blk for _, blk in work)))
            channel.a.recv()
            intervals = [
                (p, layouts[p].block_positions(blk)) for p, blk in work
            ]
            active = [(p, pos) for p, pos in intervals]
            while any(pos.size > 1 for _, pos in active):
                active = binary_search_round(active)
            for p, pos in active:
                t = int(pos[0])
                b[t] ^= 1
                for pp, layout in enumerate(layouts):
                    diff_parity[pp][layout.block_of(t)] ^= 1

    for pass_idx in range(cfg.passes):
        block_size = min(n, k1 * (1 << pass_idx))
        order = (
            np.arange(n, dtype=np.int64)
            if pass_idx == 0
            else rng.permutation(n).astype(np.int64)
        )
        layout = _PassLayout(order, block_size)
        layouts.append(layout)
        diff_parity.append(announce_pass(layout))
        resolve_odd_blocks()

    residual = int(np.count_nonzero(a != b))
    return CascadeResult(
        corrected_key=SiftedKey(b),
        parities_disclosed=parities_disclosed,
        estimation_bits_discarded=0,
        messages=channel.stats.messages_sent,
        residual_errors=residual,
    )


def cascade_session(
    alice_key: SiftedKey,
    bob_key: SiftedKey,
    cfg: CascadeConfig = CascadeConfig(),
    sample_fraction: float = DEFAULT_SAMPLE_FRACTION,
    sample_seed: int = 0,
    channel: Channel | None = None,
    qber_est: float | None = None,
) -> CascadeResult:
    """Sample estimation followed by reconciliation, on one channel.

    Passing ``qber_est`` skips the sampling step (matching runs where the
    estimate is supplied as a simulation parameter) and discards nothing.
    """
    if channel is None:
        channel = make_channel()
    n0 = len(alice_key)
    if qber_est is None:
        estimate, alice_key, bob_key = sample_estimate(
            alice_key, bob_key, sample_fraction, sample_seed, channel
        )
        est_discarded = n0 - len(alice_key)
    else:
        estimate = ErrorEstimate(
            q_hat=qber_est * n0, qber_hat=qber_est, method="external"
        )
        est_discarded = 0
    result = cascade_reconcile(alice_key, bob_key, estimate.qber_hat, cfg, channel)
    result.qber_estimate = estimate
    result.estimation_bits_discarded = est_discarded
    result.messages = channel.stats.messages_sent
    return result
