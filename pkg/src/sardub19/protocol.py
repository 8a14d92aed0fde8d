"""Two-party parity-block reconciliation with integrated QBER estimation.

Session flow
------------

Preparation: both parties derive the same permutation plan from the
shared master seed.  Optional estimation pre-rounds announce parities of
extra full-key permutations so the error estimate can average several
observations before any bit is discarded.

Iteration 1: Alice permutes, announces all 4-bit block parities.  Bob
permutes identically, lists the mismatching (odd-error) blocks, estimates
QBER from their count, discards them, and replies with the block ids plus
a hash tag over his retained bits.  Alice discards the same blocks and
compares tags; equal tags end the session.

Iteration j >= 2: the same exchange over the truncated key, except Bob
traces every bit of each newly mismatching block back to its
first-iteration block and reports those first-iteration block ids for
discarding on both sides.

Message framing
---------------

Each iteration exchanges exactly two frames: one parity announcement and
one mismatch report.  A "continue" verdict is implicit in the arrival of
the next announcement; the terminal "matched" verdict carries no key
information and would piggyback on the first frame of the next
post-processing stage, so the simulator delivers it out of band and it
does not appear in the channel accounting.  A session that terminates at
iteration t therefore sends exactly 2t frames (plus one frame per
estimation pre-round, and an explicit Abort frame on failure).

The hash tag is SHA-256 over an 8-byte little-endian bit count followed
by the retained bits packed LSB-first, truncated to the configured tag
width.  This stands in for the Wegman-Carter style constructions a
production stack would use.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .estimator import (
    ErrorEstimate,
    MismatchObservation,
    OutOfMonotoneRangeError,
    estimate_from_samples,
)
from .keymodel import BLOCK_BITS, IndexMap, SiftedKey, all_block_parities
from .randperm import MasterSeed, derive_plan, permutation_of
from .simnet import Channel, make_channel
from .wire import Abort, BlockParities, Message, MismatchReport, ParityAnnounce

ABORT_INCOMPLETE = "reconciliation incomplete"
ABORT_EAVESDROPPING = "eavesdropping suspected"
ABORT_TOO_NOISY = "channel too noisy"
ABORT_PROTOCOL = "protocol violation"

_ALLOWED_TAG_BITS = (64, 128, 256)


class ProtocolViolation(RuntimeError):
    """A peer message broke the session's framing contract."""


class HashCollisionError(RuntimeError):
    """Tags matched but the reconciled keys differ; must never pass silently."""


@dataclass(frozen=True)
class SessionConfig:
    max_iterations: int = 50
    hash_tag_bits: int = 128
    qber_abort_threshold: float = 0.11
    privacy_discard: bool = False
    estimation_samples: int = 1

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.hash_tag_bits not in _ALLOWED_TAG_BITS:
            raise ValueError(f"hash_tag_bits must be one of {_ALLOWED_TAG_BITS}")
        if not 0 <= self.qber_abort_threshold <= 1:
            raise ValueError("qber_abort_threshold must lie in [0, 1]")
        if self.estimation_samples < 1:
            raise ValueError("estimation_samples must be >= 1")


@dataclass
class SessionResult:
    success: bool
    reconciled_key: SiftedKey
    iterations_used: int
    parities_disclosed: int
    bits_discarded: int
    q_estimate: ErrorEstimate | None
    abort_reason: str | None = None
    warning: str | None = None


def hash_tag(bits, tag_bits: int = 128) -> bytes:
    """Pinned digest over a bit sequence, truncated to ``tag_bits``."""
    if tag_bits not in _ALLOWED_TAG_BITS:
        raise ValueError(f"tag_bits must be one of {_ALLOWED_TAG_BITS}")
    arr = np.asarray(bits, dtype=np.uint8)
    packed = np.packbits(arr, bitorder="little").tobytes()
    digest = hashlib.sha256(struct.pack("<Q", arr.size) + packed).digest()
    return digest[: tag_bits // 8]


def estimate_session_qber(mismatch_counts: list[float], n: int) -> ErrorEstimate:
    """Exact-inversion QBER estimate from one or more same-n mismatch counts."""
    obs = [MismatchObservation(n=n, mismatch_count=c) for c in mismatch_counts]
    return estimate_from_samples(obs)


def privacy_discard(key: SiftedKey, disclosed_parities: int, seed: MasterSeed) -> SiftedKey:
    """Drop one seed-chosen bit per disclosed parity, identically on both sides.

    Discard positions come from the shared master seed, so no message is
    needed.  Discarding more bits than the key holds yields an empty key;
    the session result carries the warning.
    """
    if disclosed_parities < 0:
        raise ValueError("disclosed_parities must be >= 0")
    n = len(key)
    if disclosed_parities == 0 or n == 0:
        return SiftedKey(key.bits.copy()) if disclosed_parities == 0 else SiftedKey(
            np.empty(0, dtype=np.uint8)
        )
    if disclosed_parities >= n:
        return SiftedKey(np.empty(0, dtype=np.uint8))
    perm = permutation_of(seed.derive(b"discard", 0), n)
    keep = np.ones(n, dtype=bool)
    keep[perm[:disclosed_parities]] = False
    return SiftedKey(key.bits[keep])


class _Party:
    """State shared by both roles: current bits plus their provenance."""

    def __init__(self, key: SiftedKey, seed: MasterSeed, cfg: SessionConfig) -> None:
        self.bits = key.bits.copy()
        self.imap = IndexMap.identity(len(key))
        self.seed = seed
        self.cfg = cfg
        self.plan = derive_plan(seed, cfg.max_iterations)
        self.parities_disclosed = 0
        self.initial_n = len(key)

    @property
    def length(self) -> int:
        return self.bits.size

    def apply_iteration_perm(self, iteration: int) -> None:
        perm = permutation_of(self.plan.seed_for(iteration), self.length)
        self.bits = self.bits[perm]
        self.imap = self.imap.permuted(perm)
        if iteration == 1:
            self.imap.assign_first_blocks()

    def parities(self) -> np.ndarray:
        return all_block_parities(self.bits)

    def discard_first_blocks(self, block_ids) -> None:
        if not block_ids:
            return
        ids = np.fromiter(block_ids, dtype=np.int64)
        keep = ~np.isin(self.imap.current_to_first_block, ids)
        self.bits = self.bits[keep]
        self.imap = self.imap.restricted(keep)

    def tag(self) -> bytes:
        return hash_tag(self.bits, self.cfg.hash_tag_bits)

    def final_key(self) -> tuple[SiftedKey, np.ndarray]:
        """Retained bits in original order, plus their original positions."""
        order = np.argsort(self.imap.current_to_original)
        return SiftedKey(self.bits[order]), self.imap.current_to_original[order]


class AliceSession(_Party):
    """Announces parities each iteration; verifies Bob's hash tags."""

    def __init__(self, key, seed, cfg) -> None:
        super().__init__(key, seed, cfg)
        self.iteration = 0

    def estimation_round(self, round_index: int) -> BlockParities:
        """Parities of an extra full-key permutation; does not mutate state."""
        perm = permutation_of(self.seed.derive(b"est", round_index), self.length)
        parities = all_block_parities(self.bits[perm])
        self.parities_disclosed += parities.size
        return BlockParities(round_index, tuple(int(p) for p in parities))

    def announce(self) -> ParityAnnounce:
        self.iteration += 1
        self.apply_iteration_perm(self.iteration)
        parities = self.parities()
        self.parities_disclosed += parities.size
        return ParityAnnounce(self.iteration, tuple(int(p) for p in parities))

    def verify(self, report: MismatchReport) -> bool:
        """Apply the reported discards; True when the tags now agree."""
        if report.iteration != self.iteration:
            raise ProtocolViolation(
                f"report for iteration {report.iteration}, expected {self.iteration}"
            )
        self.discard_first_blocks(report.block_ids)
        return self.tag() == report.hash_tag


class BobSession(_Party):
    """Compares parities, reports mismatches, estimates QBER."""

    def __init__(self, key, seed, cfg) -> None:
        super().__init__(key, seed, cfg)
        self.iteration = 0
        self.estimation_counts: list[int] = []
        self.q_estimate: ErrorEstimate | None = None

    def handle_estimation(self, msg: BlockParities) -> None:
        perm = permutation_of(self.seed.derive(b"est", msg.iteration), self.length)
        mine = all_block_parities(self.bits[perm])
        if mine.size != len(msg.parities):
            raise ProtocolViolation("estimation parity vector length mismatch")
        count = int(np.count_nonzero(mine != np.asarray(msg.parities, dtype=np.uint8)))
        self.estimation_counts.append(count)
        self.parities_disclosed += mine.size

    def handle_announce(self, msg: ParityAnnounce) -> MismatchReport | Abort:
        if msg.iteration != self.iteration + 1:
            raise ProtocolViolation(
                f"announce for iteration {msg.iteration}, expected {self.iteration + 1}"
            )
        self.iteration = msg.iteration
        self.apply_iteration_perm(self.iteration)
        mine = self.parities()
        theirs = np.asarray(msg.parities, dtype=np.uint8)
        if mine.size != theirs.size:
            raise ProtocolViolation("parity vector length mismatch")
        self.parities_disclosed += mine.size
        mismatch_blocks = np.flatnonzero(mine != theirs)

        if self.iteration == 1:
            abort = self._estimate(len(mismatch_blocks))
            if abort is not None:
                return abort
            discard_ids = mismatch_blocks
        else:
            discard_ids = self._trace_to_first_blocks(mismatch_blocks)

        ids = tuple(int(b) for b in np.sort(discard_ids))
        self.discard_first_blocks(ids)
        return MismatchReport(self.iteration, ids, self.tag())

    def _estimate(self, iteration1_count: int) -> Abort | None:
        counts = [float(c) for c in self.estimation_counts] + [float(iteration1_count)]
        try:
            self.q_estimate = estimate_session_qber(counts, self.initial_n)
        except OutOfMonotoneRangeError:
            return Abort(self.iteration, ABORT_TOO_NOISY)
        if self.q_estimate.qber_hat > self.cfg.qber_abort_threshold:
            return Abort(self.iteration, ABORT_EAVESDROPPING)
        return None

    def _trace_to_first_blocks(self, mismatch_blocks: np.ndarray) -> np.ndarray:
        if mismatch_blocks.size == 0:
            return mismatch_blocks
        current_block = np.arange(self.length, dtype=np.int64) // BLOCK_BITS
        in_mismatch = np.isin(current_block, mismatch_blocks)
        return np.unique(self.imap.current_to_first_block[in_mismatch])


def run_session(
    alice_key: SiftedKey,
    bob_key: SiftedKey,
    seed: MasterSeed,
    cfg: SessionConfig = SessionConfig(),
    channel: Channel | None = None,
) -> tuple[SessionResult, SessionResult]:
    """Drive both state machines lock-step to termination.

    Parties interact exclusively through wire messages moved across the
    channel; the driver additionally asserts true key equality on
    success, so a hash collision fails loudly instead of yielding a bad
    key.  Both results carry Bob's QBER estimate (mirroring it to Alice
    is a simulator convenience; the wire format does not carry it).
    """
    if len(alice_key) != len(bob_key):
        raise ValueError("both keys must have the same length")
    n = len(alice_key)
    if n < 8 or n % BLOCK_BITS != 0:
        raise ValueError("session keys require n >= 8 and n % 4 == 0")
    if channel is None:
        channel = make_channel()

    alice = AliceSession(alice_key, seed, cfg)
    bob = BobSession(bob_key, seed, cfg)
    ep_a, ep_b = channel.a, channel.b

    for r in range(1, cfg.estimation_samples):
        ep_a.send(alice.estimation_round(r))
        bob.handle_estimation(ep_b.recv())

    matched = False
    abort_reason: str | None = None
    iterations = 0
    for j in range(1, cfg.max_iterations + 1):
        iterations = j
        ep_a.send(alice.announce())
        reply = bob.handle_announce(ep_b.recv())
        ep_b.send(reply)
        msg = ep_a.recv()
        if isinstance(msg, Abort):
            abort_reason = msg.reason
            break
        matched = alice.verify(msg)
        if matched:
            break
        if j == cfg.max_iterations:
            ep_a.send(Abort(j, ABORT_INCOMPLETE))
            assert isinstance(ep_b.recv(), Abort)
            abort_reason = ABORT_INCOMPLETE

    def result_for(party: _Party, estimate: ErrorEstimate | None) -> SessionResult:
        if not matched:
            return SessionResult(
                success=False,
                reconciled_key=SiftedKey(np.empty(0, dtype=np.uint8)),
                iterations_used=iterations,
                parities_disclosed=party.parities_disclosed,
                bits_discarded=party.initial_n,
                q_estimate=estimate,
                abort_reason=abort_reason,
            )
        final, _ = party.final_key()
        warning = None
        discarded = party.initial_n - len(final)
        if cfg.privacy_discard:
            before = len(final)
            final = privacy_discard(final, party.parities_disclosed, seed)
            discarded += before - len(final)
            if before and not len(final):
                warning = "privacy discard consumed the whole key"
        if len(final) == 0 and warning is None:
            warning = "reconciled key is empty"
        return SessionResult(
            success=True,
            reconciled_key=final,
            iterations_used=iterations,
            parities_disclosed=party.parities_disclosed,
            bits_discarded=discarded,
            q_estimate=estimate,
            warning=warning,
        )

    estimate = bob.q_estimate
    res_a = result_for(alice, estimate)
    res_b = result_for(bob, estimate)

    if matched:
        if res_a.reconciled_key != res_b.reconciled_key:
            raise HashCollisionError(
                "hash tags agreed but reconciled keys differ"
            )
        _, retained = alice.final_key()
        differing = np.flatnonzero(alice_key.bits != bob_key.bits)
        if np.intersect1d(retained, differing).size:
            raise HashCollisionError(
                "reconciled key retains an originally differing position"
            )
    return res_a, res_b
