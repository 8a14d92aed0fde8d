"""In-process duplex channel with full accounting, plus key corruption.

Latency is accounted, never slept: each frame adds the configured
per-message delay to a virtual clock, so large sweeps run at compute
speed while throughput math still reflects the messaging cost.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .keymodel import SiftedKey
from .wire import Message, decode, encode

DEFAULT_LATENCY_MS = 20.0


@dataclass
class ChannelStats:
    """Traffic accounting for one session's channel."""

    latency_ms_per_message: float = DEFAULT_LATENCY_MS
    messages_sent: int = 0
    bytes_sent: int = 0
    log: list[tuple[str, int, int]] = field(default_factory=list)

    @property
    def simulated_latency_ms(self) -> float:
        return self.messages_sent * self.latency_ms_per_message


class Endpoint:
    """One side of a lossless FIFO duplex channel."""

    def __init__(self, name: str, stats: ChannelStats, transcript: bytearray) -> None:
        self.name = name
        self.stats = stats
        self._transcript = transcript
        self._inbox: deque[bytes] = deque()
        self.peer: "Endpoint | None" = None

    def send(self, msg: Message) -> None:
        frame = encode(msg)
        assert self.peer is not None
        self.stats.messages_sent += 1
        self.stats.bytes_sent += len(frame)
        self.stats.log.append((self.name, msg.kind, len(frame)))
        self._transcript.extend(frame)
        self.peer._inbox.append(frame)

    def recv(self) -> Message:
        if not self._inbox:
            raise RuntimeError(f"endpoint {self.name}: no frame pending")
        return decode(self._inbox.popleft())

    def pending(self) -> int:
        return len(self._inbox)


class Channel:
    """Endpoint pair with shared stats and a byte-exact transcript."""

    def __init__(self, latency_ms: float = DEFAULT_LATENCY_MS) -> None:
        if latency_ms < 0:
            raise ValueError("latency must be >= 0")
        self.stats = ChannelStats(latency_ms_per_message=latency_ms)
        self._transcript = bytearray()
        self.a = Endpoint("A", self.stats, self._transcript)
        self.b = Endpoint("B", self.stats, self._transcript)
        self.a.peer = self.b
        self.b.peer = self.a

    def transcript(self) -> bytes:
        """Concatenation of every frame sent so far, in send order."""
        return bytes(self._transcript)

    def dump_transcript(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self._transcript)


def make_channel(latency_ms: float = DEFAULT_LATENCY_MS) -> Channel:
    return Channel(latency_ms)


@dataclass(frozen=True)
class ErrorSpec:
    """How to corrupt Bob's copy of the key.

    ``exact`` flips exactly q distinct positions chosen uniformly;
    ``per-bit`` flips each bit independently with probability p.
    """

    model: str
    q: int | None = None
    p: float | None = None
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.model == "exact":
            if self.q is None or self.q < 0:
                raise ValueError("exact model requires q >= 0")
        elif self.model == "per-bit":
            if self.p is None or not 0 <= self.p <= 1:
                raise ValueError("per-bit model requires p in [0, 1]")
        else:
            raise ValueError(f"unknown error model {self.model!r}")


def corrupt(key: SiftedKey, spec: ErrorSpec) -> tuple[SiftedKey, np.ndarray]:
    """Corrupted copy of ``key`` plus the ground-truth flip positions.

    The flip set is for metrics only and must never reach the protocol
    state machines.
    """
    rng = np.random.default_rng(spec.rng_seed)
    n = len(key)
    if spec.model == "exact":
        if spec.q > n:
            raise ValueError("cannot flip more bits than the key holds")
        positions = np.sort(rng.choice(n, size=spec.q, replace=False))
    else:
        positions = np.flatnonzero(rng.random(n) < spec.p)
    bits = key.bits.copy()
    bits[positions] ^= 1
    return SiftedKey(bits), positions.astype(np.int64)
