"""Byte-exact message framing shared by the simulated channel and any
future socket transport.

Frame layout (all integers little-endian):

    u32  body length
    body:
        u8   kind
        u32  round/iteration number
        ...  kind-specific payload

Kinds and payloads:

    1  PARITY_ANNOUNCE   u32 bit count, then ceil(count/8) bytes of
                         parities packed LSB-first within each byte
    2  MISMATCH_REPORT   u32 id count, count * u32 block ids (strictly
                         increasing), u8 tag length in bytes, tag bytes
    3  VERDICT           u8 matched flag (0/1)
    4  ABORT             u16 reason length, UTF-8 reason
    5  BLOCK_PARITIES    same payload as PARITY_ANNOUNCE (generic parity
                         vector: estimation pre-rounds, Cascade passes)
    6  INDEX_LIST        u32 count, count * u32 indices (generic index
                         vector: Cascade odd blocks, search directions)
    7  BIT_SAMPLE        same payload as PARITY_ANNOUNCE (disclosed key
                         bits for Cascade sample estimation)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

KIND_PARITY_ANNOUNCE = 1
KIND_MISMATCH_REPORT = 2
KIND_VERDICT = 3
KIND_ABORT = 4
KIND_BLOCK_PARITIES = 5
KIND_INDEX_LIST = 6
KIND_BIT_SAMPLE = 7

_HEADER = struct.Struct("<BI")


class FramingError(ValueError):
    """Malformed or truncated frame."""


@dataclass(frozen=True)
class ParityAnnounce:
    iteration: int
    parities: tuple[int, ...]
    kind: int = field(default=KIND_PARITY_ANNOUNCE, repr=False)


@dataclass(frozen=True)
class MismatchReport:
    iteration: int
    block_ids: tuple[int, ...]
    hash_tag: bytes
    kind: int = field(default=KIND_MISMATCH_REPORT, repr=False)

    def __post_init__(self) -> None:
        if any(b >= a for a, b in zip(self.block_ids[1:], self.block_ids)):
            raise ValueError("block_ids must be strictly increasing")


@dataclass(frozen=True)
class Verdict:
    iteration: int
    matched: bool
    kind: int = field(default=KIND_VERDICT, repr=False)


@dataclass(frozen=True)
class Abort:
    iteration: int
    reason: str
    kind: int = field(default=KIND_ABORT, repr=False)


@dataclass(frozen=True)
class BlockParities:
    iteration: int
    parities: tuple[int, ...]
    kind: int = field(default=KIND_BLOCK_PARITIES, repr=False)


@dataclass(frozen=True)
class IndexList:
    iteration: int
    indices: tuple[int, ...]
    kind: int = field(default=KIND_INDEX_LIST, repr=False)


@dataclass(frozen=True)
class BitSample:
    iteration: int
    bits: tuple[int, ...]
    kind: int = field(default=KIND_BIT_SAMPLE, repr=False)


Message = ParityAnnounce | MismatchReport | Verdict | Abort | BlockParities | IndexList | BitSample


def _pack_bits(bits) -> bytes:
    arr = np.asarray(bits, dtype=np.uint8)
    return struct.pack("<I", arr.size) + np.packbits(arr, bitorder="little").tobytes()


def _unpack_bits(payload: bytes, offset: int) -> tuple[tuple[int, ...], int]:
    if len(payload) < offset + 4:
        raise FramingError("truncated bit vector")
    (count,) = struct.unpack_from("<I", payload, offset)
    offset += 4
    nbytes = (count + 7) // 8
    if len(payload) < offset + nbytes:
        raise FramingError("truncated bit vector body")
    raw = np.frombuffer(payload, dtype=np.uint8, count=nbytes, offset=offset)
    bits = np.unpackbits(raw, count=count, bitorder="little")
    return tuple(int(b) for b in bits), offset + nbytes


def encode(msg: Message) -> bytes:
    """Serialize a message into one length-prefixed frame."""
    if isinstance(msg, (ParityAnnounce, BlockParities)):
        payload = _pack_bits(msg.parities)
    elif isinstance(msg, BitSample):
        payload = _pack_bits(msg.bits)
    elif isinstance(msg, MismatchReport):
        if len(msg.hash_tag) > 255:
            raise FramingError("hash tag too long")
        payload = struct.pack("<I", len(msg.block_ids))
        payload += struct.pack(f"<{len(msg.block_ids)}I", *msg.block_ids)
        payload += struct.pack("<B", len(msg.hash_tag)) + msg.hash_tag
    elif isinstance(msg, Verdict):
        payload = struct.pack("<B", int(msg.matched))
    elif isinstance(msg, Abort):
        raw = msg.reason.encode("utf-8")
        payload = struct.pack("<H", len(raw)) + raw
    elif isinstance(msg, IndexList):
        payload = struct.pack("<I", len(msg.indices))
        payload += struct.pack(f"<{len(msg.indices)}I", *msg.indices)
    else:
        raise TypeError(f"unknown message type {type(msg)!r}")
    body = _HEADER.pack(msg.kind, msg.iteration) + payload
    return struct.pack("<I", len(body)) + body


def decode(frame: bytes) -> Message:
    """Parse one length-prefixed frame back into a message."""
    if len(frame) < 4:
        raise FramingError("frame shorter than length prefix")
    (body_len,) = struct.unpack_from("<I", frame, 0)
    if len(frame) != 4 + body_len:
        raise FramingError("frame length prefix disagrees with frame size")
    body = frame[4:]
    if len(body) < _HEADER.size:
        raise FramingError("frame body shorter than header")
    kind, iteration = _HEADER.unpack_from(body, 0)
    payload = body[_HEADER.size:]
    if kind in (KIND_PARITY_ANNOUNCE, KIND_BLOCK_PARITIES, KIND_BIT_SAMPLE):
        bits, end = _unpack_bits(payload, 0)
        if end != len(payload):
            raise FramingError("trailing bytes after bit vector")
        if kind == KIND_PARITY_ANNOUNCE:
            return ParityAnnounce(iteration, bits)
        if kind == KIND_BLOCK_PARITIES:
            return BlockParities(iteration, bits)
        return BitSample(iteration, bits)
    if kind == KIND_MISMATCH_REPORT:
        (count,) = struct.unpack_from("<I", payload, 0)
        ids = struct.unpack_from(f"<{count}I", payload, 4)
        off = 4 + 4 * count
        (taglen,) = struct.unpack_from("<B", payload, off)
        tag = payload[off + 1: off + 1 + taglen]
        if len(tag) != taglen or off + 1 + taglen != len(payload):
            raise FramingError("bad mismatch report payload")
        return MismatchReport(iteration, ids, tag)
    if kind == KIND_VERDICT:
        if len(payload) != 1:
            raise FramingError("bad verdict payload")
        return Verdict(iteration, bool(payload[0]))
    if kind == KIND_ABORT:
        (rlen,) = struct.unpack_from("<H", payload, 0)
        raw = payload[2: 2 + rlen]
        if len(raw) != rlen or 2 + rlen != len(payload):
            raise FramingError("bad abort payload")
        return Abort(iteration, raw.decode("utf-8"))
    if kind == KIND_INDEX_LIST:
        (count,) = struct.unpack_from("<I", payload, 0)
        ids = struct.unpack_from(f"<{count}I", payload, 4)
        if 4 + 4 * count != len(payload):
            raise FramingError("bad index list payload")
        return IndexList(iteration, ids)
    raise FramingError(f"unknown message kind {kind}")
