import pytest
from hypothesis import given, strategies as st

from sardub19.wire import (
    Abort,
    BitSample,
    BlockParities,
    FramingError,
    IndexList,
    MismatchReport,
    ParityAnnounce,
    Verdict,
    decode,
    encode,
)


class TestGoldenFrames:
    """Frozen byte layouts; changing any of these breaks the wire contract."""

    def test_parity_announce(self):
        frame = encode(ParityAnnounce(1, (1, 0, 1, 1)))
        assert frame == bytes.fromhex("0a000000" "01" "01000000" "04000000" "0d")

    def test_mismatch_report(self):
        frame = encode(MismatchReport(2, (3, 7), b"\xaa\xbb"))
        assert frame == bytes.fromhex(
            "14000000" "02" "02000000" "02000000"
            "03000000" "07000000" "02" "aabb"
        )

    def test_verdict(self):
        assert encode(Verdict(3, True)) == bytes.fromhex("06000000" "03" "03000000" "01")

    def test_abort(self):
        frame = encode(Abort(1, "hi"))
        assert frame == bytes.fromhex("09000000" "04" "01000000" "0200" "6869")

    def test_index_list(self):
        frame = encode(IndexList(0, (5,)))
        assert frame == bytes.fromhex("0d000000" "06" "00000000" "01000000" "05000000")

    def test_empty_parities(self):
        frame = encode(ParityAnnounce(1, ()))
        assert frame == bytes.fromhex("09000000" "01" "01000000" "00000000")


class TestRoundTrip:
    @given(
        st.integers(0, 2**32 - 1),
        st.lists(st.integers(0, 1), max_size=300).map(tuple),
    )
    def test_parity_announce(self, iteration, parities):
        msg = ParityAnnounce(iteration, parities)
        assert decode(encode(msg)) == msg

    @given(
        st.integers(0, 2**32 - 1),
        st.sets(st.integers(0, 2**32 - 1), max_size=50),
        st.binary(min_size=8, max_size=32),
    )
    def test_mismatch_report(self, iteration, ids, tag):
        msg = MismatchReport(iteration, tuple(sorted(ids)), tag)
        assert decode(encode(msg)) == msg

    @given(st.integers(0, 2**32 - 1), st.booleans())
    def test_verdict(self, iteration, matched):
        assert decode(encode(Verdict(iteration, matched))) == Verdict(iteration, matched)

    @given(st.text(max_size=100))
    def test_abort(self, reason):
        assert decode(encode(Abort(0, reason))) == Abort(0, reason)

    @given(st.lists(st.integers(0, 1), max_size=100).map(tuple))
    def test_block_parities(self, parities):
        msg = BlockParities(7, parities)
        assert decode(encode(msg)) == msg

    @given(st.lists(st.integers(0, 2**32 - 1), max_size=50).map(tuple))
    def test_index_list(self, indices):
        assert decode(encode(IndexList(1, indices))) == IndexList(1, indices)

    @given(st.lists(st.integers(0, 1), max_size=100).map(tuple))
    def test_bit_sample(self, bits):
        assert decode(encode(BitSample(0, bits))) == BitSample(0, bits)


class TestValidation:
    def test_block_ids_must_increase(self):
        with pytest.raises(ValueError):
            MismatchReport(1, (5, 3), b"")

    def test_truncated_frame_rejected(self):
        frame = encode(ParityAnnounce(1, (1, 0)))
        with pytest.raises(FramingError):
            decode(frame[:-1])

    def test_bad_length_prefix_rejected(self):
        frame = bytearray(encode(Verdict(1, True)))
        frame[0] += 1
        with pytest.raises(FramingError):
            decode(bytes(frame))

    def test_unknown_kind_rejected(self):
        body = bytes([99]) + (0).to_bytes(4, "little")
        frame = len(body).to_bytes(4, "little") + body
        with pytest.raises(FramingError):
            decode(frame)
