import pytest
from hypothesis import given, strategies as st

from consip.hopping import ALL_CHANNELS, HoppingFunction
from consip.ie import HEADER_LEN, decode_ie, encode_ie


@given(st.integers(0, 0xFFFF), st.lists(st.sampled_from(ALL_CHANNELS), min_size=1, max_size=16, unique=True))
def test_roundtrip(hid, seq):
    h = HoppingFunction(hid, tuple(seq))
    data = encode_ie(h, max_payload=None)
    assert len(data) == HEADER_LEN + 3 + len(seq)
    assert decode_ie(data) == h


def test_budget_limits_sequence_length():
    assert len(encode_ie(HoppingFunction(1, ALL_CHANNELS[:13]))) == HEADER_LEN + 16
    with pytest.raises(ValueError, match="budget"):
        encode_ie(HoppingFunction(1, ALL_CHANNELS))


def test_decode_rejects_corrupt_input():
    good = encode_ie(HoppingFunction(7, (11, 12, 13)))
    with pytest.raises(ValueError):
        decode_ie(b"\x00" + good[1:])
    with pytest.raises(ValueError):
        decode_ie(good[:-1])
    with pytest.raises(ValueError):
        decode_ie(good[:-1] + bytes([11]))  # duplicate channel
