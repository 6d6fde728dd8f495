"""Byte encoding of a hopping function carried as an Information Element.

Layout (big-endian)::

    element id (1 B) | payload length (1 B) | hf id (2 B) | L (1 B) | L channel bytes
"""

from __future__ import annotations

import struct
from typing import Optional

from consip.hopping import HoppingFunction, validate_hopping

ELEMENT_ID = 0x48
HEADER_LEN = 2


def encode_ie(h: HoppingFunction, max_payload: Optional[int] = 16) -> bytes:
    problem = validate_hopping(h)
    if problem is not None:
        raise ValueError(f"cannot encode invalid hopping function: {problem}")
    if not 0 <= h.id <= 0xFFFF:
        raise ValueError(f"hopping function id {h.id} does not fit in 2 bytes")
    payload = struct.pack(">HB", h.id, len(h.sequence)) + bytes(h.sequence)
    if max_payload is not None and len(payload) > max_payload:
        raise ValueError(f"IE payload of {len(payload)} B exceeds the {max_payload} B budget")
    return struct.pack(">BB", ELEMENT_ID, len(payload)) + payload


def decode_ie(data: bytes) -> HoppingFunction:
    if len(data) < HEADER_LEN + 3:
        raise ValueError("IE too short")
    eid, plen = struct.unpack_from(">BB", data)
    if eid != ELEMENT_ID:
        raise ValueError(f"unexpected element id 0x{eid:02x}")
    if len(data) != HEADER_LEN + plen:
        raise ValueError("IE length field does not match the buffer")
    hid, n = struct.unpack_from(">HB", data, HEADER_LEN)
    seq = tuple(data[HEADER_LEN + 3 :])
    if len(seq) != n:
        raise ValueError("channel count does not match the payload")
    h = HoppingFunction(hid, seq)
    problem = validate_hopping(h)
    if problem is not None:
        raise ValueError(f"decoded hopping function is invalid: {problem}")
    return h
