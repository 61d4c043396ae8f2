"""Order-preserving byte encodings for index keys.

Integers become 8-byte big-endian with the sign bit flipped, so unsigned
byte comparison matches signed numeric order; i32 keys are widened to the
same 8 bytes for a single comparison path. Strings are raw UTF-8: bytewise
order is what range bounds are computed against, nothing cleverer.
"""

from __future__ import annotations

import struct

from minimap.errors import DecodeError

_SIGN = 1 << 63


def encode_key(v, ty: str) -> bytes:
    if ty in ("i32", "i64"):
        return struct.pack(">Q", (v + _SIGN) & 0xFFFFFFFFFFFFFFFF)
    if ty == "str":
        return v.encode("utf-8")
    raise ValueError(f"unindexable key type {ty!r}")


def decode_key(b: bytes, ty: str):
    if ty in ("i32", "i64"):
        if len(b) != 8:
            raise DecodeError(f"integer key of {len(b)} bytes")
        return struct.unpack(">Q", b)[0] - _SIGN
    if ty == "str":
        return b.decode("utf-8")
    raise ValueError(f"unindexable key type {ty!r}")
