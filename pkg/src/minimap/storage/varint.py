"""Zigzag-mapped varints and the delta codec built on them.

Every number in a delta segment, the first value included, is stored as
zigzag(value) in LEB128: small magnitudes of either sign stay at one byte,
which is the entire point of delta-coding slowly changing columns.
"""

from __future__ import annotations

from minimap.errors import DecodeError

# 10 bytes cover 64 bits + sign headroom; anything longer is corruption
_MAX_VARINT_BYTES = 10


def zigzag(n: int) -> int:
    return (n << 1) ^ (n >> 63) if -(1 << 63) <= n < (1 << 63) else _zigzag_big(n)


def _zigzag_big(n: int) -> int:
    # columns hold i64 values only; anything wider is a caller bug
    raise ValueError(f"value out of 64-bit range: {n}")


def unzigzag(u: int) -> int:
    return (u >> 1) ^ -(u & 1)


def write_uvarint(out: bytearray, u: int) -> None:
    while True:
        b = u & 0x7F
        u >>= 7
        if u:
            out.append(b | 0x80)
        else:
            out.append(b)
            return


def read_uvarint(data: bytes, off: int) -> tuple[int, int]:
    """Returns (value, next offset)."""
    shift = 0
    value = 0
    for i in range(_MAX_VARINT_BYTES):
        if off + i >= len(data):
            raise DecodeError("truncated varint", offset=off + i)
        b = data[off + i]
        value |= (b & 0x7F) << shift
        if not b & 0x80:
            return value, off + i + 1
        shift += 7
    raise DecodeError("varint longer than 10 bytes", offset=off)


def _wrap64(n: int) -> int:
    n &= (1 << 64) - 1
    return n - (1 << 64) if n >= (1 << 63) else n


def encode_deltas(values: list[int]) -> bytes:
    # deltas wrap to 64 bits: the difference of two extreme i64 values needs
    # 65 otherwise, and wrapping keeps the roundtrip exact for any i64 column
    out = bytearray()
    prev = 0
    for i, v in enumerate(values):
        write_uvarint(out, zigzag(v if i == 0 else _wrap64(v - prev)))
        prev = v
    return bytes(out)


def decode_deltas(data: bytes, count: int) -> list[int]:
    out: list[int] = []
    off = 0
    prev = 0
    for i in range(count):
        u, off = read_uvarint(data, off)
        d = unzigzag(u)
        prev = d if i == 0 else _wrap64(prev + d)
        out.append(prev)
    if off != len(data):
        raise DecodeError("trailing bytes after delta segment", offset=off)
    return out
