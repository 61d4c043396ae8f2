"""Row-oriented record files: the raw input and output format.

Layout (all little-endian):

    "MMRF" | u8 version | u32 header_len | header JSON
    repeat: u32 body_len | record body
    u32 0xFFFFFFFF | u64 record_count | u32 crc32(all record bytes)

A record body is its fields in schema order: i32/i64 fixed width signed,
str/blob as u32 length + raw bytes. Integers are wrapped to their declared
width at encode time, so storage is total over anything the interpreter
can produce. The header JSON is {"schema": name, "fields": [[name, type]]}.
"""

from __future__ import annotations

import json
import os
import struct
import zlib

from minimap.errors import DecodeError
from minimap.lang.ast import Schema

MAGIC = b"MMRF"
VERSION = 1
_SENTINEL = 0xFFFFFFFF


def _wrap(v: int, bits: int) -> int:
    m = 1 << bits
    v &= m - 1
    return v - m if v >= (1 << (bits - 1)) else v


def encode_value(v, ty: str) -> bytes:
    if ty == "i32":
        return struct.pack("<i", _wrap(v, 32))
    if ty == "i64":
        return struct.pack("<q", _wrap(v, 64))
    if ty == "str":
        raw = v.encode("utf-8")
        return struct.pack("<I", len(raw)) + raw
    if ty == "blob":
        return struct.pack("<I", len(v)) + v
    raise ValueError(f"unencodable type {ty!r}")


def decode_value(data: bytes, off: int, ty: str):
    """Returns (value, next offset)."""
    if ty == "i32":
        if off + 4 > len(data):
            raise DecodeError("truncated i32", offset=off)
        return struct.unpack_from("<i", data, off)[0], off + 4
    if ty == "i64":
        if off + 8 > len(data):
            raise DecodeError("truncated i64", offset=off)
        return struct.unpack_from("<q", data, off)[0], off + 8
    if ty in ("str", "blob"):
        if off + 4 > len(data):
            raise DecodeError("truncated length prefix", offset=off)
        (n,) = struct.unpack_from("<I", data, off)
        off += 4
        if off + n > len(data):
            raise DecodeError("truncated bytes payload", offset=off)
        raw = data[off:off + n]
        if ty == "blob":
            return bytes(raw), off + n
        try:
            return raw.decode("utf-8"), off + n
        except UnicodeDecodeError as exc:
            raise DecodeError(f"invalid utf-8 in string field: {exc}",
                              offset=off) from exc
    raise ValueError(f"undecodable type {ty!r}")


def encode_record(rec: tuple, schema: Schema) -> bytes:
    out = bytearray()
    for v, (_, ty) in zip(rec, schema.fields):
        out += encode_value(v, ty)
    return bytes(out)


def decode_record(data: bytes, schema: Schema) -> tuple:
    vals = []
    off = 0
    for _, ty in schema.fields:
        v, off = decode_value(data, off, ty)
        vals.append(v)
    if off != len(data):
        raise DecodeError("record body longer than its fields", offset=off)
    return tuple(vals)


def _header_bytes(schema: Schema) -> bytes:
    doc = {"schema": schema.name, "fields": [[n, t] for n, t in schema.fields]}
    raw = json.dumps(doc, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<BI", VERSION, len(raw)) + raw


class RecordWriter:
    """Streamed writer; the file appears atomically on close."""

    def __init__(self, path: str, schema: Schema):
        self.path = path
        self.schema = schema
        self._tmp = path + ".tmp"
        self._f = open(self._tmp, "wb")
        self._f.write(_header_bytes(schema))
        self._count = 0
        self._crc = 0

    def write(self, rec: tuple) -> None:
        body = encode_record(rec, self.schema)
        chunk = struct.pack("<I", len(body)) + body
        self._f.write(chunk)
        self._crc = zlib.crc32(chunk, self._crc)
        self._count += 1

    def close(self) -> None:
        self._f.write(struct.pack("<IQI", _SENTINEL, self._count, self._crc))
        self._f.close()
        os.replace(self._tmp, self.path)

    def abort(self) -> None:
        self._f.close()
        os.unlink(self._tmp)

    def __enter__(self):
        return self

    def __exit__(self, et, ev, tb):
        if et is None:
            self.close()
        else:
            self.abort()
        return False


class RecordReader:
    """Whole-file reader with checksum and count verification."""

    def __init__(self, path: str):
        self.path = path
        with open(path, "rb") as f:
            self._data = f.read()
        data = self._data
        if data[:4] != MAGIC:
            raise DecodeError(f"bad record file magic in {path}", offset=0)
        if len(data) < 9:
            raise DecodeError("truncated header", offset=len(data))
        version, hlen = struct.unpack_from("<BI", data, 4)
        if version != VERSION:
            raise DecodeError(f"unsupported record file version {version}", offset=4)
        if 9 + hlen > len(data):
            raise DecodeError("truncated header JSON", offset=9)
        try:
            doc = json.loads(data[9:9 + hlen])
            self.schema = Schema(doc["schema"], [tuple(ft) for ft in doc["fields"]])
        except (ValueError, KeyError, TypeError) as exc:
            raise DecodeError(f"bad header JSON: {exc}", offset=9) from exc
        self._body_start = 9 + hlen
        self.size_bytes = len(data)

    def __iter__(self):
        data = self._data
        off = self._body_start
        count = 0
        crc = 0
        while True:
            if off + 4 > len(data):
                raise DecodeError("missing footer", offset=off)
            (n,) = struct.unpack_from("<I", data, off)
            if n == _SENTINEL:
                off += 4
                break
            if off + 4 + n > len(data):
                raise DecodeError("truncated record", offset=off)
            chunk = data[off:off + 4 + n]
            crc = zlib.crc32(chunk, crc)
            yield decode_record(chunk[4:], self.schema)
            count += 1
            off += 4 + n
        if off + 12 > len(data):
            raise DecodeError("truncated footer", offset=off)
        fcount, fcrc = struct.unpack_from("<QI", data, off)
        if fcount != count:
            raise DecodeError(
                f"footer claims {fcount} records, found {count}", offset=off)
        if fcrc != crc:
            raise DecodeError("record file checksum mismatch", offset=off + 8)


def write_record_file(path: str, schema: Schema, records) -> None:
    with RecordWriter(path, schema) as w:
        for r in records:
            w.write(r)


def read_record_file(path: str) -> tuple[Schema, list[tuple]]:
    r = RecordReader(path)
    return r.schema, list(r)
