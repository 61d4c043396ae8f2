"""Column-group files: projected, optionally compressed input views.

Layout (little-endian):

    "MMCG" | u8 version | u32 header_len | header JSON
    per retained field, in schema order: u32 segment_len | segment
    u32 crc32(everything between header and here)

Row order is the source file's record order, so a column-group scan is a
drop-in replacement for a raw scan. Segment encodings by codec: plain ints
are fixed-width, plain str/blob are u32-length-prefixed, delta segments are
zigzag varints (first value included), dict segments are u32 tokens with
the dictionary in a sidecar file next to the column file.
"""

from __future__ import annotations

import json
import os
import struct
import zlib
from typing import Iterable

from minimap.errors import DecodeError
from minimap.lang.ast import Schema
from minimap.storage.dictionary import Dictionary
from minimap.storage.records import decode_value, encode_value
from minimap.storage.varint import decode_deltas, encode_deltas

MAGIC = b"MMCG"
VERSION = 1


def _dict_sidecar(path: str, fname: str) -> str:
    return f"{path}.{fname}.dict"


def _encode_plain(values: list, ty: str) -> bytes:
    out = bytearray()
    for v in values:
        out += encode_value(v, ty)
    return bytes(out)


def _decode_plain(seg: bytes, ty: str, rows: int) -> list:
    out = []
    off = 0
    for _ in range(rows):
        v, off = decode_value(seg, off, ty)
        out.append(v)
    if off != len(seg):
        raise DecodeError("trailing bytes in plain segment", offset=off)
    return out


def write_column_file(path: str, schema: Schema, retained: list[str],
                      codecs: dict[str, str], records: Iterable[tuple]) -> dict:
    """Returns a small manifest: rows, size_bytes, dict sidecar paths."""
    recs = list(records)
    fields = [(n, t) for n, t in schema.fields if n in set(retained)]
    col_index = {n: schema.index_of(n) for n, _ in fields}
    dict_paths: dict[str, str] = {}

    segments: list[bytes] = []
    for fname, fty in fields:
        col = [r[col_index[fname]] for r in recs]
        codec = codecs.get(fname, "plain")
        if codec == "plain":
            segments.append(_encode_plain(col, fty))
        elif codec == "delta":
            segments.append(encode_deltas(col))
        elif codec == "dict":
            d = Dictionary.build(col)
            side = _dict_sidecar(path, fname)
            d.save(side)
            dict_paths[fname] = side
            segments.append(struct.pack(f"<{len(col)}I", *d.encode_column(col)))
        else:
            raise ValueError(f"unknown codec {codec!r}")

    header = {
        "schema": schema.name,
        "fields": [[n, t] for n, t in fields],
        "codecs": {f: c for f, c in codecs.items() if c != "plain"},
        "rows": len(recs),
        "dicts": {f: os.path.basename(p) for f, p in dict_paths.items()},
    }
    hraw = json.dumps(header, separators=(",", ":"), sort_keys=True).encode("utf-8")
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<BI", VERSION, len(hraw)))
        f.write(hraw)
        crc = 0
        for seg in segments:
            chunk = struct.pack("<I", len(seg)) + seg
            f.write(chunk)
            crc = zlib.crc32(chunk, crc)
        f.write(struct.pack("<I", crc))
    os.replace(tmp, path)
    return {
        "rows": len(recs),
        "size_bytes": os.path.getsize(path),
        "dict_paths": dict_paths,
        "segment_bytes": {fields[i][0]: len(segments[i]) for i in range(len(fields))},
    }


class ColumnFileReader:
    def __init__(self, path: str):
        self.path = path
        with open(path, "rb") as f:
            data = f.read()
        if data[:4] != MAGIC:
            raise DecodeError(f"bad column file magic in {path}", offset=0)
        version, hlen = struct.unpack_from("<BI", data, 4)
        if version != VERSION:
            raise DecodeError(f"unsupported column file version {version}", offset=4)
        try:
            h = json.loads(data[9:9 + hlen])
            self.fields: list[tuple[str, str]] = [tuple(ft) for ft in h["fields"]]
            self.codecs: dict[str, str] = dict(h.get("codecs", {}))
            self.rows: int = h["rows"]
            self._dict_names: dict[str, str] = dict(h.get("dicts", {}))
        except (ValueError, KeyError, TypeError) as exc:
            raise DecodeError(f"bad column header JSON: {exc}", offset=9) from exc
        self.size_bytes = len(data)
        off = 9 + hlen
        crc = 0
        self._segments: dict[str, bytes] = {}
        self.segment_bytes: dict[str, int] = {}
        for fname, _ in self.fields:
            if off + 4 > len(data):
                raise DecodeError("truncated segment length", offset=off)
            (n,) = struct.unpack_from("<I", data, off)
            if off + 4 + n > len(data):
                raise DecodeError("truncated column segment", offset=off)
            chunk = data[off:off + 4 + n]
            crc = zlib.crc32(chunk, crc)
            self._segments[fname] = bytes(chunk[4:])
            self.segment_bytes[fname] = n
            off += 4 + n
        if off + 4 > len(data):
            raise DecodeError("missing column file checksum", offset=off)
        (want,) = struct.unpack_from("<I", data, off)
        if want != crc:
            raise DecodeError("column file checksum mismatch", offset=off)
        self._dicts: dict[str, Dictionary] = {}

    def field_names(self) -> list[str]:
        return [n for n, _ in self.fields]

    def dictionary(self, fname: str) -> Dictionary:
        d = self._dicts.get(fname)
        if d is None:
            name = self._dict_names.get(fname)
            if name is None:
                raise DecodeError(f"field {fname!r} has no dictionary")
            d = Dictionary.load(os.path.join(os.path.dirname(self.path) or ".", name))
            self._dicts[fname] = d
        return d

    def read_column(self, fname: str, keep_tokens: bool = False) -> list:
        """Decode one column; dict columns come back as strings unless
        keep_tokens, in which case they stay u32 tokens."""
        ty = dict(self.fields)[fname]
        seg = self._segments[fname]
        codec = self.codecs.get(fname, "plain")
        if codec == "plain":
            return _decode_plain(seg, ty, self.rows)
        if codec == "delta":
            return decode_deltas(seg, self.rows)
        if codec == "dict":
            if len(seg) != 4 * self.rows:
                raise DecodeError("dict segment length mismatch", offset=0)
            tokens = list(struct.unpack(f"<{self.rows}I", seg))
            if keep_tokens:
                return tokens
            d = self.dictionary(fname)
            return [d.lookup(t) for t in tokens]
        raise DecodeError(f"unknown codec {codec!r} in header")
