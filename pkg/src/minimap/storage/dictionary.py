"""String dictionaries: dense tokens assigned in sorted-string order.

token(s) and lookup(t) are inverse bijections over the strings present at
build time. A string absent from the dictionary maps to ABSENT, which can
never equal a real token, so rewritten equality tests against unseen
literals are correctly always-false.
"""

from __future__ import annotations

import struct
import zlib
from bisect import bisect_left

from minimap.errors import DecodeError, DictionaryFullError

MAGIC = b"MMDC"
VERSION = 1

ABSENT = -1

_MAX_ENTRIES = 1 << 32


class Dictionary:
    def __init__(self, strings: list[str]):
        # strings must be distinct and sorted; builders guarantee it
        self.strings = strings
        self._index = {s: i for i, s in enumerate(strings)}

    @staticmethod
    def build(values) -> "Dictionary":
        distinct = sorted(set(values))
        if len(distinct) > _MAX_ENTRIES:
            raise DictionaryFullError(
                f"{len(distinct)} distinct strings exceed the u32 token space")
        return Dictionary(distinct)

    def __len__(self) -> int:
        return len(self.strings)

    def token(self, s: str) -> int:
        return self._index.get(s, ABSENT)

    def lookup(self, t: int) -> str:
        if 0 <= t < len(self.strings):
            return self.strings[t]
        raise DecodeError(f"token {t} outside dictionary of {len(self.strings)}")

    def encode_column(self, values: list[str]) -> list[int]:
        return [self._index[s] for s in values]

    def prefix_range(self, lo: str | None, hi: str | None) -> range:
        """Token positions whose strings fall in [lo, hi); order-preserving
        because tokens are assigned in sorted order."""
        a = 0 if lo is None else bisect_left(self.strings, lo)
        b = len(self.strings) if hi is None else bisect_left(self.strings, hi)
        return range(a, b)

    def save(self, path: str) -> None:
        body = bytearray()
        for s in self.strings:
            raw = s.encode("utf-8")
            body += struct.pack("<I", len(raw)) + raw
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<BI", VERSION, len(self.strings)))
            f.write(body)
            f.write(struct.pack("<I", zlib.crc32(bytes(body))))

    @staticmethod
    def load(path: str) -> "Dictionary":
        with open(path, "rb") as f:
            data = f.read()
        if data[:4] != MAGIC:
            raise DecodeError(f"bad dictionary magic in {path}", offset=0)
        if len(data) < 9:
            raise DecodeError("truncated dictionary header", offset=len(data))
        version, count = struct.unpack_from("<BI", data, 4)
        if version != VERSION:
            raise DecodeError(f"unsupported dictionary version {version}", offset=4)
        off = 9
        strings: list[str] = []
        for _ in range(count):
            if off + 4 > len(data):
                raise DecodeError("truncated dictionary entry", offset=off)
            (n,) = struct.unpack_from("<I", data, off)
            off += 4
            if off + n > len(data):
                raise DecodeError("truncated dictionary entry", offset=off)
            strings.append(data[off:off + n].decode("utf-8"))
            off += n
        if off + 4 > len(data):
            raise DecodeError("missing dictionary checksum", offset=off)
        (crc,) = struct.unpack_from("<I", data, off)
        if crc != zlib.crc32(data[9:off]):
            raise DecodeError("dictionary checksum mismatch", offset=off)
        for a, b in zip(strings, strings[1:]):
            if a >= b:
                raise DecodeError("dictionary strings not strictly sorted", offset=9)
        return Dictionary(strings)
