"""Clustered B+Tree files, bulk-loaded from key-sorted records.

File = page 0 (metadata) + fixed-size data pages, 1-based page ids:

    page 0:   "MMIX" | u8 version | u32 json_len | meta JSON | zero padding
    leaf:     u8 1 | u16 count | u32 next_leaf | [u16 klen | key | u32 rlen | record]*
    internal: u8 2 | u16 count | u32 child0 | [u16 klen | key | u32 child]*

Keys are order-preserving encodings of the index field (storage.keys).
Leaves hold full retained-field records, so a range scan needs no second
file. The page size is 4096 unless one entry cannot fit, in which case it
is raised to the next 4096 multiple that fits the largest entry; it stays
fixed within a file. An internal page's child i covers keys from separator
i (first key of that child's subtree) up to the next separator.
"""

from __future__ import annotations

import json
import os
import struct
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Optional

from minimap.errors import DecodeError, UnsortedInputError
from minimap.lang.ast import Schema
from minimap.storage.keys import encode_key
from minimap.storage.records import decode_record, encode_record

MAGIC = b"MMIX"
VERSION = 1
DEFAULT_PAGE_SIZE = 4096

_LEAF, _INTERNAL = 1, 2
_LEAF_HEADER = 1 + 2 + 4
_INTERNAL_HEADER = 1 + 2 + 4


@dataclass
class ScanStats:
    pages_touched: int = 0
    records_yielded: int = 0
    bytes_read: int = 0

    def to_json(self) -> dict:
        return {
            "pages_touched": self.pages_touched,
            "records_yielded": self.records_yielded,
            "bytes_read": self.bytes_read,
        }


def build_btree(path: str, schema: Schema, retained: list[str], index_field: str,
                records: Iterable[tuple]) -> dict:
    """Bulk load; records must arrive sorted by the index field.

    Returns a manifest with pages, leaves, height, fanout, size_bytes.
    """
    sub = Schema(schema.name, [(n, t) for n, t in schema.fields if n in set(retained)])
    key_ty = schema.type_of(index_field)
    key_pos = [n for n, _ in sub.fields].index(index_field)

    entries: list[tuple[bytes, bytes]] = []
    prev: Optional[bytes] = None
    for rec in records:
        kb = encode_key(rec[key_pos], key_ty)
        if prev is not None and kb < prev:
            raise UnsortedInputError(
                f"key regressed while building {path} on {index_field!r}")
        prev = kb
        entries.append((kb, encode_record(rec, sub)))

    page_size = DEFAULT_PAGE_SIZE
    max_klen = max((len(k) for k, _ in entries), default=8)
    if entries:
        biggest = _LEAF_HEADER + max(2 + len(k) + 4 + len(r) for k, r in entries)
        if biggest > page_size:
            page_size = -(-biggest // DEFAULT_PAGE_SIZE) * DEFAULT_PAGE_SIZE

    pages: list[bytes] = []  # data pages, id = index + 1

    def add_page(raw: bytearray) -> int:
        pages.append(bytes(raw) + b"\x00" * (page_size - len(raw)))
        return len(pages)

    # leaves
    leaves: list[tuple[bytes, int]] = []  # (first key, page id)
    buf = bytearray()
    buf_first: Optional[bytes] = None
    buf_count = 0
    leaf_bodies: list[tuple[bytes, bytes, int]] = []  # (first key, body, count)

    def flush_leaf():
        nonlocal buf, buf_first, buf_count
        if buf_count:
            leaf_bodies.append((buf_first, bytes(buf), buf_count))
        buf, buf_first, buf_count = bytearray(), None, 0

    for kb, rb in entries:
        item = struct.pack("<H", len(kb)) + kb + struct.pack("<I", len(rb)) + rb
        if buf_count and _LEAF_HEADER + len(buf) + len(item) > page_size:
            flush_leaf()
        if buf_first is None:
            buf_first = kb
        buf += item
        buf_count += 1
    flush_leaf()

    for first, body, count in leaf_bodies:
        raw = bytearray(struct.pack("<BHI", _LEAF, count, 0))
        raw += body
        leaves.append((first, add_page(raw)))
    # patch sibling links now that ids are known
    for i in range(len(leaves) - 1):
        pid = leaves[i][1]
        raw = bytearray(pages[pid - 1])
        struct.pack_into("<I", raw, 3, leaves[i + 1][1])
        pages[pid - 1] = bytes(raw)

    # internal levels
    level = leaves
    height = 1 if leaves else 0
    while len(level) > 1:
        next_level: list[tuple[bytes, int]] = []
        group: list[tuple[bytes, int]] = []
        used = _INTERNAL_HEADER

        def flush_internal():
            nonlocal group, used
            raw = bytearray(struct.pack("<BHI", _INTERNAL, len(group) - 1, group[0][1]))
            for kb, child in group[1:]:
                raw += struct.pack("<H", len(kb)) + kb + struct.pack("<I", child)
            next_level.append((group[0][0], add_page(raw)))
            group, used = [], _INTERNAL_HEADER

        for kb, pid in level:
            cost = 2 + len(kb) + 4 if group else 0
            if group and used + cost > page_size:
                flush_internal()
                cost = 0
            group.append((kb, pid))
            used += cost
        if group:
            flush_internal()
        level = next_level
        height += 1

    root = level[0][1] if level else 0
    sep_cost = 2 + max_klen + 4
    fanout = 1 + max(0, (page_size - _INTERNAL_HEADER) // sep_cost)
    meta = {
        "schema": sub.name,
        "fields": [[n, t] for n, t in sub.fields],
        "index_field": index_field,
        "key_type": key_ty,
        "page_size": page_size,
        "root": root,
        "first_leaf": leaves[0][1] if leaves else 0,
        "pages": len(pages),
        "records": len(entries),
        "leaves": len(leaves),
        "height": height,
        "fanout": fanout,
    }
    mraw = json.dumps(meta, separators=(",", ":"), sort_keys=True).encode("utf-8")
    head = MAGIC + struct.pack("<BI", VERSION, len(mraw)) + mraw
    if len(head) > page_size:
        raise ValueError("metadata larger than a page")
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(head + b"\x00" * (page_size - len(head)))
        for p in pages:
            f.write(p)
    os.replace(tmp, path)
    meta["size_bytes"] = os.path.getsize(path)
    return meta


class BTreeReader:
    def __init__(self, path: str):
        self.path = path
        self._f = open(path, "rb")
        head = self._f.read(DEFAULT_PAGE_SIZE)
        if head[:4] != MAGIC:
            raise DecodeError(f"bad index magic in {path}", offset=0)
        version, mlen = struct.unpack_from("<BI", head, 4)
        if version != VERSION:
            raise DecodeError(f"unsupported index version {version}", offset=4)
        if 9 + mlen > len(head):
            self._f.seek(0)
            head = self._f.read(9 + mlen)
        try:
            meta = json.loads(head[9:9 + mlen])
            self.schema = Schema(meta["schema"], [tuple(ft) for ft in meta["fields"]])
            self.index_field: str = meta["index_field"]
            self.key_type: str = meta["key_type"]
            self.page_size: int = meta["page_size"]
            self.root: int = meta["root"]
            self.first_leaf: int = meta["first_leaf"]
            self.records: int = meta["records"]
            self.height: int = meta["height"]
            self.leaves: int = meta["leaves"]
            self.fanout: int = meta["fanout"]
        except (ValueError, KeyError, TypeError) as exc:
            raise DecodeError(f"bad index metadata: {exc}", offset=9) from exc
        self.size_bytes = os.path.getsize(path)
        self._cache: dict[int, bytes] = {}

    def close(self):
        self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, et, ev, tb):
        self.close()
        return False

    def _page(self, pid: int, stats: ScanStats, seen: set[int]) -> bytes:
        raw = self._cache.get(pid)
        if raw is None:
            self._f.seek(pid * self.page_size)
            raw = self._f.read(self.page_size)
            if len(raw) < self.page_size:
                raise DecodeError(f"short page {pid}", offset=pid * self.page_size)
            self._cache[pid] = raw
        if pid not in seen:
            seen.add(pid)
            stats.pages_touched += 1
            stats.bytes_read += self.page_size
        return raw

    def _parse_internal(self, raw: bytes) -> tuple[list[bytes], list[int]]:
        count = struct.unpack_from("<H", raw, 1)[0]
        child0 = struct.unpack_from("<I", raw, 3)[0]
        seps: list[bytes] = []
        children = [child0]
        off = _INTERNAL_HEADER
        for _ in range(count):
            (klen,) = struct.unpack_from("<H", raw, off)
            off += 2
            seps.append(raw[off:off + klen])
            off += klen
            (child,) = struct.unpack_from("<I", raw, off)
            off += 4
            children.append(child)
        return seps, children

    def _parse_leaf(self, raw: bytes) -> tuple[list[tuple[bytes, bytes]], int]:
        count, nxt = struct.unpack_from("<HI", raw, 1)
        out = []
        off = _LEAF_HEADER
        for _ in range(count):
            (klen,) = struct.unpack_from("<H", raw, off)
            off += 2
            kb = raw[off:off + klen]
            off += klen
            (rlen,) = struct.unpack_from("<I", raw, off)
            off += 4
            out.append((kb, raw[off:off + rlen]))
            off += rlen
        return out, nxt

    def _descend(self, lo_key: bytes, stats: ScanStats, seen: set[int]) -> int:
        pid = self.root
        while True:
            raw = self._page(pid, stats, seen)
            kind = raw[0]
            if kind == _LEAF:
                return pid
            if kind != _INTERNAL:
                raise DecodeError(f"bad page kind {kind} in page {pid}",
                                  offset=pid * self.page_size)
            seps, children = self._parse_internal(raw)
            pid = children[bisect_left(seps, lo_key)]

    def range_scan(self, ranges) -> tuple[list[tuple], ScanStats]:
        """Records whose index key lies in the KeyRangeSet, in key order.

        Stats count each page once even when adjacent ranges land on the
        same leaf.
        """
        stats = ScanStats()
        out: list[tuple] = []
        if self.root == 0:
            return out, stats
        seen: set[int] = set()
        for r in ranges.ranges:
            lo_key = None if r.lo is None else encode_key(r.lo, self.key_type)
            hi_key = None if r.hi is None else encode_key(r.hi, self.key_type)
            if lo_key is None:
                pid = self.first_leaf
            else:
                pid = self._descend(lo_key, stats, seen)
            while pid:
                items, nxt = self._parse_leaf(self._page(pid, stats, seen))
                stop = False
                for kb, rb in items:
                    if lo_key is not None and kb < lo_key:
                        continue
                    if hi_key is not None and kb >= hi_key:
                        stop = True
                        break
                    out.append(decode_record(rb, self.schema))
                    stats.records_yielded += 1
                if stop:
                    break
                pid = nxt
        return out, stats

    def scan_all(self) -> tuple[list[tuple], ScanStats]:
        stats = ScanStats()
        seen: set[int] = set()
        out: list[tuple] = []
        pid = self.first_leaf
        while pid:
            items, nxt = self._parse_leaf(self._page(pid, stats, seen))
            for _, rb in items:
                out.append(decode_record(rb, self.schema))
                stats.records_yielded += 1
            pid = nxt
        return out, stats
