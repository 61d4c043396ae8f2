"""Input loading for the three plan sources: raw, btree, column group.

Whatever the physical layout, the engine runs the map function over
full-width records in schema order. Fields a column group or tree omitted
are reconstructed as zero values (0, "", b""), which the projection
descriptor guarantees the job never looks at. Dictionary-coded fields come
back as strings unless the plan engaged token rewrite, in which case they
stay as integer tokens and the dictionaries ride along for literal mapping
and output back-translation.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

from minimap.errors import PlanMismatchError
from minimap.lang.ast import Schema
from minimap.optimizer import ExecutionDescriptor
from minimap.storage.btree import BTreeReader, ScanStats
from minimap.storage.columns import ColumnFileReader
from minimap.storage.dictionary import Dictionary
from minimap.storage.records import RecordReader

_ZERO = {"i32": 0, "i64": 0, "str": "", "blob": b""}


@dataclass
class SourceData:
    records: list[tuple]
    bytes_read: int
    token_fields: list[str] = field(default_factory=list)
    dictionaries: dict[str, Dictionary] = field(default_factory=dict)
    scan: Optional[ScanStats] = None


def load_source(desc: ExecutionDescriptor, schema: Schema) -> SourceData:
    if desc.source == "raw":
        return _load_raw(desc, schema)
    if desc.source == "btree":
        return _load_btree(desc, schema)
    if desc.source == "cgf":
        return _load_cgf(desc, schema)
    raise PlanMismatchError(f"unknown source kind {desc.source!r}")


def _check_fields(schema: Schema, have: list[tuple[str, str]], what: str) -> None:
    want = dict(schema.fields)
    for n, t in have:
        if want.get(n) != t:
            raise PlanMismatchError(
                f"{what} stores {n}: {t}, job schema {schema.name} expects "
                f"{n}: {want.get(n)}")


def _load_raw(desc: ExecutionDescriptor, schema: Schema) -> SourceData:
    r = RecordReader(desc.path)
    if [list(ft) for ft in r.schema.fields] != [list(ft) for ft in schema.fields]:
        raise PlanMismatchError(
            f"input file schema {r.schema.name} does not match job schema "
            f"{schema.name}")
    return SourceData(records=list(r), bytes_read=r.size_bytes)


def _load_btree(desc: ExecutionDescriptor, schema: Schema) -> SourceData:
    if desc.ranges is None or desc.index_field is None:
        raise PlanMismatchError("tree source needs an index field and key ranges")
    with BTreeReader(desc.path) as r:
        if r.index_field != desc.index_field:
            raise PlanMismatchError(
                f"index is on {r.index_field!r}, plan expects {desc.index_field!r}")
        _check_fields(schema, r.schema.fields, "index")
        rows, stats = r.range_scan(desc.ranges)
        records = _widen(rows, [n for n, _ in r.schema.fields], schema)
        # the metadata page was read too
        return SourceData(records=records, bytes_read=stats.bytes_read + r.page_size,
                          scan=stats)


def _load_cgf(desc: ExecutionDescriptor, schema: Schema) -> SourceData:
    r = ColumnFileReader(desc.path)
    _check_fields(schema, r.fields, "column group")
    present = r.field_names()
    token_fields = [f for f in desc.rewrite_fields if f in present]
    cols: dict[str, list] = {}
    dictionaries: dict[str, Dictionary] = {}
    bytes_read = r.size_bytes
    for fname in present:
        keep = fname in token_fields
        cols[fname] = r.read_column(fname, keep_tokens=keep)
        if r.codecs.get(fname) == "dict":
            dictionaries[fname] = r.dictionary(fname)
            side = os.path.join(os.path.dirname(desc.path) or ".",
                                r._dict_names[fname])
            bytes_read += os.path.getsize(side)
    records = []
    for i in range(r.rows):
        records.append(tuple(
            cols[n][i] if n in cols else _ZERO[t] for n, t in schema.fields))
    return SourceData(records=records, bytes_read=bytes_read,
                      token_fields=token_fields, dictionaries=dictionaries)


def _widen(rows: list[tuple], present: list[str], schema: Schema) -> list[tuple]:
    if present == [n for n, _ in schema.fields]:
        return rows
    idx = {n: i for i, n in enumerate(present)}
    out = []
    for row in rows:
        out.append(tuple(
            row[idx[n]] if n in idx else _ZERO[t] for n, t in schema.fields))
    return out
