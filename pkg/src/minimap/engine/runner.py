"""Job execution: map over the planned source, shuffle, reduce, write.

The pipeline is single-process but keeps the semantics of a real cluster:
map tasks own fixed-size slices of the input and fresh member state, pairs
are partitioned by a hash of the key and sorted within each partition, and
every reduce partition gets its own context. Output files are byte
identical across plan sources because everything that decides bytes is
derived from values, never from physical layout:

  - partitioning hashes the key's canonical bytes; under token rewrite the
    token is translated back to its string first, so pairs land in the same
    partition they would on the raw path;
  - within a partition, pairs sort by (order-preserving key bytes, value).
    Dictionaries store their strings sorted, so token order agrees with
    string order, and ties are broken by the value itself rather than by
    arrival order, which a tree scan would permute;
  - token output keys are translated back before anything is written.
"""

from __future__ import annotations

import time
import zlib
from dataclasses import dataclass, field
from typing import Optional

from minimap.engine.context import ExecutionStats, TaskContext
from minimap.engine.interp import interpret_map, interpret_reduce
from minimap.engine.rewrite import rewrite_for_directop
from minimap.engine.sources import SourceData, load_source
from minimap.detect.descriptors import InputId
from minimap.lang.ast import RecordType, Schema
from minimap.lang.typecheck import TypedJob
from minimap.optimizer import ExecutionDescriptor
from minimap.storage.catalog import sha256_of
from minimap.storage.keys import encode_key
from minimap.storage.records import encode_record, encode_value, write_record_file

RECORDS_PER_TASK = 4096


@dataclass
class JobResult:
    output_path: str
    out_schema: Schema
    stats: ExecutionStats
    logs: list[str] = field(default_factory=list)


def run_job(typed: TypedJob, desc: ExecutionDescriptor, output_path: str,
            reducers: int = 1) -> JobResult:
    if reducers < 1:
        raise ValueError("need at least one reduce partition")
    t0 = time.perf_counter()
    src = load_source(desc, typed.schema)

    exec_typed = typed
    token_dict = None
    if desc.rewrite_fields:
        rr = rewrite_for_directop(typed, desc.rewrite_fields, src.dictionaries)
        exec_typed = rr.typed
        if rr.key_field is not None:
            token_dict = src.dictionaries[rr.key_field]

    stats = ExecutionStats(bytes_read=src.bytes_read)
    logs: list[str] = []
    job = exec_typed.job

    pairs: list[tuple] = []
    for start in range(0, len(src.records), RECORDS_PER_TASK):
        chunk = src.records[start:start + RECORDS_PER_TASK]
        ctx = TaskContext.for_job(job)
        for record in chunk:
            stats.records_scanned += 1
            stats.map_invocations += 1
            pairs.extend(interpret_map(exec_typed, record, ctx))
        logs.extend(ctx.logs)
    stats.pairs_emitted = len(pairs)

    if exec_typed.map_out_key is None:
        # map body has no emit statement: output is structurally empty
        out_schema = Schema(f"{typed.job.name}_out", [("k", "i64"), ("v", "i64")])
        write_record_file(output_path, out_schema, [])
        stats.wall_millis = (time.perf_counter() - t0) * 1000.0
        return JobResult(output_path, out_schema, stats, logs)

    mk_ty = exec_typed.map_out_key
    mv_ty = exec_typed.map_out_val
    mv_schema = exec_typed.schemas[mv_ty.schema] if isinstance(mv_ty, RecordType) else None

    parts: list[list[tuple]] = [[] for _ in range(reducers)]
    for k, v in pairs:
        kb = encode_key(k, mk_ty)
        if token_dict is not None:
            pb = encode_key(token_dict.lookup(k), "str")
        else:
            pb = kb
        if mv_schema is not None:
            vb = encode_record(v, mv_schema)
        else:
            vb = encode_value(v, mv_ty)
        stats.shuffle_bytes += len(encode_value(k, mk_ty)) + len(vb)
        parts[zlib.crc32(pb) % reducers].append((kb, v, k))

    out_key_ty: str = typed.reduce_out_key  # type: ignore[assignment]
    out_val_ty = typed.reduce_out_val
    out_val_schema = (typed.schemas[out_val_ty.schema]
                      if isinstance(out_val_ty, RecordType) else None)
    out_schema = Schema(
        f"{typed.job.name}_out",
        [("k", out_key_ty), ("v", "blob" if out_val_schema is not None else out_val_ty)])

    out_records: list[tuple] = []
    for part in parts:
        part.sort(key=lambda t: (t[0], t[1]))
        rctx = TaskContext.for_job(job)
        i = 0
        while i < len(part):
            j = i
            while j < len(part) and part[j][0] == part[i][0]:
                j += 1
            stats.reduce_groups += 1
            group_key = part[i][2]
            values = [t[1] for t in part[i:j]]
            for rk, rv in interpret_reduce(exec_typed, group_key, values, rctx):
                if token_dict is not None:
                    rk = token_dict.lookup(rk)
                if out_val_schema is not None:
                    rv = encode_record(rv, out_val_schema)
                out_records.append((rk, rv))
            i = j
        logs.extend(rctx.logs)

    if typed.job.sorted_output:
        out_records.sort(key=lambda r: encode_key(r[0], out_key_ty))

    write_record_file(output_path, out_schema, out_records)
    stats.wall_millis = (time.perf_counter() - t0) * 1000.0
    return JobResult(output_path, out_schema, stats, logs)


def run_raw(typed: TypedJob, input_path: str, output_path: str,
            reducers: int = 1) -> JobResult:
    """Run with no optimization at all: full scan of the record file."""
    ident = InputId(path=input_path, sha256=sha256_of(input_path))
    desc = ExecutionDescriptor(source="raw", path=input_path, input=ident,
                               reason="unoptimized")
    return run_job(typed, desc, output_path, reducers)


__all__ = ["JobResult", "RECORDS_PER_TASK", "run_job", "run_raw"]
