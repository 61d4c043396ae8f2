"""Benchmark harness: generate, analyze, index, run both ways, report.

The suite runs each benchmark optimized and unoptimized against the same
generated data, byte-compares the two outputs, and assembles the detection
matrix plus per-benchmark scan and size numbers. A failing benchmark is
recorded and the suite moves on; one broken artifact should not hide the
other three rows.
"""

from __future__ import annotations

import os
import time
from typing import Optional

from minimap.detect.descriptors import InputId
from minimap.detect.detectors import analyze
from minimap.engine import run_index_gen, run_job, run_raw
from minimap.errors import MiniMapError
from minimap.lang.parser import parse_program
from minimap.lang.typecheck import typecheck
from minimap.optimizer import plan
from minimap.storage.catalog import Catalog, sha256_of
from minimap.storage.records import read_record_file
from minimap.workload.benchmarks import EXPECTED_MATRIX, classify, make_benchmarks
from minimap.workload.generators import (
    DocumentGenSpec,
    UserVisitsGenSpec,
    WebPageGenSpec,
    gen_documents,
    gen_pages_blob,
    gen_uservisits,
    gen_webpages,
)

SCALES = {
    "tiny": {"pages": 5_000, "visits": 20_000, "docs": 2_000, "b1_pages": 20_000},
    "small": {"pages": 20_000, "visits": 100_000, "docs": 8_000, "b1_pages": 100_000},
}

# rank_max and threshold sized for a 0.02% pass rate on the selection job
_B1_RANK_MAX = 500_000
_B1_THRESHOLD = 499_900
_B3_TARGET_FRACTION = 0.00095


def _b3_window(visits_path: str) -> tuple[int, int]:
    """A visitDate interval [lo, hi) passing about 0.095% of the records."""
    schema, records = read_record_file(visits_path)
    col = schema.index_of("visitDate")
    dates = sorted(rec[col] for rec in records)
    n = len(dates)
    if n == 0:
        return (0, 1)
    target = max(1, round(n * _B3_TARGET_FRACTION))
    i0 = n // 2
    lo = dates[i0]
    hi = dates[min(i0 + target, n - 1)]
    if hi <= lo:
        hi = lo + 1
    return (lo, hi)


def bench_suite(scale: str, workdir: str, seed: int = 1234) -> dict:
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}, want one of {sorted(SCALES)}")
    sizes = SCALES[scale]
    os.makedirs(workdir, exist_ok=True)
    t_start = time.perf_counter()

    paths = {
        "webpages": os.path.join(workdir, "webpages.mmrf"),
        "pages_blob": os.path.join(workdir, "pages_blob.mmrf"),
        "uservisits": os.path.join(workdir, "uservisits.mmrf"),
        "documents": os.path.join(workdir, "documents.mmrf"),
    }
    gen_webpages(WebPageGenSpec(n=sizes["pages"], seed=seed), paths["webpages"])
    gen_pages_blob(WebPageGenSpec(n=sizes["b1_pages"], seed=seed + 1,
                                  rank_max=_B1_RANK_MAX), paths["pages_blob"])
    gen_uservisits(UserVisitsGenSpec(n=sizes["visits"], pages_path=paths["webpages"],
                                     seed=seed + 2), paths["uservisits"])
    gen_documents(DocumentGenSpec(n=sizes["docs"], seed=seed + 3), paths["documents"])

    b3_lo, b3_hi = _b3_window(paths["uservisits"])
    benchmarks = make_benchmarks(b1_threshold=_B1_THRESHOLD, b3_lo=b3_lo, b3_hi=b3_hi)

    catalog = Catalog(os.path.join(workdir, "catalog.jsonl"))
    matrix: dict[str, dict[str, str]] = {}
    results: dict[str, dict] = {}
    errors: dict[str, str] = {}

    for bench in benchmarks:
        try:
            matrix[bench.name], results[bench.name] = _run_benchmark(
                bench, paths[bench.dataset], catalog, workdir)
        except MiniMapError as exc:
            errors[bench.name] = f"{type(exc).__name__}: {exc}"

    report = {
        "scale": scale,
        "workdir": workdir,
        "seed": seed,
        "counts": dict(sizes),
        "b3_window": [b3_lo, b3_hi],
        "matrix": matrix,
        "matrix_expected": EXPECTED_MATRIX,
        "matrix_ok": matrix == EXPECTED_MATRIX,
        "benchmarks": results,
        "errors": errors,
        "suite_wall_millis": round((time.perf_counter() - t_start) * 1000.0, 3),
    }
    return report


def _run_benchmark(bench, input_path: str, catalog: Catalog, workdir: str):
    typed = typecheck(parse_program(bench.source))
    ident = InputId(path=input_path, sha256=sha256_of(input_path))
    doc = analyze(typed, ident)
    row = classify(doc, bench.truth)

    index_bytes: dict[str, int] = {}
    for spec in doc.index_specs:
        entry = run_index_gen(spec, input_path, catalog)
        index_bytes[spec.label] = entry.size_bytes

    entries, _ = catalog.load()
    desc = plan(doc, entries, ident, typed.schema)

    out_opt = os.path.join(workdir, f"{bench.name}_opt.mmrf")
    out_raw = os.path.join(workdir, f"{bench.name}_raw.mmrf")
    opt = run_job(typed, desc, out_opt, reducers=bench.reducers)
    raw = run_raw(typed, input_path, out_raw, reducers=bench.reducers)
    with open(out_opt, "rb") as f:
        opt_bytes = f.read()
    with open(out_raw, "rb") as f:
        raw_bytes = f.read()

    total = raw.stats.records_scanned
    result = {
        "title": bench.title,
        "plan": {"source": desc.source, "active": list(desc.active),
                 "path": os.path.basename(desc.path)},
        "records_scanned": {"raw": raw.stats.records_scanned,
                            "opt": opt.stats.records_scanned},
        "scan_fraction": (opt.stats.records_scanned / total) if total else 0.0,
        "bytes_read": {"raw": raw.stats.bytes_read, "opt": opt.stats.bytes_read},
        "wall_millis": {"raw": raw.stats.wall_millis, "opt": opt.stats.wall_millis},
        "output_rows": opt.stats.reduce_groups,
        "outputs_match": opt_bytes == raw_bytes,
        "index_bytes": index_bytes,
    }
    return row, result


def render_report(report: dict) -> str:
    lines = []
    lines.append(f"benchmark suite: scale={report['scale']} seed={report['seed']}")
    lines.append(f"workdir: {report['workdir']}")
    lines.append("")
    lines.append("detection matrix (rows: benchmarks, cells: analyzer vs ground truth)")
    opts = ("select", "project", "delta")
    header = f"{'':6}" + "".join(f"{o:>14}" for o in opts)
    lines.append(header)
    for name in sorted(report["matrix_expected"]):
        row = report["matrix"].get(name)
        if row is None:
            lines.append(f"{name:6}" + f"{'error':>14}" * len(opts))
            continue
        lines.append(f"{name:6}" + "".join(f"{row[o]:>14}" for o in opts))
    lines.append(f"matrix matches expectation: {report['matrix_ok']}")
    lines.append("")

    hdr = (f"{'bench':6}{'plan':8}{'scanned raw':>12}{'scanned opt':>12}"
           f"{'bytes raw':>12}{'bytes opt':>12}{'match':>7}")
    lines.append(hdr)
    for name in sorted(report["matrix_expected"]):
        r = report["benchmarks"].get(name)
        if r is None:
            lines.append(f"{name:6}{report['errors'].get(name, 'error')}")
            continue
        lines.append(
            f"{name:6}{r['plan']['source']:8}"
            f"{r['records_scanned']['raw']:>12}{r['records_scanned']['opt']:>12}"
            f"{r['bytes_read']['raw']:>12}{r['bytes_read']['opt']:>12}"
            f"{str(r['outputs_match']):>7}")
    lines.append("")
    for name in sorted(report["matrix_expected"]):
        r = report["benchmarks"].get(name)
        if r is None:
            continue
        sizes = ", ".join(f"{k}={v}" for k, v in sorted(r["index_bytes"].items()))
        lines.append(f"{name} indexes: {sizes if sizes else 'none'}")
    if report["errors"]:
        lines.append("")
        for name, msg in sorted(report["errors"].items()):
            lines.append(f"{name} failed: {msg}")
    return "\n".join(lines)
