"""The four modeled benchmark jobs and their detection ground truth.

Each benchmark pairs a MiniMap program with the set of optimization
opportunities that are semantically present in it, whether or not the
analyzer can prove them. Two are deliberately analyzer-defeating: the
selection job stores everything but its key inside an opaque payload blob,
and the text-scan job routes its filter through the mutable lookup table.
Both have transparent siblings that differ only in that obfuscation, for
showing what the analysis recovers once it can see the data.

Matrix cells: "detected" when the analyzer produced the descriptor,
"undetected" when it did not but the opportunity is really there,
"not_present" when there was nothing to find.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from minimap.detect.descriptors import AnalysisDocument

MATRIX_OPTS = ("select", "project", "delta")

EXPECTED_MATRIX = {
    "B1": {"select": "detected", "project": "undetected", "delta": "undetected"},
    "B2": {"select": "not_present", "project": "detected", "delta": "detected"},
    "B3": {"select": "detected", "project": "not_present", "delta": "detected"},
    "B4": {"select": "undetected", "project": "not_present", "delta": "not_present"},
}


@dataclass
class Benchmark:
    name: str
    title: str
    source: str
    dataset: str                  # key into the suite's generated files
    truth: dict[str, bool]        # opportunity actually present?
    sibling: Optional[str] = None # transparent variant of the same task
    notes: str = ""
    reducers: int = field(default=1)


def classify(doc: AnalysisDocument, truth: dict[str, bool]) -> dict[str, str]:
    out = {}
    for kind in MATRIX_OPTS:
        if doc.get(kind) is not None:
            out[kind] = "detected"
        elif truth[kind]:
            out[kind] = "undetected"
        else:
            out[kind] = "not_present"
    return out


_PAGES_BLOB_SCHEMA = """\
schema Pages {
  rank: i32;
  payload: blob;
}
"""

_WEBPAGES_SCHEMA = """\
schema WebPages {
  url: str;
  rank: i32;
  content: str;
}
"""

_USERVISITS_SCHEMA = """\
schema UserVisits {
  sourceIP: str;
  destURL: str;
  visitDate: i64;
  adRevenue: i32;
  userAgent: str;
  countryCode: str;
  languageCode: str;
  searchWord: str;
  duration: i32;
}
"""

_DOCUMENTS_SCHEMA = """\
schema Documents {
  url: str;
  content: blob;
}
"""


def make_b1(threshold: int) -> Benchmark:
    source = _PAGES_BLOB_SCHEMA + f"""
job RankSelect on Pages {{
  map(k, v) {{
    if (v.rank > {threshold}) {{
      emit(k, v);
    }}
  }}
  reduce(k, vals) {{
    while (has_next(vals)) {{
      emit(k, next(vals));
    }}
  }}
}}
"""
    sibling = _WEBPAGES_SCHEMA + f"""
job RankSelectTyped on WebPages {{
  map(k, v) {{
    if (v.rank > {threshold}) {{
      emit(v.url, v.rank);
    }}
  }}
  reduce(k, vals) {{
    while (has_next(vals)) {{
      emit(k, next(vals));
    }}
  }}
}}
"""
    return Benchmark(
        name="B1",
        title="rank selection over opaque page tuples",
        source=source,
        dataset="pages_blob",
        # the payload hides an unused content field and an integer rank
        truth={"select": True, "project": True, "delta": True},
        sibling=sibling,
        notes="custom serialization leaves only the key visible",
    )


def make_b2() -> Benchmark:
    source = _USERVISITS_SCHEMA + """
job RevenueBySource on UserVisits {
  map(k, v) {
    emit(v.sourceIP, v.adRevenue);
  }
  reduce(k, vals) {
    let total = 0;
    while (has_next(vals)) {
      total = total + next(vals);
    }
    emit(k, total);
  }
}
"""
    return Benchmark(
        name="B2",
        title="ad revenue summed per source address",
        source=source,
        dataset="uservisits",
        # every record flows to the reduce: nothing to select
        truth={"select": False, "project": True, "delta": True},
    )


def make_b3(lo: int, hi: int) -> Benchmark:
    source = _USERVISITS_SCHEMA + f"""
job VisitWindow on UserVisits {{
  map(k, v) {{
    if (v.visitDate >= {lo} && v.visitDate < {hi}) {{
      emit(v.sourceIP, v);
    }}
  }}
  reduce(k, vals) {{
    while (has_next(vals)) {{
      emit(k, next(vals));
    }}
  }}
}}
"""
    return Benchmark(
        name="B3",
        title="date-window filter feeding the join side",
        source=source,
        dataset="uservisits",
        # whole records are emitted, so every field is needed
        truth={"select": True, "project": False, "delta": True},
        notes="models the selection inside a join's map task",
    )


def make_b4() -> Benchmark:
    source = _DOCUMENTS_SCHEMA + """
job ContentScan on Documents {
  map(k, v) {
    let size = len(v.content);
    table_put(v.url, size);
    if (table_get(v.url) > 600) {
      emit(v.url, size);
    }
  }
  reduce(k, vals) {
    let total = 0;
    while (has_next(vals)) {
      total = total + next(vals);
    }
    emit(k, total);
  }
}
"""
    sibling = _DOCUMENTS_SCHEMA + """
job ContentScanPure on Documents {
  map(k, v) {
    if (v.url < "http://www.site300.example.com/") {
      emit(v.url, len(v.content));
    }
  }
  reduce(k, vals) {
    let total = 0;
    while (has_next(vals)) {
      total = total + next(vals);
    }
    emit(k, total);
  }
}
"""
    return Benchmark(
        name="B4",
        title="text-scan aggregation filtered through the lookup table",
        source=source,
        dataset="documents",
        # the filter is real but threaded through mutable table state; the
        # schema is key plus blob, so nothing to project or delta-code
        truth={"select": True, "project": False, "delta": False},
        sibling=sibling,
        notes="impure condition defeats path analysis",
    )


def make_benchmarks(*, b1_threshold: int, b3_lo: int, b3_hi: int) -> list[Benchmark]:
    return [make_b1(b1_threshold), make_b2(), make_b3(b3_lo, b3_hi), make_b4()]


def make_sum_duration_job() -> str:
    """Duration summed per destination URL: the direct-operation showcase."""
    return _USERVISITS_SCHEMA + """
job SumDurationByDest on UserVisits {
  map(k, v) {
    emit(v.destURL, v.duration);
  }
  reduce(k, vals) {
    let total = 0;
    while (has_next(vals)) {
      total = total + next(vals);
    }
    emit(k, total);
  }
}
"""
