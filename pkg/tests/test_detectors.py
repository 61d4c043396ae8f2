"""Optimization detectors and the analysis document they assemble."""

import random

from minimap.analysis.context import AnalysisContext
from minimap.detect.descriptors import InputId
from minimap.detect.detectors import (
    analyze,
    find_delta,
    find_direct_op,
    find_project,
    find_select,
)
from minimap.engine.context import TaskContext
from minimap.engine.interp import interpret_map

from support import ctx_of, make_job, random_filter_record, random_filter_source, typed_of

BLOB_SCHEMA = "schema PB { rank: i32; payload: blob; }"


def doc_of(body, **kw):
    return analyze(typed_of(make_job(body, **kw)))


def kinds(doc):
    return [d.kind for d in doc.descriptors]


# --------------------------------------------------------------------------
# find_project

def test_project_drops_unreferenced_fields():
    ctx = ctx_of(make_job("emit(v.url, v.rank);"))
    assert find_project(ctx) == {"content"}


def test_project_keeps_guard_fields():
    ctx = ctx_of(make_job("if (v.rank > 1) { emit(v.url, v.content); }"))
    assert find_project(ctx) == set()


def test_project_ignores_log_statements():
    # a log consumes the field but its loss only degrades the log text
    ctx = ctx_of(make_job("log(v.rank); emit(v.url, v.content);"))
    assert find_project(ctx) == {"rank"}


def test_project_keeps_fields_feeding_member_writes():
    ctx = ctx_of(make_job("seen = v.rank; emit(v.url, v.content);",
                          members="seen: i64 = 0;"))
    assert "rank" not in find_project(ctx)


def test_project_blob_schema_disabled():
    ctx = ctx_of(make_job("emit(v.rank, 1);", schema=BLOB_SCHEMA, schema_name="PB"))
    assert find_project(ctx) == set()


def test_project_loop_falls_back_to_referenced_fields():
    ctx = ctx_of(make_job(
        "let i = 0; while (i < 2) { i = i + 1; } emit(v.url, i);"))
    assert find_project(ctx) == {"rank", "content"}


def test_project_whole_record_emit_drops_nothing():
    ctx = ctx_of(make_job("emit(v.url, v);"))
    assert find_project(ctx) == set()


def test_project_zeroed_fields_leave_output_unchanged():
    """Soundness: dropped fields never influence the emitted pairs."""
    zero = {"str": "", "i32": 0, "i64": 0, "blob": b""}
    checked = 0
    for seed in range(40):
        rng = random.Random(500 + seed)
        typed = typed_of(random_filter_source(rng))
        doc = analyze(typed)
        project = doc.get("project")
        if project is None:
            continue
        schema = typed.schema
        drop_idx = [i for i, (n, _) in enumerate(schema.fields)
                    if n in project.dropped_fields]
        for _ in range(20):
            rec = random_filter_record(rng)
            blanked = tuple(zero[schema.fields[i][1]] if i in drop_idx else val
                            for i, val in enumerate(rec))
            full = interpret_map(typed, rec, TaskContext.for_job(typed.job))
            cut = interpret_map(typed, blanked, TaskContext.for_job(typed.job))
            assert full == cut
            checked += 1
    assert checked > 100


# --------------------------------------------------------------------------
# find_delta

def test_delta_covers_surviving_int_fields():
    ctx = ctx_of(make_job("emit(v.url, v.rank);"))
    assert find_delta(ctx, set()) == ["rank"]
    assert find_delta(ctx, {"rank"}) == []


def test_delta_blob_schema_disabled():
    ctx = ctx_of(make_job("emit(v.rank, 1);", schema=BLOB_SCHEMA, schema_name="PB"))
    assert find_delta(ctx, set()) == []


def test_delta_includes_i32_and_i64():
    src = make_job("emit(v.a, v.b); emit(v.a, v.c);",
                   schema="schema S { a: str; b: i32; c: i64; }", schema_name="S")
    assert find_delta(ctx_of(src), set()) == ["b", "c"]


# --------------------------------------------------------------------------
# find_direct_op

def test_direct_op_sole_emit_key_field():
    assert find_direct_op(ctx_of(make_job("emit(v.url, v.rank);"))) == ["url"]


def test_direct_op_equality_against_literal():
    got = find_direct_op(ctx_of(make_job(
        'if (v.content == "x") { emit(v.url, v.rank); }')))
    assert got == ["url", "content"]


def test_direct_op_rejects_substring_use():
    assert find_direct_op(ctx_of(make_job("emit(substr(v.url, 0, 2), v.rank);"))) == []


def test_direct_op_rejects_ordered_comparison():
    assert find_direct_op(ctx_of(make_job(
        'if (v.url < "m") { emit(v.url, v.rank); }'))) == []


def test_direct_op_rejects_sorted_output():
    assert find_direct_op(ctx_of(make_job("emit(v.url, v.rank);",
                                          sorted_out=True))) == []


def test_direct_op_requires_opaque_reduce_key():
    ctx = ctx_of(make_job(
        "emit(v.url, v.rank);",
        reduce_body="while (has_next(vals)) { emit(substr(k, 0, 1), next(vals)); }"))
    assert find_direct_op(ctx) == []


def test_direct_op_same_field_comparison_ok():
    got = find_direct_op(ctx_of(make_job(
        'if (v.content != "") { emit(v.url, v.rank); }')))
    assert "content" in got


# --------------------------------------------------------------------------
# analyze: the functional gate

def test_gate_member_write_refuses_all_descriptors():
    doc = doc_of(
        "numMapsRun = numMapsRun + 1; "
        "if (v.rank > 100) { emit(v.url, v.rank); } "
        'if (numMapsRun > 200) { emit("LONG_TAIL", numMapsRun); }',
        members="numMapsRun: i64 = 0;")
    assert doc.descriptors == [] and doc.index_specs == []


def test_gate_member_read_refuses_all_descriptors():
    doc = doc_of("if (seen > 0) { emit(v.url, v.rank); }",
                 members="seen: i64 = 0;")
    assert doc.descriptors == [] and doc.index_specs == []


def test_gate_impure_builtin_refuses_all_descriptors():
    doc = doc_of('let x = table_get(v.url); emit(v.url, x);')
    assert doc.descriptors == [] and doc.index_specs == []
    doc2 = doc_of('let x = table_put(v.url, v.rank); emit(v.url, v.rank);')
    assert doc2.descriptors == []


def test_gate_member_in_reduce_is_allowed():
    doc = doc_of("emit(v.url, v.rank);",
                 reduce_body="t = t + 1; while (has_next(vals)) "
                             "{ emit(k, next(vals)); }",
                 members="t: i64 = 0;")
    assert "project" in kinds(doc)


def test_pure_job_keeps_descriptors():
    doc = doc_of("if (v.rank > 100) { emit(v.url, v.rank); }")
    assert kinds(doc) == ["select", "project", "delta", "direct_op"]


# --------------------------------------------------------------------------
# analyze: document assembly

def test_document_identity_fields():
    iid = InputId("data/in.mmrf", "ab" * 32)
    typed = typed_of(make_job("emit(v.url, v.rank);"))
    doc = analyze(typed, iid)
    assert doc.schema_name == "WebPages" and doc.job_name == "J"
    assert doc.input == iid
    assert doc.to_json()["input"] == {"path": "data/in.mmrf", "sha256": "ab" * 32}


def test_index_specs_one_per_descriptor_plus_combined():
    doc = doc_of("if (v.rank > 100) { emit(v.url, v.rank); }")
    assert [s.label for s in doc.index_specs] == \
        ["select", "project", "delta", "direct_op", "combined"]
    by = {s.label: s for s in doc.index_specs}
    assert by["select"].index_field == "rank"
    assert by["select"].retained_fields == ["url", "rank", "content"]
    assert by["project"].retained_fields == ["url", "rank"]
    assert by["delta"].codecs == {"rank": "delta"}
    assert by["direct_op"].codecs == {"url": "dict"}
    # select survives projection, so the combined artifact is a tree
    assert by["combined"].index_field == "rank"
    assert by["combined"].retained_fields == ["url", "rank"]


def test_combined_without_select_is_columnar():
    doc = doc_of("emit(v.url, v.rank);")
    by = {s.label: s for s in doc.index_specs}
    assert by["combined"].index_field is None
    assert by["combined"].codecs == {"rank": "delta", "url": "dict"}
    assert by["combined"].retained_fields == ["url", "rank"]


def test_analyze_is_deterministic():
    src = make_job('if (v.rank > 1 || v.url == "a") { emit(v.url, v.rank); }')
    a = analyze(typed_of(src)).to_json()
    b = analyze(typed_of(src)).to_json()
    assert a == b


def test_select_candidates_follow_atom_fields():
    doc = doc_of('if (v.rank > 1 && v.url == "a") { emit(v.url, v.rank); }')
    sel = doc.get("select")
    assert sel.candidate_fields == ["rank", "url"] or \
        sel.candidate_fields == ["url", "rank"]
