"""Interpreter semantics, the runner, token rewrite, index generation."""

import os

import pytest

from minimap.engine.context import TaskContext
from minimap.engine.indexgen import artifact_path, run_index_gen
from minimap.engine.interp import interpret_map, interpret_reduce
from minimap.engine.rewrite import rewrite_for_directop
from minimap.engine.runner import run_job, run_raw
from minimap.errors import JobError, PlanMismatchError, RewriteError
from minimap.lang.ast import IfStmt
from minimap.lang.pretty import pretty_expr
from minimap.optimizer import ExecutionDescriptor
from minimap.storage.catalog import Catalog
from minimap.storage.dictionary import Dictionary
from minimap.storage.records import (
    decode_record,
    read_record_file,
    write_record_file,
)

from support import (
    analyze_and_plan,
    canon,
    input_id_of,
    make_job,
    typed_of,
)


def run_map(body, record, **kw):
    typed = typed_of(make_job(body, **kw))
    return interpret_map(typed, record, TaskContext.for_job(typed.job))


# --------------------------------------------------------------------------
# interpreter

def test_interp_division_truncates_toward_zero():
    body = ("let a = 0 - 7; emit(\"dn\", a / 2); emit(\"dp\", 7 / 2); "
            "emit(\"q\", 7 / (0 - 2));")
    got = dict(run_map(body, ("u", 0, "c")))
    assert got == {"dn": -3, "dp": 3, "q": -3}


def test_interp_modulo_sign_follows_dividend():
    body = ("let a = 0 - 7; emit(\"mn\", a % 2); "
            "emit(\"mp\", 7 % (0 - 2));")
    got = dict(run_map(body, ("u", 0, "c")))
    assert got == {"mn": -1, "mp": 1}


def test_interp_division_by_zero_raises():
    with pytest.raises(JobError, match="division by zero"):
        run_map("emit(v.url, v.rank / (v.rank - v.rank));", ("u", 3, "c"))


def test_interp_loop_budget_enforced():
    body = ("let i = 0; while (i < 2000000) { i = i + 1; } emit(v.url, i);")
    with pytest.raises(JobError, match="loop iteration budget"):
        run_map(body, ("u", 0, "c"))


def test_interp_threshold_guard():
    body = "if (v.rank > 1) { emit(v.url, v.rank); }"
    for rank in range(4):
        pairs = run_map(body, ("u", rank, "c"))
        assert pairs == ([("u", rank)] if rank > 1 else [])


def test_interp_reduce_sum():
    typed = typed_of(make_job(
        "emit(v.url, v.rank);",
        reduce_body="let total = 0; while (has_next(vals)) "
                    "{ total = total + next(vals); } emit(k, total);"))
    ctx = TaskContext.for_job(typed.job)
    assert interpret_reduce(typed, "u", [1, 2, 3], ctx) == [("u", 6)]


COUNTER = ('numMapsRun = numMapsRun + 1; '
           'if (v.rank > 100) { emit(v.url, v.rank); } '
           'if (numMapsRun > 200) { emit("LONG_TAIL", numMapsRun); }')


def test_member_counter_spans_records_in_a_chunk(tmp_path):
    typed = typed_of(make_job(COUNTER, members="numMapsRun: i64 = 0;"))
    inp = str(tmp_path / "in.mmrf")
    write_record_file(inp, typed.schema, [("u%d" % i, 0, "") for i in range(201)])
    run_raw(typed, inp, str(tmp_path / "o.mmrf"))
    _, out = read_record_file(str(tmp_path / "o.mmrf"))
    assert out == [("LONG_TAIL", 201)]


def test_member_counter_resets_per_chunk(tmp_path):
    # 4097 records split 4096 + 1; the second chunk starts a fresh counter
    typed = typed_of(make_job(COUNTER, members="numMapsRun: i64 = 0;"))
    inp = str(tmp_path / "in.mmrf")
    write_record_file(inp, typed.schema, [("u%d" % i, 0, "") for i in range(4097)])
    run_raw(typed, inp, str(tmp_path / "o.mmrf"))
    _, out = read_record_file(str(tmp_path / "o.mmrf"))
    vals = sorted(v for _, v in out)
    assert len(vals) == 4096 - 200
    assert vals[0] == 201 and vals[-1] == 4096


def test_logs_are_collected_in_order(tmp_path):
    typed = typed_of(make_job("log(v.url); log(v.rank); emit(v.url, v.rank);"))
    inp = str(tmp_path / "in.mmrf")
    write_record_file(inp, typed.schema, [("a", 1, ""), ("b", 2, "")])
    res = run_raw(typed, inp, str(tmp_path / "o.mmrf"))
    assert res.logs == ["a", "1", "b", "2"]


# --------------------------------------------------------------------------
# runner

RICH = "if (v.rank > 100) { emit(v.url, v.rank); }"


def _rows(n=200):
    return [("u%03d" % i, (i * 7) % 300, "c" * 20) for i in range(n)]


def _write(tmp_path, rows):
    inp = str(tmp_path / "in.mmrf")
    typed = typed_of(make_job(RICH))
    write_record_file(inp, typed.schema, rows)
    return typed, inp


def test_run_raw_small_frozen(tmp_path):
    typed = typed_of(make_job("emit(v.url, v.rank);"))
    inp = str(tmp_path / "in.mmrf")
    write_record_file(inp, typed.schema, [("a", 1, ""), ("b", 2, "")])
    res = run_raw(typed, inp, str(tmp_path / "o.mmrf"))
    assert res.out_schema.name == "J_out"
    assert res.out_schema.fields == [("k", "str"), ("v", "i64")]
    assert res.stats.records_scanned == 2
    assert res.stats.map_invocations == 2
    assert res.stats.pairs_emitted == 2
    assert res.stats.reduce_groups == 2
    _, out = read_record_file(str(tmp_path / "o.mmrf"))
    assert out == [("a", 1), ("b", 2)]


def test_btree_run_matches_raw_and_reads_less(tmp_path):
    # enough rows that page-granular reads amortize against the raw file
    rows = _rows(2000)
    typed, inp = _write(tmp_path, rows)
    raw = run_raw(typed, inp, str(tmp_path / "raw.mmrf"))
    doc, entries, desc = analyze_and_plan(typed, inp, str(tmp_path))
    assert desc.source == "btree" and "select" in desc.active
    opt = run_job(typed, desc, str(tmp_path / "opt.mmrf"))
    assert canon(str(tmp_path / "opt.mmrf")) == canon(str(tmp_path / "raw.mmrf"))
    matching = sum(1 for r in rows if r[1] > 100)
    assert opt.stats.records_scanned == matching
    assert raw.stats.records_scanned == len(rows)
    assert opt.stats.map_invocations == opt.stats.records_scanned
    assert opt.stats.pairs_emitted == raw.stats.pairs_emitted == matching
    assert opt.stats.bytes_read < raw.stats.bytes_read


def test_cgf_run_matches_raw(tmp_path):
    rows = _rows()
    typed, inp = _write(tmp_path, rows)
    run_raw(typed, inp, str(tmp_path / "raw.mmrf"))
    doc, entries, desc = analyze_and_plan(typed, inp, str(tmp_path),
                                          drop_select=True)
    assert desc.source == "cgf" and "select" not in desc.active
    opt = run_job(typed, desc, str(tmp_path / "opt.mmrf"))
    assert canon(str(tmp_path / "opt.mmrf")) == canon(str(tmp_path / "raw.mmrf"))
    assert opt.stats.records_scanned == len(rows)


def test_rewrite_run_matches_raw(tmp_path):
    rows = _rows()
    typed, inp = _write(tmp_path, rows)
    run_raw(typed, inp, str(tmp_path / "raw.mmrf"))
    from minimap.detect.detectors import analyze
    from minimap.optimizer import plan
    iid = input_id_of(inp)
    doc = analyze(typed, iid)
    from support import build_artifacts
    entries = build_artifacts(doc, inp, str(tmp_path))
    only_dict = [e for e in entries if e.label == "direct_op"]
    desc = plan(doc, only_dict, iid, typed.schema)
    assert desc.active == ["direct_op"] and desc.rewrite_fields == ["url"]
    opt = run_job(typed, desc, str(tmp_path / "opt.mmrf"))
    assert canon(str(tmp_path / "opt.mmrf")) == canon(str(tmp_path / "raw.mmrf"))


def test_reducer_count_does_not_change_output(tmp_path):
    rows = _rows(150)
    typed, inp = _write(tmp_path, rows)
    outs = []
    for n in (1, 2, 3):
        p = str(tmp_path / f"o{n}.mmrf")
        run_raw(typed, inp, p, reducers=n)
        outs.append(canon(p))
    assert outs[0] == outs[1] == outs[2]


def test_contradictory_guard_scans_nothing(tmp_path):
    typed = typed_of(make_job(
        "if (v.rank > 100 && v.rank < 50) { emit(v.url, v.rank); }"))
    inp = str(tmp_path / "in.mmrf")
    write_record_file(inp, typed.schema, _rows(60))
    raw = run_raw(typed, inp, str(tmp_path / "raw.mmrf"))
    doc, entries, desc = analyze_and_plan(typed, inp, str(tmp_path))
    assert desc.source == "btree" and desc.ranges.is_empty()
    opt = run_job(typed, desc, str(tmp_path / "opt.mmrf"))
    assert opt.stats.records_scanned == 0
    assert canon(str(tmp_path / "opt.mmrf")) == canon(str(tmp_path / "raw.mmrf"))
    _, out = read_record_file(str(tmp_path / "opt.mmrf"))
    assert out == []


def test_sorted_output_is_globally_ordered(tmp_path):
    typed = typed_of(make_job("emit(v.url, v.rank);", sorted_out=True))
    inp = str(tmp_path / "in.mmrf")
    rows = [("u%03d" % ((i * 37) % 100), i, "") for i in range(100)]
    write_record_file(inp, typed.schema, rows)
    run_raw(typed, inp, str(tmp_path / "o.mmrf"), reducers=3)
    _, out = read_record_file(str(tmp_path / "o.mmrf"))
    keys = [k for k, _ in out]
    assert keys == sorted(keys)
    assert len(out) == 100


def test_whole_record_value_roundtrips_as_blob(tmp_path):
    typed = typed_of(make_job("emit(v.url, v);"))
    inp = str(tmp_path / "in.mmrf")
    rows = [("a", 1, "x"), ("b", 2, "y")]
    write_record_file(inp, typed.schema, rows)
    res = run_raw(typed, inp, str(tmp_path / "o.mmrf"))
    assert res.out_schema.fields == [("k", "str"), ("v", "blob")]
    _, out = read_record_file(str(tmp_path / "o.mmrf"))
    assert [(k, decode_record(v, typed.schema)) for k, v in out] == \
        [("a", ("a", 1, "x")), ("b", ("b", 2, "y"))]


def test_map_without_emit_writes_empty_output(tmp_path):
    typed = typed_of(make_job("log(v.url);"))
    inp = str(tmp_path / "in.mmrf")
    write_record_file(inp, typed.schema, [("a", 1, "")])
    res = run_raw(typed, inp, str(tmp_path / "o.mmrf"))
    _, out = read_record_file(str(tmp_path / "o.mmrf"))
    assert out == [] and res.stats.pairs_emitted == 0


def test_schema_mismatch_is_plan_mismatch(tmp_path):
    other = typed_of(make_job("emit(v.k, 1);",
                              schema="schema T { k: i64; s: str; }",
                              schema_name="T"))
    inp = str(tmp_path / "t.mmrf")
    write_record_file(inp, other.schema, [(1, "a")])
    typed = typed_of(make_job(RICH))
    with pytest.raises(PlanMismatchError):
        run_raw(typed, inp, str(tmp_path / "o.mmrf"))


def test_btree_descriptor_without_ranges_is_plan_mismatch(tmp_path):
    typed, inp = _write(tmp_path, _rows(20))
    desc = ExecutionDescriptor(source="btree", path=inp,
                               input=input_id_of(inp))
    with pytest.raises(PlanMismatchError):
        run_job(typed, desc, str(tmp_path / "o.mmrf"))


# --------------------------------------------------------------------------
# token rewrite

DICT = Dictionary.build(["a", "b"])


def test_rewrite_replaces_literal_with_token():
    typed = typed_of(make_job('if (v.url == "b") { emit(v.url, v.rank); }'))
    rr = rewrite_for_directop(typed, ["url"], {"url": DICT})
    assert rr.key_field == "url"
    guard = [s for s in rr.typed.job.map_body if isinstance(s, IfStmt)][0]
    assert pretty_expr(guard.cond) == "v.url == 1"


def test_rewrite_absent_literal_becomes_impossible_token():
    typed = typed_of(make_job('if (v.url == "zzz") { emit(v.url, v.rank); }'))
    rr = rewrite_for_directop(typed, ["url"], {"url": DICT})
    guard = [s for s in rr.typed.job.map_body if isinstance(s, IfStmt)][0]
    assert pretty_expr(guard.cond) == "v.url == -1"


def test_rewrite_refuses_sorted_jobs():
    typed = typed_of(make_job("emit(v.url, v.rank);", sorted_out=True))
    with pytest.raises(RewriteError, match="sorted"):
        rewrite_for_directop(typed, ["url"], {"url": DICT})


def test_rewrite_refuses_type_breaking_uses():
    typed = typed_of(make_job("emit(v.url, len(v.url));"))
    with pytest.raises(RewriteError, match="typecheck"):
        rewrite_for_directop(typed, ["url"], {"url": DICT})


# --------------------------------------------------------------------------
# index generation

def test_index_gen_files_catalog_and_verify(tmp_path):
    from minimap.detect.detectors import analyze
    typed = typed_of(make_job(RICH))
    inp = str(tmp_path / "in.mmrf")
    write_record_file(inp, typed.schema, _rows(50))
    doc = analyze(typed, input_id_of(inp))
    cat = Catalog(str(tmp_path / "cat.jsonl"))
    for spec in doc.index_specs:
        entry = run_index_gen(spec, inp, catalog=cat)
        ext = "mmix" if entry.artifact == "btree" else "mmcg"
        assert entry.path == f"{inp}.{spec.label}.{ext}"
        assert entry.path == artifact_path(inp, spec.label, entry.artifact)
        assert os.path.getsize(entry.path) == entry.size_bytes
        assert entry.rows == 50
        ok, reason = cat.verify(entry)
        assert ok, reason
        for p in entry.dict_paths.values():
            assert os.path.exists(p)
    entries, bad = cat.load()
    assert bad == [] and len(entries) == len(doc.index_specs)


def test_index_gen_out_dir_redirects_artifacts(tmp_path):
    from minimap.detect.detectors import analyze
    typed = typed_of(make_job(RICH))
    inp = str(tmp_path / "in.mmrf")
    write_record_file(inp, typed.schema, _rows(30))
    doc = analyze(typed, input_id_of(inp))
    alt = tmp_path / "artifacts"
    alt.mkdir()
    spec = doc.index_specs[0]
    entry = run_index_gen(spec, inp, out_dir=str(alt))
    assert os.path.dirname(entry.path) == str(alt)
    assert os.path.exists(entry.path)
