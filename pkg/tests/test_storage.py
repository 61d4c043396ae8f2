"""Record files, varints, dictionaries, column files, trees, catalog."""

import dataclasses
import fcntl
import os
import random

import pytest
from hypothesis import given, strategies as st

import minimap.storage.catalog as catalog_mod
from minimap.errors import DecodeError, LockError, UnsortedInputError
from minimap.lang.parser import parse_program
from minimap.optimizer import KeyRange, KeyRangeSet
from minimap.storage.btree import BTreeReader, build_btree
from minimap.storage.catalog import Catalog, CatalogEntry, sha256_of
from minimap.storage.columns import ColumnFileReader, write_column_file
from minimap.storage.dictionary import ABSENT, Dictionary
from minimap.storage.keys import encode_key
from minimap.storage.records import (
    RecordWriter,
    decode_record,
    encode_record,
    read_record_file,
    write_record_file,
)
from minimap.storage.varint import (
    decode_deltas,
    encode_deltas,
    read_uvarint,
    unzigzag,
    write_uvarint,
    zigzag,
)

WEB = parse_program(
    "schema WebPages { url: str; rank: i64; content: str; }"
    " job J on WebPages { map(k, v) { emit(v.url, v.rank); }"
    " reduce(k, vals) { emit(k, 1); } }").schemas[0]

MIXED = parse_program(
    "schema S { url: str; rank: i64; n: i32; raw: blob; }"
    " job J on S { map(k, v) { emit(v.url, v.rank); }"
    " reduce(k, vals) { emit(k, 1); } }").schemas[0]

KS = parse_program(
    "schema T { k: i64; s: str; }"
    " job J on T { map(k, v) { emit(v.k, 1); } reduce(k, vals) { emit(k, 1); } }"
).schemas[0]


# --------------------------------------------------------------------------
# varint

def test_zigzag_small_values():
    assert [zigzag(v) for v in (0, -1, 1, -2, 2)] == [0, 1, 2, 3, 4]
    for v in (0, -1, 1, 63, -64, 2**62, -(2**62)):
        assert unzigzag(zigzag(v)) == v


def test_uvarint_frozen_encodings():
    def enc(u):
        out = bytearray()
        write_uvarint(out, u)
        return bytes(out)
    assert enc(0) == b"\x00"
    assert enc(127) == b"\x7f"
    assert enc(128) == b"\x80\x01"
    assert enc(300) == b"\xac\x02"
    assert len(enc(2**64 - 1)) == 10


@given(st.integers(0, 2**64 - 1))
def test_uvarint_roundtrip(u):
    out = bytearray()
    write_uvarint(out, u)
    got, off = read_uvarint(bytes(out), 0)
    assert got == u and off == len(out)


def test_uvarint_truncated():
    with pytest.raises(DecodeError, match="truncated varint"):
        read_uvarint(b"\x80", 0)


def test_uvarint_too_long():
    with pytest.raises(DecodeError, match="longer than 10 bytes"):
        read_uvarint(b"\x80" * 11, 0)


def test_deltas_frozen_example():
    enc = encode_deltas([100, 101, 99, 99])
    assert enc == b"\xc8\x01\x02\x03\x00"
    assert decode_deltas(enc, 4) == [100, 101, 99, 99]


@given(st.lists(st.integers(-(2**63), 2**63 - 1), max_size=30))
def test_deltas_roundtrip_any_i64(vals):
    assert decode_deltas(encode_deltas(vals), len(vals)) == vals


def test_deltas_wrap_across_i64_boundary():
    vals = [2**63 - 1, -(2**63), 0]
    assert decode_deltas(encode_deltas(vals), 3) == vals


# --------------------------------------------------------------------------
# key encoding

def test_key_int_order_preserving():
    vals = [-(2**62), -5, -1, 0, 1, 7, 2**62]
    enc = [encode_key(v, "i64") for v in vals]
    assert enc == sorted(enc)
    assert all(len(e) == 8 for e in enc)


def test_key_int_wraps_to_64_bits():
    assert encode_key(2**70, "i64") == encode_key(0, "i64")
    assert encode_key(2**70, "i64").hex() == "8000000000000000"


def test_key_str_is_utf8():
    assert encode_key("mé", "str") == "mé".encode("utf-8")
    assert encode_key("a", "str") < encode_key("a\x00", "str")


# --------------------------------------------------------------------------
# record files

def test_record_frozen_bytes():
    enc = encode_record(("a", 1, ""), WEB)
    assert enc.hex() == "0100000061010000000000000000000000"
    assert len(enc) == 17
    assert decode_record(enc, WEB) == ("a", 1, "")


def test_record_file_roundtrip_mixed_types(tmp_path):
    rows = [("", 0, 0, b""),
            ("x" * 300, -(2**63), -(2**31), bytes(range(256))),
            ("über", 2**63 - 1, 2**31 - 1, b"\x00")]
    p = str(tmp_path / "a.mmrf")
    write_record_file(p, MIXED, rows)
    schema, back = read_record_file(p)
    assert [tuple(f) for f in schema.fields] == [tuple(f) for f in MIXED.fields]
    assert back == rows


def test_record_file_ints_wrap_to_declared_width(tmp_path):
    p = str(tmp_path / "w.mmrf")
    write_record_file(p, MIXED, [("a", 2**64 + 5, 2**31, b"")])
    _, back = read_record_file(p)
    assert back == [("a", 5, -(2**31), b"")]


@given(st.lists(st.tuples(st.text(max_size=6),
                          st.integers(-(2**63), 2**63 - 1),
                          st.integers(-(2**31), 2**31 - 1),
                          st.binary(max_size=6)), max_size=8))
def test_record_file_roundtrip_property(tmp_path_factory, rows):
    p = str(tmp_path_factory.mktemp("rr") / "r.mmrf")
    write_record_file(p, MIXED, rows)
    _, back = read_record_file(p)
    assert back == rows


def test_record_file_every_corruption_is_decodeerror(tmp_path):
    p = str(tmp_path / "c.mmrf")
    write_record_file(p, MIXED, [("abc", 5, 1, b"\x00\xff"), ("b", -9, -2, b"")])
    data = open(p, "rb").read()
    bad = str(tmp_path / "bad.mmrf")
    for off in range(len(data)):
        flipped = bytearray(data)
        flipped[off] ^= 0xFF
        with open(bad, "wb") as f:
            f.write(bytes(flipped))
        with pytest.raises(DecodeError):
            read_record_file(bad)


def test_record_file_truncation_and_empty(tmp_path):
    p = str(tmp_path / "t.mmrf")
    write_record_file(p, WEB, [("a", 1, "b")])
    data = open(p, "rb").read()
    for cut in (0, 3, 10, len(data) - 1):
        with open(p, "wb") as f:
            f.write(data[:cut])
        with pytest.raises(DecodeError):
            read_record_file(p)


def test_record_writer_abort_leaves_nothing(tmp_path):
    p = str(tmp_path / "x.mmrf")
    w = RecordWriter(p, WEB)
    w.write(("a", 1, "b"))
    w.abort()
    assert os.listdir(tmp_path) == []


def test_record_writer_is_atomic(tmp_path):
    p = str(tmp_path / "y.mmrf")
    with RecordWriter(p, WEB) as w:
        w.write(("a", 1, "b"))
        assert not os.path.exists(p)
    assert os.path.exists(p) and not os.path.exists(p + ".tmp")


# --------------------------------------------------------------------------
# dictionary

def test_dictionary_sorted_unique_tokens():
    d = Dictionary.build(["b", "a", "b", "c"])
    assert [d.lookup(t) for t in range(3)] == ["a", "b", "c"]
    assert d.token("b") == 1
    assert d.token("zz") == ABSENT == -1


def test_dictionary_encode_column():
    d = Dictionary.build(["a", "b", "a"])
    assert d.encode_column(["a", "b", "a"]) == [0, 1, 0]


def test_dictionary_prefix_range_frozen():
    d = Dictionary.build(["b", "a", "b", "c"])
    assert d.prefix_range("b", "c") == range(1, 2)
    assert d.prefix_range(None, None) == range(0, 3)
    assert d.prefix_range("a", None) == range(0, 3)
    assert d.prefix_range(None, "b") == range(0, 1)
    assert d.prefix_range("ab", "bz") == range(1, 2)


@given(st.lists(st.text(alphabet="abc", max_size=3), min_size=1, max_size=12),
       st.text(alphabet="abc", max_size=3), st.text(alphabet="abc", max_size=3))
def test_dictionary_prefix_range_matches_scan(values, lo, hi):
    d = Dictionary.build(values)
    uniq = sorted(set(values))
    got = d.prefix_range(lo, hi)
    want = [t for t, s in enumerate(uniq) if lo <= s < hi]
    assert list(got) == want


def test_dictionary_save_load(tmp_path):
    d = Dictionary.build(["x", "y", ""])
    p = str(tmp_path / "d.mmdc")
    d.save(p)
    back = Dictionary.load(p)
    assert [back.lookup(t) for t in range(3)] == ["", "x", "y"]
    data = open(p, "rb").read()
    with open(p, "wb") as f:
        f.write(data[:len(data) // 2])
    with pytest.raises(DecodeError):
        Dictionary.load(p)


# --------------------------------------------------------------------------
# column files

ROWS = [("u%02d" % (i % 7), 1000 + i, i - 3, b"") for i in range(40)]


def _cgf(tmp_path, retained, codecs, rows=ROWS):
    p = str(tmp_path / "c.mmcg")
    manifest = write_column_file(p, MIXED, retained, codecs, rows)
    return p, manifest


def test_columns_roundtrip_plain(tmp_path):
    p, man = _cgf(tmp_path, ["url", "rank", "n"], {})
    r = ColumnFileReader(p)
    assert r.field_names() == ["url", "rank", "n"]
    assert r.read_column("url") == [t[0] for t in ROWS]
    assert r.read_column("rank") == [t[1] for t in ROWS]
    assert r.read_column("n") == [t[2] for t in ROWS]
    assert man["rows"] == len(ROWS)
    assert man["size_bytes"] == os.path.getsize(p)


def test_columns_delta_codec(tmp_path):
    p, man = _cgf(tmp_path, ["rank"], {"rank": "delta"})
    r = ColumnFileReader(p)
    assert r.codecs == {"rank": "delta"}
    assert r.read_column("rank") == [t[1] for t in ROWS]
    # sequential values delta down to about a byte each
    assert man["segment_bytes"]["rank"] < 8 * len(ROWS)


def test_columns_dict_codec_and_tokens(tmp_path):
    p, man = _cgf(tmp_path, ["url"], {"url": "dict"})
    r = ColumnFileReader(p)
    assert r.read_column("url") == [t[0] for t in ROWS]
    d = r.dictionary("url")
    toks = r.read_column("url", keep_tokens=True)
    assert toks == d.encode_column([t[0] for t in ROWS])
    assert man["dict_paths"]["url"] == p + ".url.dict"
    assert os.path.exists(man["dict_paths"]["url"])


def test_columns_reassemble_records(tmp_path):
    retained = ["url", "rank"]
    p, _ = _cgf(tmp_path, retained, {"url": "dict", "rank": "delta"})
    r = ColumnFileReader(p)
    cols = [r.read_column(f) for f in retained]
    assert list(zip(*cols)) == [(t[0], t[1]) for t in ROWS]


def test_columns_corruption_is_decodeerror(tmp_path):
    p, _ = _cgf(tmp_path, ["url", "rank"], {})
    data = open(p, "rb").read()
    rng = random.Random(7)
    for _ in range(30):
        off = rng.randrange(len(data))
        flipped = bytearray(data)
        flipped[off] ^= 0xFF
        with open(p, "wb") as f:
            f.write(bytes(flipped))
        with pytest.raises(DecodeError):
            ColumnFileReader(p).read_column("url")


# --------------------------------------------------------------------------
# btree

def _tree(tmp_path, rows, retained=("k", "s"), name="t.mmix"):
    p = str(tmp_path / name)
    meta = build_btree(p, KS, list(retained), "k", rows)
    return p, meta


def test_btree_small_meta(tmp_path):
    _, meta = _tree(tmp_path, [(1, "a"), (2, "b"), (3, "c")])
    assert meta["records"] == 3 and meta["leaves"] == 1
    assert meta["page_size"] == 4096 and meta["size_bytes"] == 8192
    assert meta["key_type"] == "i64" and meta["height"] == 1


def test_btree_requires_sorted_input(tmp_path):
    with pytest.raises(UnsortedInputError):
        _tree(tmp_path, [(2, "a"), (1, "b")])


def test_btree_range_scan_exact(tmp_path):
    rows = [(i, "s%d" % i) for i in range(1, 1001)]
    p, meta = _tree(tmp_path, rows)
    assert meta["height"] >= 2
    r = BTreeReader(p)
    got, stats = r.range_scan(KeyRangeSet([KeyRange(250, 750)]))
    assert got == rows[249:749]
    assert stats.records_yielded == 500
    assert 0 < stats.pages_touched < meta["pages"]
    assert stats.bytes_read == stats.pages_touched * meta["page_size"]


def test_btree_duplicates_all_returned(tmp_path):
    rows = [(1, "a"), (5, "x"), (5, "y"), (5, "z"), (9, "b")]
    p, _ = _tree(tmp_path, rows)
    got, _ = BTreeReader(p).range_scan(KeyRangeSet([KeyRange(5, 6)]))
    assert got == [(5, "x"), (5, "y"), (5, "z")]


def test_btree_empty_range(tmp_path):
    p, _ = _tree(tmp_path, [(i, "") for i in range(10)])
    got, stats = BTreeReader(p).range_scan(KeyRangeSet([]))
    assert got == [] and stats.records_yielded == 0


def test_btree_scan_all_matches_input(tmp_path):
    rows = [(i // 3, "r%d" % i) for i in range(500)]
    p, _ = _tree(tmp_path, rows)
    got, _ = BTreeReader(p).scan_all()
    assert got == rows


def test_btree_partition_property(tmp_path):
    rng = random.Random(11)
    rows = sorted(((rng.randrange(100), "x%d" % i) for i in range(400)),
                  key=lambda t: t[0])
    p, _ = _tree(tmp_path, rows)
    r = BTreeReader(p)
    for _ in range(25):
        cut = rng.randrange(-5, 105)
        lo, _ = r.range_scan(KeyRangeSet([KeyRange(None, cut)]))
        hi, _ = r.range_scan(KeyRangeSet([KeyRange(cut, None)]))
        assert lo + hi == rows
        both, _ = r.range_scan(
            KeyRangeSet([KeyRange(None, cut), KeyRange(cut, None)]))
        assert both == rows


def test_btree_oversized_records_grow_pages(tmp_path):
    rows = [(i, "x" * 6000) for i in range(5)]
    p, meta = _tree(tmp_path, rows)
    assert meta["page_size"] == 8192
    got, _ = BTreeReader(p).scan_all()
    assert got == rows


def test_btree_string_keys(tmp_path):
    rows = sorted((w, i) for i, w in
                  enumerate(["ant", "bee", "bee", "cat", "dog"]))
    p = str(tmp_path / "s.mmix")
    SK = parse_program(
        "schema U { w: str; n: i64; }"
        " job J on U { map(k, v) { emit(v.w, 1); } reduce(k, vals)"
        " { emit(k, 1); } }").schemas[0]
    build_btree(p, SK, ["w", "n"], "w", rows)
    got, _ = BTreeReader(p).range_scan(
        KeyRangeSet([KeyRange("bee", "bee\x00")]))
    assert [g[0] for g in got] == ["bee", "bee"]


# --------------------------------------------------------------------------
# catalog

def _entry(tmp_path, **over):
    rows = [(1, "a"), (2, "b"), (3, "c")]
    inp = str(tmp_path / "in.mmrf")
    write_record_file(inp, KS, rows)
    art = str(tmp_path / "t.mmix")
    meta = build_btree(art, KS, ["k", "s"], "k", rows)
    base = dict(schema_name="T", label="select", artifact="btree", path=art,
                input_path=inp, input_sha256=sha256_of(inp),
                retained_fields=["k", "s"], index_field="k", codecs={},
                size_bytes=meta["size_bytes"], rows=3, dict_paths={})
    base.update(over)
    return CatalogEntry(**base)


def test_catalog_append_load_roundtrip(tmp_path):
    cat = Catalog(str(tmp_path / "cat.jsonl"))
    e = _entry(tmp_path)
    cat.append(e)
    entries, bad = cat.load()
    assert bad == [] and len(entries) == 1
    assert entries[0] == e


def test_catalog_skips_malformed_lines(tmp_path):
    cat = Catalog(str(tmp_path / "cat.jsonl"))
    cat.append(_entry(tmp_path))
    with open(cat.path, "a") as f:
        f.write("not json at all\n")
        f.write('{"half": true}\n')
    entries, bad = cat.load()
    assert len(entries) == 1 and len(bad) == 2


def test_catalog_verify_detects_resized_artifact(tmp_path):
    cat = Catalog(str(tmp_path / "cat.jsonl"))
    e = _entry(tmp_path)
    cat.append(e)
    ok, _ = cat.verify(e)
    assert ok
    data = open(e.path, "rb").read()
    with open(e.path, "wb") as f:
        f.write(data[:-100])
    ok, reason = cat.verify(e)
    assert not ok and "size" in reason


def test_catalog_verify_detects_changed_input(tmp_path):
    cat = Catalog(str(tmp_path / "cat.jsonl"))
    e = _entry(tmp_path)
    write_record_file(e.input_path, KS, [(9, "zz")])
    ok, reason = cat.verify(e)
    assert not ok and "hash" in reason


def test_catalog_verify_missing_artifact(tmp_path):
    cat = Catalog(str(tmp_path / "cat.jsonl"))
    e = _entry(tmp_path)
    ok, reason = cat.verify(dataclasses.replace(e, path=e.path + ".gone"))
    assert not ok and "gone" in reason


def test_catalog_locked_append_raises(tmp_path, monkeypatch):
    monkeypatch.setattr(catalog_mod, "_LOCK_ATTEMPTS", 2)
    monkeypatch.setattr(catalog_mod, "_LOCK_WAIT_S", 0.01)
    cat = Catalog(str(tmp_path / "cat.jsonl"))
    e = _entry(tmp_path)
    cat.append(e)
    with open(cat.path, "a") as h:
        fcntl.flock(h.fileno(), fcntl.LOCK_EX)
        try:
            with pytest.raises(LockError):
                cat.append(e)
        finally:
            fcntl.flock(h.fileno(), fcntl.LOCK_UN)
