"""Shared helpers for the test suite.

Two families live here: small composition helpers that turn a map body into
a full typed job, and the seeded random generators behind the differential
tests (random filter bodies checked against the interpreter, and full random
jobs whose optimized runs must reproduce the raw run byte for byte).
"""

from __future__ import annotations

import itertools
import os
import random

from minimap.analysis.context import AnalysisContext
from minimap.detect.descriptors import InputId
from minimap.detect.detectors import analyze
from minimap.engine import run_index_gen
from minimap.lang.ast import Schema
from minimap.lang.parser import parse_program
from minimap.lang.typecheck import typecheck
from minimap.optimizer import plan
from minimap.storage.catalog import Catalog, sha256_of
from minimap.storage.records import encode_record, read_record_file, write_record_file

WEB_SCHEMA = "schema WebPages { url: str; rank: i64; content: str; }"

PASSTHROUGH_REDUCE = "while (has_next(vals)) { emit(k, next(vals)); }"
SUM_REDUCE = "let t = 0; while (has_next(vals)) { t = t + next(vals); } emit(k, t);"


def make_job(map_body: str, reduce_body: str = PASSTHROUGH_REDUCE,
             members: str = "", schema: str = WEB_SCHEMA,
             schema_name: str = "WebPages", name: str = "J",
             sorted_out: bool = False) -> str:
    mem = f"members {{ {members} }}\n" if members else ""
    tail = " sorted" if sorted_out else ""
    return f"""{schema}
job {name} on {schema_name}{tail} {{
    {mem}map(k, v) {{
        {map_body}
    }}
    reduce(k, vals) {{
        {reduce_body}
    }}
}}
"""


def typed_of(src: str):
    return typecheck(parse_program(src))


def ctx_of(src: str) -> AnalysisContext:
    return AnalysisContext(typed_of(src))


def input_id_of(path: str) -> InputId:
    return InputId(path, sha256_of(path))


def canon(path: str):
    """Schema shape plus the sorted encoded records of an output file."""
    schema, rows = read_record_file(path)
    types = [ty for _, ty in schema.fields]
    return types, sorted(encode_record(r, schema) for r in rows)


def build_artifacts(doc, input_path: str, workdir: str):
    """Materialize every index spec of the document; return catalog entries."""
    cat = Catalog(os.path.join(workdir, "catalog.jsonl"))
    for spec in doc.index_specs:
        run_index_gen(spec, input_path, catalog=cat, out_dir=workdir)
    entries, bad = cat.load()
    assert not bad, f"catalog grew malformed lines: {bad}"
    return entries


def analyze_and_plan(typed, input_path: str, workdir: str, **flags):
    iid = input_id_of(input_path)
    doc = analyze(typed, iid)
    entries = build_artifacts(doc, input_path, workdir)
    desc = plan(doc, entries, iid, typed.schema, **flags)
    return doc, entries, desc


# --------------------------------------------------------------------------
# random filter jobs: acyclic pure map bodies over a fixed schema, used to
# compare the extracted selection DNF against interpreter ground truth

FILTER_SCHEMA = "schema Pages { url: str; rank: i64; score: i32; content: str; }"

_ALPHA = "abcd"


def rand_str(rng: random.Random, lo: int = 0, hi: int = 6) -> str:
    return "".join(rng.choice(_ALPHA) for _ in range(rng.randint(lo, hi)))


def random_filter_source(rng: random.Random) -> str:
    int_locals: list[str] = []
    lets: list[str] = []
    for i in range(rng.randint(0, 2)):
        name = f"t{i}"
        base = rng.choice(["v.rank", "v.score"])
        lets.append(f"let {name} = {base} {rng.choice(['+', '-', '*'])} {rng.randint(-3, 9)};")
        int_locals.append(name)

    def int_ref() -> str:
        return rng.choice(["v.rank", "v.score", "len(v.content)"] + int_locals)

    def atom() -> str:
        r = rng.random()
        if r < 0.55:
            op = rng.choice(["<", "<=", ">", ">=", "==", "!="])
            return f"{int_ref()} {op} {rng.randint(-4, 12)}"
        if r < 0.75:
            return f'v.url {rng.choice(["==", "!="])} "{rand_str(rng, 0, 2)}"'
        if r < 0.85:
            return f'k {rng.choice(["==", "!="])} "{rand_str(rng, 0, 2)}"'
        if r < 0.95:
            return f'contains(v.content, "{rand_str(rng, 1, 2)}")'
        return f'starts_with(v.url, "{rand_str(rng, 1, 2)}")'

    def cond(depth: int) -> str:
        r = rng.random()
        if depth <= 0 or r < 0.5:
            return atom()
        if r < 0.65:
            return f"!({cond(depth - 1)})"
        return f"({cond(depth - 1)} {rng.choice(['&&', '||'])} {cond(depth - 1)})"

    def block(depth: int, budget: int) -> str:
        stmts = []
        for _ in range(rng.randint(1, budget)):
            if depth > 0 and rng.random() < 0.55:
                s = f"if ({cond(2)}) {{ {block(depth - 1, 2)} }}"
                if rng.random() < 0.4:
                    s += f" else {{ {block(depth - 1, 1)} }}"
                stmts.append(s)
            else:
                stmts.append(f"emit(v.url, {int_ref()});")
        return " ".join(stmts)

    body = " ".join(lets) + " " + block(2, 3)
    if "emit" not in body:
        body += " emit(v.url, v.rank);"
    return (FILTER_SCHEMA + f"""
job F on Pages {{
    map(k, v) {{ {body} }}
    reduce(k, vals) {{ {PASSTHROUGH_REDUCE} }}
}}
""")


def random_filter_record(rng: random.Random) -> tuple:
    return (rand_str(rng, 0, 2), rng.randint(-4, 12), rng.randint(-4, 12),
            rand_str(rng, 0, 4))


# --------------------------------------------------------------------------
# random full jobs plus matching datasets, used for the differential
# raw-vs-optimized byte identity tests

def random_job_and_dataset(rng: random.Random, max_rows: int = 500):
    """One seeded (source, schema, rows) triple covering the whole language."""
    key_ty = rng.choice(["str", "i64", "i32"])
    fields: list[tuple[str, str]] = [("kf", key_ty)]
    tys = [rng.choice(["i64", "i32", "str", "str", "i64"])
           for _ in range(rng.randint(2, 4))]
    if rng.random() < 0.25:
        tys[-1] = "blob"
    fields += [(f"f{i}", ty) for i, ty in enumerate(tys)]
    schema = Schema(name="S", fields=list(fields))
    schema_src = "schema S { " + " ".join(f"{n}: {t};" for n, t in fields) + " }"

    int_fields = [n for n, t in fields if t in ("i32", "i64")]
    str_fields = [n for n, t in fields if t == "str"]
    blob_fields = [n for n, t in fields if t == "blob"]

    use_members = rng.random() < 0.15
    names = itertools.count()

    def fresh() -> str:
        return f"x{next(names)}"

    def int_expr(env_ints: list[str], depth: int) -> str:
        atoms = [f"v.{f}" for f in int_fields] + [str(rng.randint(-20, 20))]
        atoms += env_ints
        atoms += [f"len(v.{f})" for f in str_fields]
        if depth <= 0 or rng.random() < 0.45:
            return rng.choice(atoms)
        op = rng.choice(["+", "-", "*", "/", "%"])
        left = int_expr(env_ints, depth - 1)
        # divide and mod only by nonzero literals
        right = str(rng.choice([2, 3, 5, 7])) if op in ("/", "%") else int_expr(env_ints, depth - 1)
        return f"({left} {op} {right})"

    def str_expr(env_strs: list[str]) -> str:
        atoms = [f"v.{f}" for f in str_fields] + [f'"{rand_str(rng, 0, 4)}"'] + env_strs
        e = rng.choice(atoms)
        return f"to_lower({e})" if rng.random() < 0.25 else e

    def bool_expr(env_ints: list[str], env_strs: list[str], depth: int) -> str:
        r = rng.random()
        if depth > 0 and r < 0.2:
            return f"!({bool_expr(env_ints, env_strs, depth - 1)})"
        if depth > 0 and r < 0.4:
            op = rng.choice(["&&", "||"])
            return (f"({bool_expr(env_ints, env_strs, depth - 1)} {op} "
                    f"{bool_expr(env_ints, env_strs, depth - 1)})")
        if str_fields and rng.random() < 0.35:
            op = rng.choice(["==", "!=", "<"])
            return f"{str_expr(env_strs)} {op} {str_expr(env_strs)}"
        op = rng.choice(["<", "<=", ">", ">=", "==", "!="])
        return f"{int_expr(env_ints, 1)} {op} {int_expr(env_ints, 1)}"

    emit_kinds = []
    if int_fields:
        emit_kinds.append("int")
    if str_fields:
        emit_kinds.append("str")
    emit_key_kind = rng.choice(emit_kinds)
    val_kinds = ["record"] + (["int"] * 3 if int_fields else []) \
        + (["str"] * 2 if str_fields else []) + (["blob"] if blob_fields else [])
    val_kind = rng.choice(val_kinds)

    def key_expr(env_ints, env_strs) -> str:
        if emit_key_kind == "int":
            if key_ty != "str" and rng.random() < 0.3:
                return "k"
            return int_expr(env_ints, rng.randint(0, 2))
        if key_ty == "str" and rng.random() < 0.3:
            return "k"
        return str_expr(env_strs)

    def val_expr(env_ints, env_strs) -> str:
        if val_kind == "record":
            return "v"
        if val_kind == "blob":
            return f"v.{rng.choice(blob_fields)}"
        if val_kind == "int":
            return int_expr(env_ints, rng.randint(0, 2))
        return str_expr(env_strs)

    def stmt(env_ints, env_strs, member_ints, depth) -> str:
        r = rng.random()
        if r < 0.22:
            n = fresh()
            if str_fields and rng.random() < 0.35:
                env_strs.append(n)
                return f"let {n} = {str_expr(env_strs[:-1])};"
            env_ints.append(n)
            return f"let {n} = {int_expr(env_ints[:-1] + member_ints, 2)};"
        if r < 0.32 and (env_ints or member_ints):
            tgt = rng.choice(env_ints + member_ints)
            return f"{tgt} = {int_expr(env_ints + member_ints, 1)};"
        if r < 0.42 and depth > 0:
            body = block(list(env_ints), list(env_strs), member_ints, depth - 1, 2)
            s = f"if ({bool_expr(env_ints + member_ints, env_strs, 2)}) {{ {body} }}"
            if rng.random() < 0.4:
                s += f" else {{ {block(list(env_ints), list(env_strs), member_ints, depth - 1, 1)} }}"
            return s
        if r < 0.50 and depth > 0:
            i = fresh()
            bound = rng.randint(1, 3)
            # the counter is readable but never an assignment target inside
            inner = block(list(env_ints) + [i], list(env_strs), [], depth - 1, 1)
            return (f"let {i} = 0; while ({i} < {bound}) {{ "
                    f"{inner} {i} = {i} + 1; }}")
        if r < 0.56:
            arg = (int_expr(env_ints + member_ints, 1)
                   if rng.random() < 0.6 or not str_fields else str_expr(env_strs))
            return f"log({arg});"
        return f"emit({key_expr(env_ints + member_ints, env_strs)}, {val_expr(env_ints + member_ints, env_strs)});"

    def block(env_ints, env_strs, member_ints, depth, budget) -> str:
        return " ".join(stmt(env_ints, env_strs, member_ints, depth)
                        for _ in range(rng.randint(1, budget)))

    member_ints = ["seen"] if use_members else []
    body = block([], [], member_ints, 2, 4)
    if "emit(" not in body:
        body += f" emit({key_expr(member_ints, [])}, {val_expr(member_ints, [])});"
    if use_members:
        body = "seen = seen + 1; " + body
    members_src = "members { seen: i64 = 0; }" if use_members else ""

    if val_kind == "int":
        reduce_body = rng.choice([
            SUM_REDUCE,
            "let m = -1000000; while (has_next(vals)) { let x = next(vals); "
            "if (x > m) { m = x; } } emit(k, m);",
            "let c = 0; while (has_next(vals)) { let x = next(vals); c = c + 1; } emit(k, c);",
        ])
    elif val_kind == "str":
        reduce_body = rng.choice([
            PASSTHROUGH_REDUCE,
            "let c = 0; while (has_next(vals)) { let x = next(vals); c = c + 1; } emit(k, c);",
        ])
    else:
        reduce_body = PASSTHROUGH_REDUCE

    sorted_kw = " sorted" if rng.random() < 0.15 else ""
    src = f"""{schema_src}
job R on S{sorted_kw} {{
    {members_src}
    map(k, v) {{ {body} }}
    reduce(k, vals) {{ {reduce_body} }}
}}
"""
    n = rng.randint(20, max_rows)
    rows = [random_row(rng, fields) for _ in range(n)]
    return src, schema, rows


def random_row(rng: random.Random, fields) -> tuple:
    out = []
    for _, ty in fields:
        if ty == "i64":
            out.append(rng.randint(-1000, 1000) if rng.random() < 0.9
                       else rng.randint(-2**40, 2**40))
        elif ty == "i32":
            out.append(rng.randint(-1000, 1000) if rng.random() < 0.9
                       else rng.randint(-2**31, 2**31 - 1))
        elif ty == "str":
            out.append(rand_str(rng, 0, 8))
        else:
            out.append(bytes(rng.getrandbits(8) for _ in range(rng.randint(0, 10))))
    return tuple(out)


def write_rows(path: str, schema: Schema, rows) -> None:
    write_record_file(path, schema, rows)
