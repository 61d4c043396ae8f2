"""Token rewrite: run a job directly on dictionary codes.

Direct operation replaces each rewritten string field's type with i64 and
maps every string literal it is compared against to that field's token
(or -1, which no real token equals, when the literal is not in the
dictionary). Equality and inequality are the only comparisons the detector
admits, so the mapping preserves every condition's value. When map emit
keys carry tokens, the reduce key does too; literals compared against it go
through the same dictionary and the runner translates output keys back.

The rewritten program is re-typechecked from scratch. A failure there means
the plan engaged direct operation on a job the detector would not have
cleared, and surfaces as RewriteError rather than silently wrong output.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Optional

from minimap.errors import RewriteError, TypeCheckError
from minimap.lang.ast import (
    Binary,
    Call,
    Expr,
    FieldAccess,
    IntLit,
    Program,
    StrLit,
    Unary,
    VarRef,
    is_int,
    stmt_exprs,
    walk_stmts,
)
from minimap.lang.typecheck import TypedJob, typecheck
from minimap.storage.dictionary import Dictionary


@dataclass
class RewriteResult:
    typed: TypedJob
    # set when reduce keys carry tokens of this field; the runner uses its
    # dictionary to restore output keys and to partition like the raw run
    key_field: Optional[str]


def _is_field_use(e: Expr, f: str, schema) -> bool:
    if (isinstance(e, FieldAccess) and e.name == f
            and isinstance(e.base, VarRef) and e.base.binding == "param_val"):
        return True
    return (f == schema.key_field and isinstance(e, VarRef)
            and e.binding == "param_key")


def rewrite_for_directop(typed: TypedJob, fields: list[str],
                         dictionaries: dict[str, Dictionary]) -> RewriteResult:
    job = typed.job
    schema = typed.schema
    if job.sorted_output:
        raise RewriteError("token rewrite is not defined for sorted output")
    for f in fields:
        if f not in dictionaries:
            raise RewriteError(f"no dictionary loaded for rewritten field {f!r}")
        if schema.type_of(f) != "str":
            raise RewriteError(f"rewritten field {f!r} is not a string field")

    key_field = _emit_key_field(typed, fields)

    prog: Program = copy.deepcopy(typed.program)
    for s in prog.schemas:
        if s.name == schema.name:
            s.fields = [(n, "i64" if n in fields else t) for n, t in s.fields]

    def map_literal(e: Binary, field_of) -> None:
        if e.op not in ("==", "!="):
            return
        for side, other in ((e.left, "right"), (e.right, "left")):
            f = field_of(side)
            o = getattr(e, other)
            if f is not None and isinstance(o, StrLit):
                setattr(e, other, IntLit(dictionaries[f].token(o.value), pos=o.pos))
                return

    def fix(e: Expr, field_of) -> None:
        if isinstance(e, Binary):
            fix(e.left, field_of)
            fix(e.right, field_of)
            map_literal(e, field_of)
        elif isinstance(e, Unary):
            fix(e.operand, field_of)
        elif isinstance(e, Call):
            for a in e.args:
                fix(a, field_of)
        # field-access bases are plain variable references, nothing below

    def map_field_of(e: Expr) -> Optional[str]:
        for f in fields:
            if _is_field_use(e, f, schema):
                return f
        return None

    def reduce_field_of(e: Expr) -> Optional[str]:
        if (key_field is not None and isinstance(e, VarRef)
                and e.name == job.reduce_key_param):
            return key_field
        return None

    pj = prog.job
    for stmt in walk_stmts(pj.map_body):
        for root in stmt_exprs(stmt):
            fix(root, map_field_of)
    for stmt in walk_stmts(pj.reduce_body):
        for root in stmt_exprs(stmt):
            fix(root, reduce_field_of)

    try:
        new_typed = typecheck(prog)
    except TypeCheckError as exc:
        raise RewriteError(f"rewritten job fails to typecheck: {exc}") from exc

    if key_field is not None:
        if not (new_typed.map_out_key is not None and is_int(new_typed.map_out_key)):
            raise RewriteError("rewritten emit keys are not integer tokens")
        if typed.reduce_out_key != "str":
            raise RewriteError("token keys without a string output key to restore")
    return RewriteResult(typed=new_typed, key_field=key_field)


def _emit_key_field(typed: TypedJob, fields: list[str]) -> Optional[str]:
    """The rewritten field every map emit keys, when the key type is str."""
    if typed.map_out_key != "str" or not typed.map_emits:
        return None
    schema = typed.schema
    for f in fields:
        if all(_is_field_use(e.key, f, schema) for e in typed.map_emits):
            return f
    return None
