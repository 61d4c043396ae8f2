"""Reference interpreter for job bodies.

Deterministic by construction: map runs once per record against a TaskContext
whose members evolve across invocations within the task; reduce runs once per
key group. Semantics pinned here (and in docs/grammar.md):

  - integer arithmetic is unbounded; / and % truncate toward zero;
    division or modulo by zero raises JobError naming the statement;
  - records are tuples of field values in schema order; the key parameter is
    an alias of field 0;
  - len() counts characters for str and bytes for blob; substr clamps
    out-of-range indexes; parse_i64 reads an optional sign plus leading
    digits and yields 0 when nothing parses;
  - table_put returns the previous value (0 when absent);
  - while loops have a defensive iteration budget, exceeded means JobError.
"""

from __future__ import annotations

import re

from minimap.engine.context import TaskContext
from minimap.errors import JobError
from minimap.lang.ast import (
    AssignStmt,
    Binary,
    BoolLit,
    Call,
    EmitStmt,
    Expr,
    ExprStmt,
    FieldAccess,
    IfStmt,
    IntLit,
    LetStmt,
    LogStmt,
    Stmt,
    StrLit,
    Unary,
    VarRef,
    WhileStmt,
)
from minimap.lang.typecheck import TypedJob

_LOOP_BUDGET = 1_000_000
_PARSE_I64 = re.compile(r"^[+-]?\d+")


class _Stream:
    """Reduce value stream consumed through has_next()/next()."""

    __slots__ = ("_it", "_buf", "_has_buf")

    def __init__(self, values):
        self._it = iter(values)
        self._buf = None
        self._has_buf = False

    def has_next(self) -> bool:
        if self._has_buf:
            return True
        try:
            self._buf = next(self._it)
            self._has_buf = True
            return True
        except StopIteration:
            return False

    def next(self, sid: int):
        if not self.has_next():
            raise JobError("next() on exhausted value stream", sid)
        self._has_buf = False
        return self._buf


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _trunc_mod(a: int, b: int) -> int:
    return a - _trunc_div(a, b) * b


def _render(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def eval_expr(e: Expr, env: dict, ctx: TaskContext, sid: int):
    """Evaluate an expression. env maps parameter/local names to values."""
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, StrLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, VarRef):
        if e.binding == "member":
            return ctx.members[e.name]
        return env[e.name]
    if isinstance(e, FieldAccess):
        rec = eval_expr(e.base, env, ctx, sid)
        return rec[e.field_index]
    if isinstance(e, Unary):
        v = eval_expr(e.operand, env, ctx, sid)
        return (not v) if e.op == "!" else -v
    if isinstance(e, Binary):
        op = e.op
        if op == "&&":
            return bool(eval_expr(e.left, env, ctx, sid)) and bool(eval_expr(e.right, env, ctx, sid))
        if op == "||":
            return bool(eval_expr(e.left, env, ctx, sid)) or bool(eval_expr(e.right, env, ctx, sid))
        lv = eval_expr(e.left, env, ctx, sid)
        rv = eval_expr(e.right, env, ctx, sid)
        if op == "+":
            return lv + rv
        if op == "-":
            return lv - rv
        if op == "*":
            return lv * rv
        if op == "/":
            if rv == 0:
                raise JobError("division by zero", sid)
            return _trunc_div(lv, rv)
        if op == "%":
            if rv == 0:
                raise JobError("modulo by zero", sid)
            return _trunc_mod(lv, rv)
        if op == "==":
            return lv == rv
        if op == "!=":
            return lv != rv
        if op == "<":
            return lv < rv
        if op == "<=":
            return lv <= rv
        if op == ">":
            return lv > rv
        if op == ">=":
            return lv >= rv
        raise JobError(f"unknown operator {op!r}", sid)
    if isinstance(e, Call):
        return _call(e, env, ctx, sid)
    raise JobError(f"unknown expression {e!r}", sid)


def _call(e: Call, env: dict, ctx: TaskContext, sid: int):
    name = e.name
    if name == "has_next":
        return env[e.args[0].name].has_next()  # type: ignore[union-attr]
    if name == "next":
        return env[e.args[0].name].next(sid)  # type: ignore[union-attr]
    args = [eval_expr(a, env, ctx, sid) for a in e.args]
    if name == "len":
        return len(args[0])
    if name == "substr":
        s, start, length = args
        if start < 0:
            start = 0
        if length < 0:
            length = 0
        return s[start:start + length]
    if name == "contains":
        return args[1] in args[0]
    if name == "starts_with":
        return args[0].startswith(args[1])
    if name == "to_lower":
        return args[0].lower()
    if name == "parse_i64":
        m = _PARSE_I64.match(args[0].strip())
        return int(m.group(0)) if m else 0
    if name == "table_put":
        prev = ctx.table.get(args[0], 0)
        ctx.table[args[0]] = args[1]
        return prev
    if name == "table_get":
        return ctx.table.get(args[0], 0)
    if name == "table_has":
        return args[0] in ctx.table
    raise JobError(f"unknown builtin {name!r}", sid)


def _exec_body(body: list[Stmt], env: dict, ctx: TaskContext, out: list) -> None:
    for s in body:
        sid = s.sid
        if isinstance(s, LetStmt):
            env[s.name] = eval_expr(s.expr, env, ctx, sid)
        elif isinstance(s, AssignStmt):
            v = eval_expr(s.expr, env, ctx, sid)
            if s.name in ctx.members:
                ctx.members[s.name] = v
            else:
                env[s.name] = v
        elif isinstance(s, IfStmt):
            if eval_expr(s.cond, env, ctx, sid):
                _exec_body(s.then_body, env, ctx, out)
            else:
                _exec_body(s.else_body, env, ctx, out)
        elif isinstance(s, WhileStmt):
            budget = _LOOP_BUDGET
            while eval_expr(s.cond, env, ctx, sid):
                _exec_body(s.body, env, ctx, out)
                budget -= 1
                if budget <= 0:
                    raise JobError("loop iteration budget exceeded", sid)
        elif isinstance(s, EmitStmt):
            out.append((eval_expr(s.key, env, ctx, sid), eval_expr(s.value, env, ctx, sid)))
        elif isinstance(s, LogStmt):
            ctx.logs.append(_render(eval_expr(s.expr, env, ctx, sid)))
        elif isinstance(s, ExprStmt):
            eval_expr(s.expr, env, ctx, sid)
        else:
            raise JobError(f"unknown statement {s!r}", sid)


def interpret_map(typed: TypedJob, record: tuple, ctx: TaskContext) -> list[tuple]:
    """Run the map body over one record; returns emitted (key, value) pairs."""
    job = typed.job
    env = {job.map_key_param: record[0], job.map_val_param: record}
    out: list[tuple] = []
    _exec_body(job.map_body, env, ctx, out)
    return out


def interpret_reduce(typed: TypedJob, key, values, ctx: TaskContext) -> list[tuple]:
    """Run the reduce body over one key group; returns emitted pairs."""
    job = typed.job
    env = {job.reduce_key_param: key, job.reduce_vals_param: _Stream(values)}
    out: list[tuple] = []
    _exec_body(job.reduce_body, env, ctx, out)
    return out
