"""Use-def DAG closure for a statement, plus the predicates built on it.

The DAG of a statement covers the statement's own expressions and, following
variable uses through reaching definitions, the expressions of every defining
statement that can feed it. Leaves classify as parameter, member, constant or
builtin. A DAG is functional (is_func) when no member leaf appears and every
builtin call in it is pure: its value is then determined by the input record
alone.

fields_in reports which schema fields the DAG can read. Field accesses count
their field; a record value used anywhere except as a field-access base or as
the whole right-hand side of an alias (let/assign of the bare variable) is a
whole-record use and counts every field, because the record escapes as a unit
(emit of the full record, for instance).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from minimap.analysis.reaching import ReachingDefs
from minimap.lang.ast import (
    AssignStmt,
    Binary,
    BoolLit,
    Call,
    Expr,
    FieldAccess,
    IntLit,
    LetStmt,
    RecordType,
    Stmt,
    StrLit,
    Unary,
    VarRef,
    stmt_exprs,
)
from minimap.lang.builtins import BUILTINS


@dataclass
class UseDefDAG:
    root_sid: int
    stmt_nodes: set[int] = field(default_factory=set)  # defining stmts included
    param_leaves: set[str] = field(default_factory=set)
    member_leaves: set[str] = field(default_factory=set)
    const_leaves: int = 0
    builtin_calls: set[str] = field(default_factory=set)
    fields: set[str] = field(default_factory=set)
    whole_record: bool = False


def is_func(dag: UseDefDAG) -> bool:
    """True iff every leaf is a parameter or constant and every builtin is pure."""
    if dag.member_leaves:
        return False
    return all(BUILTINS[name].pure for name in dag.builtin_calls)


def fields_in(dag: UseDefDAG, all_fields: list[str]) -> set[str]:
    if dag.whole_record:
        return set(all_fields)
    return set(dag.fields)


def get_use_def(stmts: dict[int, Stmt], reaching: ReachingDefs, sid: int,
                key_field: str) -> UseDefDAG:
    """Build the use-def closure rooted at statement sid.

    The key parameter reads the key field, so a param_key leaf contributes
    key_field to the DAG's field set.
    """
    dag = UseDefDAG(root_sid=sid)
    seen_stmts: set[int] = set()

    def visit_stmt(cur: int) -> None:
        if cur in seen_stmts:
            return
        seen_stmts.add(cur)
        if cur != sid:
            dag.stmt_nodes.add(cur)
        s = stmts[cur]
        for e in stmt_exprs(s):
            alias_root = e if isinstance(s, (LetStmt, AssignStmt)) else None
            visit_expr(e, cur, alias_root)

    def visit_expr(e: Expr, owner_sid: int, alias_root: Expr | None) -> None:
        if isinstance(e, (IntLit, StrLit, BoolLit)):
            dag.const_leaves += 1
            return
        if isinstance(e, FieldAccess):
            dag.fields.add(e.name)
            visit_var_use(e.base, owner_sid, under_field_access=True)
            return
        if isinstance(e, VarRef):
            whole = isinstance(e.ty, RecordType) and e is not alias_root
            visit_var_use(e, owner_sid, under_field_access=False, whole_record=whole)
            return
        if isinstance(e, Unary):
            visit_expr(e.operand, owner_sid, None)
            return
        if isinstance(e, Binary):
            visit_expr(e.left, owner_sid, None)
            visit_expr(e.right, owner_sid, None)
            return
        if isinstance(e, Call):
            dag.builtin_calls.add(e.name)
            for a in e.args:
                visit_expr(a, owner_sid, None)
            return
        raise TypeError(f"unknown expression {e!r}")

    def visit_var_use(e: Expr, owner_sid: int, under_field_access: bool,
                      whole_record: bool = False) -> None:
        if not isinstance(e, VarRef):
            # field access chained off a non-variable (e.g. next(vals).f in a
            # reduce body); recurse normally
            visit_expr(e, owner_sid, None)
            return
        if whole_record:
            dag.whole_record = True
        if e.binding == "param_key":
            dag.param_leaves.add(e.name)
            dag.fields.add(key_field)
            return
        if e.binding == "param_val":
            dag.param_leaves.add(e.name)
            return
        if e.binding in ("member", "local"):
            for site in reaching.before(owner_sid).get(e.name, ()):
                if isinstance(site, int):
                    visit_stmt(site)
                elif site.startswith("member:"):
                    dag.member_leaves.add(e.name)
                elif site.startswith("param:"):
                    dag.param_leaves.add(e.name)
            return
        dag.param_leaves.add(e.name)

    visit_stmt(sid)
    return dag


def dump_usedef(stmts: dict[int, Stmt], reaching: ReachingDefs, sid: int,
                key_field: str, describe) -> str:
    """Indented textual dump for the --dump-usedef flag."""
    lines: list[str] = []
    seen: set[int] = set()

    def emit_line(depth: int, text: str) -> None:
        lines.append("  " * depth + text)

    def walk(cur: int, depth: int) -> None:
        emit_line(depth, f"s{cur}: {describe(stmts[cur])}")
        if cur in seen:
            emit_line(depth + 1, "(shown above)")
            return
        seen.add(cur)
        before = reaching.before(cur)
        used_vars: list[VarRef] = []

        def collect(e: Expr) -> None:
            if isinstance(e, VarRef):
                used_vars.append(e)
            elif isinstance(e, FieldAccess):
                collect(e.base)
            elif isinstance(e, Unary):
                collect(e.operand)
            elif isinstance(e, Binary):
                collect(e.left)
                collect(e.right)
            elif isinstance(e, Call):
                for a in e.args:
                    collect(a)

        for e in stmt_exprs(stmts[cur]):
            collect(e)
        for v in used_vars:
            if v.binding == "param_key":
                emit_line(depth + 1, f"{v.name} <- parameter (key field {key_field!r})")
            elif v.binding == "param_val":
                emit_line(depth + 1, f"{v.name} <- parameter (value record)")
            elif v.binding == "param_vals":
                emit_line(depth + 1, f"{v.name} <- parameter (value stream)")
            else:
                for site in sorted(before.get(v.name, ()), key=str):
                    if isinstance(site, int):
                        emit_line(depth + 1, f"{v.name} <- s{site}")
                        walk(site, depth + 2)
                    elif site.startswith("member:"):
                        emit_line(depth + 1, f"{v.name} <- member initial value")
                    else:
                        emit_line(depth + 1, f"{v.name} <- parameter")
    walk(sid, 0)
    return "\n".join(lines)
