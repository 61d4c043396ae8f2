"""Canonical pretty-printer. pretty_program(parse(src)) reparses to an equal AST."""

from __future__ import annotations

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
    JobSpec,
    LetStmt,
    LogStmt,
    Program,
    Schema,
    Stmt,
    StrLit,
    Unary,
    VarRef,
    WhileStmt,
)

# Higher binds tighter; mirrors the parser's precedence ladder.
_PREC = {
    "||": 1, "&&": 2,
    "<": 3, "<=": 3, ">": 3, ">=": 3, "==": 3, "!=": 3,
    "+": 4, "-": 4,
    "*": 5, "/": 5, "%": 5,
}
_UNARY_PREC = 6

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t"}


def _quote(s: str) -> str:
    return '"' + "".join(_ESCAPES.get(c, c) for c in s) + '"'


def pretty_expr(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, StrLit):
        return _quote(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, FieldAccess):
        return f"{pretty_expr(e.base, _UNARY_PREC + 1)}.{e.name}"
    if isinstance(e, Unary):
        body = f"{e.op}{pretty_expr(e.operand, _UNARY_PREC)}"
        return f"({body})" if parent_prec > _UNARY_PREC else body
    if isinstance(e, Binary):
        prec = _PREC[e.op]
        # comparisons do not chain, and -/÷ are left-associative: right side
        # of the same precedence needs parens
        left = pretty_expr(e.left, prec)
        right = pretty_expr(e.right, prec + 1)
        body = f"{left} {e.op} {right}"
        return f"({body})" if parent_prec > prec else body
    if isinstance(e, Call):
        return f"{e.name}({', '.join(pretty_expr(a) for a in e.args)})"
    raise TypeError(f"unknown expression {e!r}")


def _stmt_lines(s: Stmt, indent: int) -> list[str]:
    pad = "    " * indent
    if isinstance(s, LetStmt):
        return [f"{pad}let {s.name} = {pretty_expr(s.expr)};"]
    if isinstance(s, AssignStmt):
        return [f"{pad}{s.name} = {pretty_expr(s.expr)};"]
    if isinstance(s, EmitStmt):
        return [f"{pad}emit({pretty_expr(s.key)}, {pretty_expr(s.value)});"]
    if isinstance(s, LogStmt):
        return [f"{pad}log({pretty_expr(s.expr)});"]
    if isinstance(s, ExprStmt):
        return [f"{pad}{pretty_expr(s.expr)};"]
    if isinstance(s, WhileStmt):
        lines = [f"{pad}while ({pretty_expr(s.cond)}) {{"]
        for b in s.body:
            lines.extend(_stmt_lines(b, indent + 1))
        lines.append(f"{pad}}}")
        return lines
    if isinstance(s, IfStmt):
        lines = [f"{pad}if ({pretty_expr(s.cond)}) {{"]
        for b in s.then_body:
            lines.extend(_stmt_lines(b, indent + 1))
        if s.else_body:
            if len(s.else_body) == 1 and isinstance(s.else_body[0], IfStmt):
                chained = _stmt_lines(s.else_body[0], indent)
                chained[0] = f"{pad}}} else " + chained[0].lstrip()
                lines.extend(chained)
                return lines
            lines.append(f"{pad}}} else {{")
            for b in s.else_body:
                lines.extend(_stmt_lines(b, indent + 1))
        lines.append(f"{pad}}}")
        return lines
    raise TypeError(f"unknown statement {s!r}")


def _schema_lines(s: Schema) -> list[str]:
    lines = [f"schema {s.name} {{"]
    for name, ty in s.fields:
        lines.append(f"    {name}: {ty};")
    lines.append("}")
    return lines


def _job_lines(j: JobSpec) -> list[str]:
    head = f"job {j.name} on {j.schema_name}"
    if j.sorted_output:
        head += " sorted"
    lines = [head + " {"]
    if j.members:
        lines.append("    members {")
        for m in j.members:
            init = _quote(m.init) if isinstance(m.init, str) else str(m.init)
            lines.append(f"        {m.name}: {m.ty} = {init};")
        lines.append("    }")
    lines.append(f"    map({j.map_key_param}, {j.map_val_param}) {{")
    for s in j.map_body:
        lines.extend(_stmt_lines(s, 2))
    lines.append("    }")
    lines.append(f"    reduce({j.reduce_key_param}, {j.reduce_vals_param}) {{")
    for s in j.reduce_body:
        lines.extend(_stmt_lines(s, 2))
    lines.append("    }")
    lines.append("}")
    return lines


def pretty_program(p: Program) -> str:
    lines: list[str] = []
    for s in p.schemas:
        lines.extend(_schema_lines(s))
        lines.append("")
    lines.extend(_job_lines(p.job))
    return "\n".join(lines) + "\n"
