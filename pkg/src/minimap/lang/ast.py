"""AST for the MiniMap job language.

Shape of a source file: one or more `schema` declarations followed by exactly
one `job`. A schema is a flat field list whose FIRST field is the record key;
the key is visible both as the map key parameter and as a regular field of the
value parameter, and is stored exactly once on disk.

Statements carry unique ids (`sid`) assigned in source order by the parser;
the control-flow and dataflow passes key everything off those ids. Expression
nodes carry no ids but are annotated in place by the typechecker (`ty`,
binding kinds, field indexes). Source positions are excluded from equality so
a pretty-printed program reparses to an AST that compares equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

# --------------------------------------------------------------------------
# Types

SCALAR_TYPES = ("i32", "i64", "str", "blob")


@dataclass(frozen=True)
class RecordType:
    schema: str

    def __str__(self) -> str:
        return f"record<{self.schema}>"


@dataclass(frozen=True)
class StreamType:
    elem: "Type"

    def __str__(self) -> str:
        return f"stream<{self.elem}>"


# Scalar types and "bool" are plain strings; records and streams are tagged.
Type = Union[str, RecordType, StreamType]


def is_int(ty: Type) -> bool:
    return ty in ("i32", "i64")


# --------------------------------------------------------------------------
# Expressions

_POS = {"default": (0, 0), "compare": False, "repr": False}


@dataclass
class IntLit:
    value: int
    pos: tuple = field(**_POS)
    ty: Optional[Type] = field(default=None, compare=False, repr=False)


@dataclass
class StrLit:
    value: str
    pos: tuple = field(**_POS)
    ty: Optional[Type] = field(default=None, compare=False, repr=False)


@dataclass
class BoolLit:
    value: bool
    pos: tuple = field(**_POS)
    ty: Optional[Type] = field(default=None, compare=False, repr=False)


@dataclass
class VarRef:
    name: str
    pos: tuple = field(**_POS)
    ty: Optional[Type] = field(default=None, compare=False, repr=False)
    # one of "param_key", "param_val", "param_vals", "local", "member"
    binding: Optional[str] = field(default=None, compare=False, repr=False)


@dataclass
class FieldAccess:
    base: "Expr"
    name: str
    pos: tuple = field(**_POS)
    ty: Optional[Type] = field(default=None, compare=False, repr=False)
    field_index: Optional[int] = field(default=None, compare=False, repr=False)


@dataclass
class Unary:
    op: str  # "!" or "-"
    operand: "Expr"
    pos: tuple = field(**_POS)
    ty: Optional[Type] = field(default=None, compare=False, repr=False)


@dataclass
class Binary:
    op: str  # < <= > >= == != + - * / % && ||
    left: "Expr"
    right: "Expr"
    pos: tuple = field(**_POS)
    ty: Optional[Type] = field(default=None, compare=False, repr=False)


@dataclass
class Call:
    name: str
    args: list["Expr"]
    pos: tuple = field(**_POS)
    ty: Optional[Type] = field(default=None, compare=False, repr=False)


Expr = Union[IntLit, StrLit, BoolLit, VarRef, FieldAccess, Unary, Binary, Call]

COMPARISON_OPS = ("<", "<=", ">", ">=", "==", "!=")
ARITH_OPS = ("+", "-", "*", "/", "%")
BOOL_OPS = ("&&", "||")


# --------------------------------------------------------------------------
# Statements

@dataclass
class LetStmt:
    name: str
    expr: Expr
    sid: int = -1
    pos: tuple = field(**_POS)


@dataclass
class AssignStmt:
    name: str
    expr: Expr
    sid: int = -1
    pos: tuple = field(**_POS)


@dataclass
class IfStmt:
    cond: Expr
    then_body: list["Stmt"]
    else_body: list["Stmt"]
    sid: int = -1
    pos: tuple = field(**_POS)


@dataclass
class WhileStmt:
    cond: Expr
    body: list["Stmt"]
    sid: int = -1
    pos: tuple = field(**_POS)


@dataclass
class EmitStmt:
    key: Expr
    value: Expr
    sid: int = -1
    pos: tuple = field(**_POS)


@dataclass
class ExprStmt:
    expr: Expr
    sid: int = -1
    pos: tuple = field(**_POS)


@dataclass
class LogStmt:
    expr: Expr
    sid: int = -1
    pos: tuple = field(**_POS)


Stmt = Union[LetStmt, AssignStmt, IfStmt, WhileStmt, EmitStmt, ExprStmt, LogStmt]


# --------------------------------------------------------------------------
# Declarations

@dataclass
class Schema:
    """Record layout. fields[0] is the key field."""

    name: str
    fields: list[tuple[str, str]]  # (field name, scalar type) in storage order

    @property
    def key_field(self) -> str:
        return self.fields[0][0]

    @property
    def key_type(self) -> str:
        return self.fields[0][1]

    @property
    def value_fields(self) -> list[tuple[str, str]]:
        return self.fields[1:]

    def field_names(self) -> list[str]:
        return [n for n, _ in self.fields]

    def index_of(self, name: str) -> int:
        for i, (n, _) in enumerate(self.fields):
            if n == name:
                return i
        raise KeyError(name)

    def type_of(self, name: str) -> str:
        return self.fields[self.index_of(name)][1]

    def has_field(self, name: str) -> bool:
        return any(n == name for n, _ in self.fields)

    def is_blob_schema(self) -> bool:
        """True when every value field is a blob (opaque custom serialization)."""
        vf = self.value_fields
        return len(vf) > 0 and all(t == "blob" for _, t in vf)


@dataclass
class MemberDecl:
    name: str
    ty: str  # i32 | i64 | str
    init: Union[int, str]
    pos: tuple = field(**_POS)


@dataclass
class JobSpec:
    name: str
    schema_name: str
    sorted_output: bool
    members: list[MemberDecl]
    map_key_param: str
    map_val_param: str
    map_body: list[Stmt]
    reduce_key_param: str
    reduce_vals_param: str
    reduce_body: list[Stmt]


@dataclass
class Program:
    schemas: list[Schema]
    job: JobSpec

    @property
    def schema(self) -> Schema:
        for s in self.schemas:
            if s.name == self.job.schema_name:
                return s
        raise KeyError(self.job.schema_name)


# --------------------------------------------------------------------------
# Traversal helpers

def walk_stmts(body: list[Stmt]) -> Iterator[Stmt]:
    """Yield every statement in the body, nested ones included, source order."""
    for s in body:
        yield s
        if isinstance(s, IfStmt):
            yield from walk_stmts(s.then_body)
            yield from walk_stmts(s.else_body)
        elif isinstance(s, WhileStmt):
            yield from walk_stmts(s.body)


def stmt_exprs(s: Stmt) -> list[Expr]:
    """Expressions evaluated directly by a statement (not nested bodies)."""
    if isinstance(s, (LetStmt, AssignStmt)):
        return [s.expr]
    if isinstance(s, (IfStmt, WhileStmt)):
        return [s.cond]
    if isinstance(s, EmitStmt):
        return [s.key, s.value]
    if isinstance(s, (ExprStmt, LogStmt)):
        return [s.expr]
    raise TypeError(f"unknown statement {s!r}")


def walk_exprs(e: Expr) -> Iterator[Expr]:
    """Yield e and every subexpression, preorder."""
    yield e
    if isinstance(e, FieldAccess):
        yield from walk_exprs(e.base)
    elif isinstance(e, Unary):
        yield from walk_exprs(e.operand)
    elif isinstance(e, Binary):
        yield from walk_exprs(e.left)
        yield from walk_exprs(e.right)
    elif isinstance(e, Call):
        for a in e.args:
            yield from walk_exprs(a)


def assign_stmt_ids(bodies: list[list[Stmt]]) -> None:
    """Number every statement 1..n in source order across the given bodies."""
    counter = 0

    def visit(body: list[Stmt]) -> None:
        nonlocal counter
        for s in body:
            counter += 1
            s.sid = counter
            if isinstance(s, IfStmt):
                visit(s.then_body)
                visit(s.else_body)
            elif isinstance(s, WhileStmt):
                visit(s.body)

    for b in bodies:
        visit(b)
