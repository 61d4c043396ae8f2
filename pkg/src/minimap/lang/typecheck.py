"""Typechecker. Annotates the AST in place and derives emit signature types.

Internal type lattice: the four storable scalars plus "bool" (conditions),
record<Schema> (the value parameter and aliases of it) and stream<T> (the
reduce value stream). Width notes: integer literals are i64 and i32 widens to
i64 wherever the two meet; arithmetic is unbounded at runtime, declared widths
bind at encode time.

Deliberate restrictions, each one load-bearing for the analyses:
  - single namespace, no shadowing or redeclaration, params not assignable;
  - blob admits only len(), emit-value position and pass-through assignment;
  - the value stream may appear only as the argument of has_next()/next();
  - impure builtins may not appear inside log() arguments;
  - record values appear only as field-access base, alias RHS or emit value.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional

from minimap.errors import TypeCheckError
from minimap.lang.ast import (
    ARITH_OPS,
    AssignStmt,
    Binary,
    BoolLit,
    BOOL_OPS,
    Call,
    COMPARISON_OPS,
    EmitStmt,
    Expr,
    ExprStmt,
    FieldAccess,
    IfStmt,
    IntLit,
    LetStmt,
    LogStmt,
    Program,
    RecordType,
    Schema,
    Stmt,
    StreamType,
    StrLit,
    Type,
    Unary,
    VarRef,
    WhileStmt,
    is_int,
)
from minimap.lang.builtins import BUILTINS


@dataclass
class TypedJob:
    """A typechecked program plus the derived emit signatures."""

    program: Program
    schema: Schema
    schemas: dict[str, Schema]
    member_types: dict[str, str]
    map_out_key: Optional[Type]
    map_out_val: Optional[Type]
    reduce_out_key: Optional[Type]
    reduce_out_val: Optional[Type]
    map_emits: list[EmitStmt] = dc_field(default_factory=list)

    @property
    def job(self):
        return self.program.job


def _fail(msg: str, node) -> None:
    pos = getattr(node, "pos", (0, 0))
    raise TypeCheckError(f"{pos[0]}:{pos[1]}: {msg}")


def _unify_int(a: Type, b: Type) -> Optional[Type]:
    if is_int(a) and is_int(b):
        return "i64" if "i64" in (a, b) else "i32"
    return None


def _unify_emit(a: Optional[Type], b: Type, what: str, node) -> Type:
    if a is None:
        return b
    w = _unify_int(a, b)
    if w is not None:
        return w
    if a == b:
        return a
    _fail(f"emit {what} type mismatch: {a} vs {b}", node)
    raise AssertionError


class _Checker:
    def __init__(self, program: Program):
        self.program = program
        self.schemas = {s.name: s for s in program.schemas}
        self.schema = self.schemas[program.job.schema_name]
        self.job = program.job
        self.members: dict[str, str] = {}
        self.params: dict[str, Type] = {}
        self.scopes: list[dict[str, Type]] = []
        self.vals_param: Optional[str] = None
        self.in_log = 0
        self.emit_key: Optional[Type] = None
        self.emit_val: Optional[Type] = None
        self.emits: list[EmitStmt] = []

    # -- name handling -------------------------------------------------------

    def _declare_member(self, name: str, ty: str, init, node) -> None:
        if name in self.members:
            _fail(f"duplicate member {name!r}", node)
        if ty in ("i32", "i64") and not isinstance(init, int):
            _fail(f"member {name!r} needs an integer initializer", node)
        if ty == "str" and not isinstance(init, str):
            _fail(f"member {name!r} needs a string initializer", node)
        self.members[name] = ty

    def _visible(self, name: str) -> bool:
        if name in self.params or name in self.members:
            return True
        return any(name in s for s in self.scopes)

    def _lookup(self, node: VarRef) -> Type:
        name = node.name
        for s in reversed(self.scopes):
            if name in s:
                node.binding = "local"
                return s[name]
        if name in self.params:
            node.binding = self.params_binding[name]
            return self.params[name]
        if name in self.members:
            node.binding = "member"
            return self.members[name]
        _fail(f"unknown name {name!r}", node)
        raise AssertionError

    # -- body drivers ----------------------------------------------------------

    def check_map(self) -> None:
        j = self.job
        if j.map_key_param == j.map_val_param:
            _fail(f"map parameters share the name {j.map_key_param!r}", j.map_body[0] if j.map_body else j)
        for m in j.members:
            self._declare_member(m.name, m.ty, m.init, m)
        if j.map_key_param in self.members or j.map_val_param in self.members:
            raise TypeCheckError("map parameter shadows a member")
        self.params = {
            j.map_key_param: self.schema.key_type,
            j.map_val_param: RecordType(self.schema.name),
        }
        self.params_binding = {j.map_key_param: "param_key", j.map_val_param: "param_val"}
        self.vals_param = None
        self.scopes = [{}]
        for s in j.map_body:
            self.stmt(s)

    def check_reduce(self, key_ty: Type, elem_ty: Type) -> tuple[Optional[Type], Optional[Type]]:
        j = self.job
        if j.reduce_key_param == j.reduce_vals_param:
            raise TypeCheckError(f"reduce parameters share the name {j.reduce_key_param!r}")
        if j.reduce_key_param in self.members or j.reduce_vals_param in self.members:
            raise TypeCheckError("reduce parameter shadows a member")
        self.params = {
            j.reduce_key_param: key_ty,
            j.reduce_vals_param: StreamType(elem_ty),
        }
        self.params_binding = {j.reduce_key_param: "param_key", j.reduce_vals_param: "param_vals"}
        self.vals_param = j.reduce_vals_param
        self.scopes = [{}]
        self.emit_key = None
        self.emit_val = None
        for s in j.reduce_body:
            self.stmt(s)
        return self.emit_key, self.emit_val

    # -- statements -----------------------------------------------------------

    def stmt(self, s: Stmt) -> None:
        if isinstance(s, LetStmt):
            if self._visible(s.name):
                _fail(f"{s.name!r} is already declared (no shadowing)", s)
            ty = self.expr(s.expr)
            if isinstance(ty, StreamType):
                _fail("the value stream cannot be bound to a name", s)
            self.scopes[-1][s.name] = ty
        elif isinstance(s, AssignStmt):
            target: Optional[Type] = None
            for sc in reversed(self.scopes):
                if s.name in sc:
                    target = sc[s.name]
                    break
            if target is None:
                if s.name in self.members:
                    target = self.members[s.name]
                elif s.name in self.params:
                    _fail(f"cannot assign to parameter {s.name!r}", s)
                else:
                    _fail(f"assignment to undeclared name {s.name!r}", s)
            ty = self.expr(s.expr)
            if not ((is_int(target) and is_int(ty)) or target == ty):
                _fail(f"cannot assign {ty} to {s.name!r} of type {target}", s)
        elif isinstance(s, IfStmt):
            if self.expr(s.cond) != "bool":
                _fail("if condition must be bool", s)
            self.scopes.append({})
            for b in s.then_body:
                self.stmt(b)
            self.scopes.pop()
            self.scopes.append({})
            for b in s.else_body:
                self.stmt(b)
            self.scopes.pop()
        elif isinstance(s, WhileStmt):
            if self.expr(s.cond) != "bool":
                _fail("while condition must be bool", s)
            self.scopes.append({})
            for b in s.body:
                self.stmt(b)
            self.scopes.pop()
        elif isinstance(s, EmitStmt):
            kt = self.expr(s.key)
            if kt not in ("i32", "i64", "str"):
                _fail(f"emit key must be i32, i64 or str, not {kt}", s)
            vt = self.expr(s.value)
            if vt == "bool" or isinstance(vt, StreamType):
                _fail(f"emit value cannot have type {vt}", s)
            self.emit_key = _unify_emit(self.emit_key, kt, "key", s)
            self.emit_val = _unify_emit(self.emit_val, vt, "value", s)
            self.emits.append(s)
        elif isinstance(s, LogStmt):
            self.in_log += 1
            ty = self.expr(s.expr)
            self.in_log -= 1
            if isinstance(ty, (RecordType, StreamType)):
                _fail(f"log cannot print a {ty}", s)
        elif isinstance(s, ExprStmt):
            self.expr(s.expr)
        else:
            raise TypeCheckError(f"unknown statement {s!r}")

    # -- expressions ------------------------------------------------------------

    def expr(self, e: Expr) -> Type:
        ty = self._expr(e)
        e.ty = ty
        return ty

    def _expr(self, e: Expr) -> Type:
        if isinstance(e, IntLit):
            return "i64"
        if isinstance(e, StrLit):
            return "str"
        if isinstance(e, BoolLit):
            return "bool"
        if isinstance(e, VarRef):
            ty = self._lookup(e)
            if isinstance(ty, StreamType):
                _fail("the value stream may only be passed to has_next()/next()", e)
            return ty
        if isinstance(e, FieldAccess):
            base_ty = self.expr(e.base)
            if not isinstance(base_ty, RecordType):
                _fail(f"field access on non-record type {base_ty}", e)
            schema = self.schemas[base_ty.schema]
            if not schema.has_field(e.name):
                _fail(f"schema {schema.name!r} has no field {e.name!r}", e)
            e.field_index = schema.index_of(e.name)
            return schema.type_of(e.name)
        if isinstance(e, Unary):
            ty = self.expr(e.operand)
            if e.op == "!":
                if ty != "bool":
                    _fail("'!' needs a bool operand", e)
                return "bool"
            if not is_int(ty):
                _fail("unary '-' needs an integer operand", e)
            return ty
        if isinstance(e, Binary):
            if e.op in BOOL_OPS:
                if self.expr(e.left) != "bool" or self.expr(e.right) != "bool":
                    _fail(f"'{e.op}' needs bool operands", e)
                return "bool"
            lt = self.expr(e.left)
            rt = self.expr(e.right)
            if e.op in COMPARISON_OPS:
                if _unify_int(lt, rt) is not None:
                    return "bool"
                if lt == rt == "str":
                    return "bool"
                _fail(f"cannot compare {lt} with {rt}", e)
            if e.op == "+" and lt == rt == "str":
                return "str"
            if e.op in ARITH_OPS:
                w = _unify_int(lt, rt)
                if w is None:
                    _fail(f"'{e.op}' needs integer operands, got {lt} and {rt}", e)
                return w
            _fail(f"unknown operator {e.op!r}", e)
        if isinstance(e, Call):
            return self.call(e)
        raise TypeCheckError(f"unknown expression {e!r}")

    def call(self, e: Call) -> Type:
        b = BUILTINS.get(e.name)
        if b is None:
            _fail(f"unknown builtin {e.name!r}", e)
        if not b.pure and self.in_log:
            _fail(f"impure builtin {e.name!r} not allowed inside log()", e)
        if e.name in ("has_next", "next"):
            if len(e.args) != 1 or not isinstance(e.args[0], VarRef) or e.args[0].name != self.vals_param:
                _fail(f"{e.name}() takes exactly the reduce value stream", e)
            # do not recurse through self.expr: this is the one place a bare
            # stream reference is sanctioned
            arg = e.args[0]
            arg.binding = "param_vals"
            elem = self.params[self.vals_param].elem  # type: ignore[union-attr]
            arg.ty = self.params[self.vals_param]
            return "bool" if e.name == "has_next" else elem
        if len(e.args) != len(b.params):
            _fail(f"{e.name}() takes {len(b.params)} argument(s), got {len(e.args)}", e)
        for arg, want in zip(e.args, b.params):
            got = self.expr(arg)
            if want == "strblob":
                if got not in ("str", "blob"):
                    _fail(f"{e.name}() needs str or blob, got {got}", e)
            elif want == "i64":
                if not is_int(got):
                    _fail(f"{e.name}() needs an integer, got {got}", e)
            elif got != want:
                _fail(f"{e.name}() needs {want}, got {got}", e)
        return b.ret


def typecheck(program: Program) -> TypedJob:
    """Check the program, annotate it in place, and derive emit signatures."""
    c = _Checker(program)
    c.check_map()
    map_out_key, map_out_val = c.emit_key, c.emit_val
    map_emits = list(c.emits)
    if map_out_key is None:
        # map never emits: reduce can never run, skip checking it against
        # placeholder types and mark the output signature as degenerate
        reduce_out = (None, None)
    else:
        reduce_out = c.check_reduce(map_out_key, map_out_val)
    return TypedJob(
        program=program,
        schema=c.schema,
        schemas=c.schemas,
        member_types=dict(c.members),
        map_out_key=map_out_key,
        map_out_val=map_out_val,
        reduce_out_key=reduce_out[0],
        reduce_out_val=reduce_out[1],
        map_emits=map_emits,
    )
