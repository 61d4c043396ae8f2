"""Disjunctive-normal-form predicates over input records.

A selection condition is stored as a DNF whose atoms are expression
fragments referencing only the map parameters, constants, and pure
builtins.  Atoms keep their annotated AST for evaluation plus a canonical
pretty-printed text that serves as identity and as the JSON wire form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from minimap.errors import ParseError, ValidationError
from minimap.lang.ast import (
    ARITH_OPS,
    BOOL_OPS,
    COMPARISON_OPS,
    Binary,
    BoolLit,
    Call,
    Expr,
    FieldAccess,
    IntLit,
    RecordType,
    Schema,
    StrLit,
    Unary,
    VarRef,
    is_int,
)
from minimap.lang.builtins import BUILTINS
from minimap.lang.parser import parse_expr
from minimap.lang.pretty import pretty_expr


@dataclass
class Atom:
    """One literal: an atomic boolean expression, possibly negated."""

    expr: Expr
    negated: bool
    text: str = ""

    def __post_init__(self):
        if not self.text:
            self.text = pretty_expr(self.expr)

    def key(self) -> tuple[str, bool]:
        return (self.text, self.negated)


@dataclass
class ConditionDNF:
    """kind is "always", "never", or "dnf" with at least one disjunct."""

    kind: str
    disjuncts: list[list[Atom]] = field(default_factory=list)

    @staticmethod
    def always() -> "ConditionDNF":
        return ConditionDNF("always")

    @staticmethod
    def never() -> "ConditionDNF":
        return ConditionDNF("never")

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "dnf":
            out["disjuncts"] = [
                [{"expr": a.text, "negated": a.negated} for a in conj]
                for conj in self.disjuncts
            ]
        return out

    @staticmethod
    def from_json(obj: dict, schema: Schema, key_param: str, val_param: str) -> "ConditionDNF":
        kind = obj.get("kind")
        if kind in ("always", "never"):
            return ConditionDNF(kind)
        if kind != "dnf":
            raise ValidationError(f"unknown dnf kind {kind!r}")
        # go through build_dnf so hand-written compound atoms expand the
        # same way analyzer output does
        paths = []
        for conj_obj in obj.get("disjuncts", []):
            literals = []
            for a in conj_obj:
                try:
                    expr = parse_expr(a["expr"])
                except ParseError as exc:
                    raise ValidationError(f"bad dnf atom {a['expr']!r}: {exc}") from exc
                ty = annotate_atom(expr, schema, key_param, val_param)
                if ty != "bool":
                    raise ValidationError(f"dnf atom {a['expr']!r} is not boolean")
                literals.append((expr, not bool(a["negated"])))
            paths.append(literals)
        return build_dnf(paths)


def build_dnf(paths: list[list[tuple[Expr, bool]]]) -> ConditionDNF:
    """Combine per-path condition literals into one normalized DNF.

    Each path is a conjunction of (resolved condition, polarity) pairs and
    the record is selected when any path's conjunction holds.  Compound
    conditions are expanded to atomic literals here.
    """
    disjuncts: list[list[Atom]] = []
    for literals in paths:
        conjs: list[list[Atom]] = [[]]
        for expr, polarity in literals:
            expanded = _expand(expr, polarity)
            conjs = [a + b for a in conjs for b in expanded]
        disjuncts.extend(conjs)
    return _normalize(disjuncts)


def _expand(e: Expr, positive: bool) -> list[list[Atom]]:
    """DNF of e (or of !e when positive is False), as lists of atoms."""
    if isinstance(e, BoolLit):
        return [[]] if e.value == positive else []
    if isinstance(e, Unary) and e.op == "!":
        return _expand(e.operand, not positive)
    if isinstance(e, Binary) and e.op in BOOL_OPS:
        # De Morgan: a negated && is an ||, and vice versa
        left = _expand(e.left, positive)
        right = _expand(e.right, positive)
        if (e.op == "&&") == positive:
            return [a + b for a in left for b in right]
        return left + right
    return [[Atom(expr=e, negated=not positive)]]


def _normalize(disjuncts: list[list[Atom]]) -> ConditionDNF:
    out: list[list[Atom]] = []
    seen_conjs: set[tuple] = set()
    for conj in disjuncts:
        atoms: list[Atom] = []
        keys: set[tuple[str, bool]] = set()
        contradiction = False
        for a in conj:
            k = a.key()
            if (k[0], not k[1]) in keys:
                contradiction = True
                break
            if k not in keys:
                keys.add(k)
                atoms.append(a)
        if contradiction:
            continue
        if not atoms:
            return ConditionDNF.always()
        ck = tuple(sorted(keys))
        if ck not in seen_conjs:
            seen_conjs.add(ck)
            out.append(atoms)
    if not out:
        return ConditionDNF.never()
    return ConditionDNF("dnf", out)


def eval_dnf(dnf: ConditionDNF, key_param: str, val_param: str, record: tuple) -> bool:
    """Evaluate against one input record; atoms must be annotated."""
    if dnf.kind == "always":
        return True
    if dnf.kind == "never":
        return False
    # imported here: the engine package reaches back into this one
    from minimap.engine.context import TaskContext
    from minimap.engine.interp import eval_expr

    ctx = TaskContext(members={}, table={}, logs=[])
    env = {key_param: record[0], val_param: record}
    for conj in dnf.disjuncts:
        ok = True
        for atom in conj:
            val = bool(eval_expr(atom.expr, env, ctx, 0))
            if val == atom.negated:
                ok = False
                break
        if ok:
            return True
    return False


def annotate_atom(expr: Expr, schema: Schema, key_param: str, val_param: str) -> str | RecordType:
    """Type-annotate a deserialized atom in the restricted atom language.

    Atoms may touch the map parameters, constants, and pure builtins only.
    Raises ValidationError on anything else (members, locals, impure calls).
    Returns the expression type and fills .ty/.binding/.field_index in place.
    """
    ty = _annot(expr, schema, key_param, val_param)
    expr.ty = ty
    return ty


def _annot(e: Expr, schema: Schema, kp: str, vp: str):
    if isinstance(e, IntLit):
        e.ty = "i64"
        return "i64"
    if isinstance(e, StrLit):
        e.ty = "str"
        return "str"
    if isinstance(e, BoolLit):
        e.ty = "bool"
        return "bool"
    if isinstance(e, VarRef):
        if e.name == kp:
            e.binding = "param_key"
            e.ty = schema.key_type
            return e.ty
        if e.name == vp:
            e.binding = "param_val"
            e.ty = RecordType(schema)
            return e.ty
        raise ValidationError(f"atom references unknown name {e.name!r}")
    if isinstance(e, FieldAccess):
        bt = _annot(e.base, schema, kp, vp)
        if not isinstance(bt, RecordType):
            raise ValidationError("field access on non-record in atom")
        if not bt.schema.has_field(e.name):
            raise ValidationError(f"unknown field {e.name!r} in atom")
        e.field_index = bt.schema.index_of(e.name)
        e.ty = bt.schema.type_of(e.name)
        return e.ty
    if isinstance(e, Unary):
        ot = _annot(e.operand, schema, kp, vp)
        if e.op == "!":
            if ot != "bool":
                raise ValidationError("! needs a boolean operand")
            e.ty = "bool"
        else:
            if not is_int(ot):
                raise ValidationError("unary - needs an integer operand")
            e.ty = ot
        return e.ty
    if isinstance(e, Binary):
        lt = _annot(e.left, schema, kp, vp)
        rt = _annot(e.right, schema, kp, vp)
        if e.op in BOOL_OPS:
            if lt != "bool" or rt != "bool":
                raise ValidationError(f"{e.op} needs boolean operands")
            e.ty = "bool"
        elif e.op in COMPARISON_OPS:
            if is_int(lt) and is_int(rt):
                pass
            elif lt == "str" and rt == "str":
                pass
            elif lt == "bool" and rt == "bool" and e.op in ("==", "!="):
                pass
            else:
                raise ValidationError(f"cannot compare {lt} {e.op} {rt}")
            e.ty = "bool"
        elif e.op in ARITH_OPS:
            if not (is_int(lt) and is_int(rt)):
                raise ValidationError(f"arithmetic {e.op} needs integers")
            e.ty = "i64" if "i64" in (lt, rt) else "i32"
        else:
            raise ValidationError(f"unknown operator {e.op}")
        return e.ty
    if isinstance(e, Call):
        b = BUILTINS.get(e.name)
        if b is None:
            raise ValidationError(f"unknown builtin {e.name!r} in atom")
        if not b.pure:
            raise ValidationError(f"impure builtin {e.name!r} not allowed in atom")
        if len(e.args) != len(b.params):
            raise ValidationError(f"{e.name} expects {len(b.params)} args")
        for arg, want in zip(e.args, b.params):
            at = _annot(arg, schema, kp, vp)
            if want == "strblob":
                if at not in ("str", "blob"):
                    raise ValidationError(f"{e.name} arg must be str or blob")
            elif want == "i64":
                if not is_int(at):
                    raise ValidationError(f"{e.name} arg must be an integer")
            elif want == "str":
                if at != "str":
                    raise ValidationError(f"{e.name} arg must be str")
            else:
                raise ValidationError(f"builtin {e.name} not usable in atoms")
        e.ty = b.ret
        return e.ty
    raise ValidationError("unsupported expression form in atom")
