"""Builtin function registry.

Purity drives the analyses: a use-def DAG containing an impure builtin can
never be functional, and impure calls are banned inside log() arguments so
that skipping log statements cannot skip a state write.

Signatures use scalar type names plus two wildcards: "strblob" accepts str or
blob, "any" accepts any scalar. has_next/next are special-cased by the
typechecker because they take the reduce value stream.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Builtin:
    name: str
    params: tuple[str, ...]
    ret: str
    pure: bool
    equality_preserving: bool


_DEFS = [
    # string / blob helpers, all pure
    Builtin("len", ("strblob",), "i64", pure=True, equality_preserving=False),
    Builtin("substr", ("str", "i64", "i64"), "str", pure=True, equality_preserving=False),
    Builtin("contains", ("str", "str"), "bool", pure=True, equality_preserving=False),
    Builtin("starts_with", ("str", "str"), "bool", pure=True, equality_preserving=False),
    Builtin("to_lower", ("str",), "str", pure=True, equality_preserving=False),
    Builtin("parse_i64", ("str",), "i64", pure=True, equality_preserving=False),
    # per-task member table, impure
    Builtin("table_put", ("str", "i64"), "i64", pure=False, equality_preserving=False),
    Builtin("table_get", ("str",), "i64", pure=False, equality_preserving=False),
    Builtin("table_has", ("str",), "bool", pure=False, equality_preserving=False),
    # reduce stream access, impure (argument handled specially by typecheck)
    Builtin("has_next", ("stream",), "bool", pure=False, equality_preserving=False),
    Builtin("next", ("stream",), "any", pure=False, equality_preserving=False),
]

BUILTINS: dict[str, Builtin] = {b.name: b for b in _DEFS}


def is_pure(name: str) -> bool:
    b = BUILTINS.get(name)
    return b is not None and b.pure
