"""MiniMap job language: AST, parser, typechecker, pretty-printer, builtins."""

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
    MemberDecl,
    Program,
    Schema,
    Stmt,
    StrLit,
    Unary,
    VarRef,
    WhileStmt,
    walk_exprs,
    walk_stmts,
)
from minimap.lang.builtins import BUILTINS, Builtin
from minimap.lang.parser import parse_expr, parse_program
from minimap.lang.pretty import pretty_expr, pretty_program
from minimap.lang.typecheck import TypedJob, typecheck

__all__ = [
    "AssignStmt", "Binary", "BoolLit", "Call", "EmitStmt", "Expr",
    "ExprStmt", "FieldAccess", "IfStmt", "IntLit", "JobSpec", "LetStmt",
    "LogStmt", "MemberDecl", "Program", "Schema", "Stmt", "StrLit", "Unary",
    "VarRef", "WhileStmt", "walk_exprs", "walk_stmts",
    "BUILTINS", "Builtin", "parse_expr", "parse_program",
    "pretty_expr", "pretty_program", "TypedJob", "typecheck",
]
