"""Emit-path enumeration with branch polarities and condition substitution.

A path is a block walk entry -> emit block. Every conditional edge traversed
contributes its branch condition with the polarity taken (False edges are
later negated when conditions become predicate literals). Conditions are also
rewritten by substituting, for every variable use, the unique definition that
reaches it ALONG THIS PATH, so the substituted form mentions only parameters,
members and constants and can be evaluated against a raw record.

Loops poison this reasoning: a condition inside or after a loop can be
re-evaluated under changing state, so if any loop back edge lies on a walk
from entry to the emit (equivalently: some back-edge header reaches the emit
block), enumeration raises CyclicPathError and callers bail conservatively.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

from minimap.analysis.cfg import CFG
from minimap.errors import CyclicPathError
from minimap.lang.ast import (
    AssignStmt,
    Binary,
    Call,
    EmitStmt,
    Expr,
    FieldAccess,
    LetStmt,
    LogStmt,
    Unary,
    VarRef,
)


@dataclass
class PathCond:
    sid: int           # the if/while statement owning the condition
    raw: Expr          # condition as written (for use-def functional checks)
    resolved: Expr     # condition with along-path definitions substituted in
    polarity: bool     # branch taken


def _subst(e: Expr, env: dict[str, Expr]) -> Expr:
    if isinstance(e, VarRef):
        repl = env.get(e.name)
        return copy.deepcopy(repl) if repl is not None else copy.deepcopy(e)
    if isinstance(e, FieldAccess):
        out = copy.copy(e)
        out.base = _subst(e.base, env)
        return out
    if isinstance(e, Unary):
        out = copy.copy(e)
        out.operand = _subst(e.operand, env)
        return out
    if isinstance(e, Binary):
        out = copy.copy(e)
        out.left = _subst(e.left, env)
        out.right = _subst(e.right, env)
        return out
    if isinstance(e, Call):
        out = copy.copy(e)
        out.args = [_subst(a, env) for a in e.args]
        return out
    return copy.deepcopy(e)


def _reaches_target(cfg: CFG, target: int) -> set[int]:
    """Blocks with a walk to the target, the target included."""
    seen = {target}
    work = [target]
    while work:
        b = work.pop()
        for p, _ in cfg.pred[b]:
            if p not in seen:
                seen.add(p)
                work.append(p)
    return seen


def _loop_headers_reaching(cfg: CFG, reach: set[int]) -> bool:
    return any(header in reach for _, header in cfg.back_edges)


def enumerate_emit_paths(cfg: CFG, emit_sid: int) -> list[list[PathCond]]:
    """All entry->emit simple paths as condition lists, deterministic order.

    Raises CyclicPathError when a loop can lie on the way to the emit.
    """
    target = cfg.block_of[emit_sid]
    reach = _reaches_target(cfg, target)
    if _loop_headers_reaching(cfg, reach):
        raise CyclicPathError(
            f"emit statement {emit_sid} is reachable through a loop back edge"
        )

    paths: list[list[PathCond]] = []

    def run_block(bid: int, env: dict[str, Expr], upto: int | None) -> dict[str, Expr]:
        env = dict(env)
        for sid in cfg.blocks[bid]:
            if upto is not None and sid == upto:
                break
            s = cfg.stmts[sid]
            if isinstance(s, (LetStmt, AssignStmt)):
                env[s.name] = _subst(s.expr, env)
        return env

    def dfs(bid: int, env: dict[str, Expr], conds: list[PathCond]) -> None:
        if bid == target:
            paths.append(conds)
            return
        env = run_block(bid, env, None)
        for dst, label in cfg.succ[bid]:
            # blocks that cannot reach the emit are never on a simple path
            # to it; skipping them also keeps loops elsewhere out of the walk
            if dst not in reach:
                continue
            if label is None:
                dfs(dst, env, conds)
            else:
                sid, polarity = label
                cond_stmt = cfg.stmts[sid]
                raw = cond_stmt.cond  # type: ignore[union-attr]
                pc = PathCond(sid=sid, raw=raw, resolved=_subst(raw, env), polarity=polarity)
                dfs(dst, env, conds + [pc])

    dfs(cfg.entry, {}, [])
    return paths


def emit_path_stmts(cfg: CFG, emit_sid: int) -> set[int]:
    """Statement ids on any entry->emit path, the emit itself included and
    statements after it in its own block excluded.

    Raises CyclicPathError like enumerate_emit_paths.
    """
    target = cfg.block_of[emit_sid]
    seen = _reaches_target(cfg, target)
    if _loop_headers_reaching(cfg, seen):
        raise CyclicPathError(
            f"emit statement {emit_sid} is reachable through a loop back edge"
        )
    out: set[int] = set()
    for bid in seen:
        if bid == target:
            for sid in cfg.blocks[bid]:
                out.add(sid)
                if sid == emit_sid:
                    break
        else:
            out.update(cfg.blocks[bid])
    return out


def logs_on_emit_paths(cfg: CFG) -> bool:
    """True when a log statement sits on some entry->emit path (blocks that
    can both be reached from entry and reach an emit). Loops do not matter
    here: reachability is enough."""
    emit_blocks = {cfg.block_of[s.sid] for s in cfg.stmts.values() if isinstance(s, EmitStmt)}
    if not emit_blocks:
        return False
    seen = set(emit_blocks)
    work = list(emit_blocks)
    while work:
        b = work.pop()
        for p, _ in cfg.pred[b]:
            if p not in seen:
                seen.add(p)
                work.append(p)
    for bid in seen:
        if any(isinstance(cfg.stmts[sid], LogStmt) for sid in cfg.blocks[bid]):
            return True
    return False
