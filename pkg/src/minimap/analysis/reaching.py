"""Reaching definitions over a CFG, forward fixpoint at block level.

A definition site is the sid of a let/assign statement, or a virtual site for
names defined before the body runs: "param:<name>" for the two map parameters
and "member:<name>" for job members. Virtual sites flow out of the entry
block. Queries are per statement: the set of sites per variable that reach the
program point just before the statement executes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from minimap.analysis.cfg import CFG
from minimap.lang.ast import AssignStmt, LetStmt, Stmt

DefSite = Union[int, str]  # sid | "param:x" | "member:x"


def _defines(s: Stmt) -> str | None:
    if isinstance(s, (LetStmt, AssignStmt)):
        return s.name
    return None


@dataclass
class ReachingDefs:
    cfg: CFG
    block_in: dict[int, frozenset[tuple[str, DefSite]]]
    def_rhs: dict[int, object]  # sid of a defining stmt -> its RHS expression

    def before(self, sid: int) -> dict[str, set[DefSite]]:
        """Definitions reaching the point just before statement sid."""
        bid = self.cfg.block_of[sid]
        live = set(self.block_in[bid])
        for cur in self.cfg.blocks[bid]:
            if cur == sid:
                break
            var = _defines(self.cfg.stmts[cur])
            if var is not None:
                live = {(v, d) for v, d in live if v != var}
                live.add((var, cur))
        out: dict[str, set[DefSite]] = {}
        for var, d in live:
            out.setdefault(var, set()).add(d)
        return out


def compute_reaching(cfg: CFG, params: list[str], members: list[str]) -> ReachingDefs:
    initial = frozenset(
        [(p, f"param:{p}") for p in params] + [(m, f"member:{m}") for m in members]
    )

    def transfer(bid: int, live: frozenset) -> frozenset:
        cur = set(live)
        for sid in cfg.blocks[bid]:
            var = _defines(cfg.stmts[sid])
            if var is not None:
                cur = {(v, d) for v, d in cur if v != var}
                cur.add((var, sid))
        return frozenset(cur)

    block_in: dict[int, frozenset] = {bid: frozenset() for bid in cfg.blocks}
    block_out: dict[int, frozenset] = {bid: frozenset() for bid in cfg.blocks}
    block_out[cfg.entry] = initial
    worklist = [bid for bid in cfg.blocks if bid != cfg.entry]
    while worklist:
        bid = worklist.pop(0)
        new_in = frozenset().union(*(block_out[p] for p, _ in cfg.pred[bid])) if cfg.pred[bid] else frozenset()
        new_out = transfer(bid, new_in)
        if new_in != block_in[bid] or new_out != block_out[bid]:
            block_in[bid] = new_in
            block_out[bid] = new_out
            for succ, _ in cfg.succ[bid]:
                if succ not in worklist:
                    worklist.append(succ)

    def_rhs = {
        sid: s.expr for sid, s in cfg.stmts.items() if isinstance(s, (LetStmt, AssignStmt))
    }
    return ReachingDefs(cfg=cfg, block_in=block_in, def_rhs=def_rhs)
