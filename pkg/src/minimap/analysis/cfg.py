"""Control-flow graph construction for statement bodies.

Nodes are basic blocks of statement ids. The entry and exit blocks are always
present and always empty. An if or while statement sits as the last statement
of its block and its condition labels the two outgoing edges with (sid, True)
and (sid, False); unconditional edges carry no label. While loops contribute a
back edge from the end of the body to the loop header.

After construction, empty pass-through blocks are removed and straight-line
runs are merged, so a body of `if (c) emit;` yields exactly four nodes:
entry, the condition block, the emit block, exit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from minimap.lang.ast import IfStmt, Stmt, WhileStmt, walk_stmts

# (source block, target block, label); label is None or (stmt id, polarity)
Edge = tuple[int, int, "tuple[int, bool] | None"]


@dataclass
class CFG:
    blocks: dict[int, list[int]]  # block id -> statement ids in order
    edges: list[Edge]
    entry: int
    exit: int
    stmts: dict[int, Stmt]  # statement id -> node, body order
    block_of: dict[int, int] = field(default_factory=dict)
    succ: dict[int, list[tuple[int, "tuple[int, bool] | None"]]] = field(default_factory=dict)
    pred: dict[int, list[tuple[int, "tuple[int, bool] | None"]]] = field(default_factory=dict)
    back_edges: set[tuple[int, int]] = field(default_factory=set)

    def finalize(self) -> "CFG":
        self.block_of = {sid: bid for bid, sids in self.blocks.items() for sid in sids}
        self.succ = {bid: [] for bid in self.blocks}
        self.pred = {bid: [] for bid in self.blocks}
        for src, dst, label in self.edges:
            self.succ[src].append((dst, label))
            self.pred[dst].append((src, label))
        self.back_edges = _find_back_edges(self)
        return self


class _Builder:
    def __init__(self, body: list[Stmt]):
        self.body = body
        self.blocks: dict[int, list[int]] = {}
        self.edges: list[Edge] = []
        self.next_bid = 0

    def new_block(self) -> int:
        bid = self.next_bid
        self.next_bid += 1
        self.blocks[bid] = []
        return bid

    def edge(self, src: int, dst: int, label=None) -> None:
        self.edges.append((src, dst, label))

    def build(self) -> CFG:
        entry = self.new_block()
        first = self.new_block()
        self.edge(entry, first)
        last = self.seq(self.body, first)
        exit_ = self.new_block()
        self.edge(last, exit_)
        cfg = CFG(
            blocks=self.blocks,
            edges=self.edges,
            entry=entry,
            exit=exit_,
            stmts={s.sid: s for s in walk_stmts(self.body)},
        )
        _simplify(cfg, entry, exit_)
        return cfg.finalize()

    def seq(self, stmts: list[Stmt], cur: int) -> int:
        """Lay out a statement list starting in block `cur`; return the block
        control falls out of."""
        for s in stmts:
            if isinstance(s, IfStmt):
                self.blocks[cur].append(s.sid)
                then_start = self.new_block()
                else_start = self.new_block()
                self.edge(cur, then_start, (s.sid, True))
                self.edge(cur, else_start, (s.sid, False))
                then_end = self.seq(s.then_body, then_start)
                else_end = self.seq(s.else_body, else_start)
                join = self.new_block()
                self.edge(then_end, join)
                self.edge(else_end, join)
                cur = join
            elif isinstance(s, WhileStmt):
                header = self.new_block()
                self.edge(cur, header)
                self.blocks[header].append(s.sid)
                body_start = self.new_block()
                after = self.new_block()
                self.edge(header, body_start, (s.sid, True))
                self.edge(header, after, (s.sid, False))
                body_end = self.seq(s.body, body_start)
                self.edge(body_end, header)  # the back edge
                cur = after
            else:
                self.blocks[cur].append(s.sid)
        return cur


def _simplify(cfg: CFG, entry: int, exit_: int) -> None:
    """Drop empty pass-through blocks, then merge straight-line runs."""
    changed = True
    while changed:
        changed = False
        out: dict[int, list[Edge]] = {b: [] for b in cfg.blocks}
        inc: dict[int, list[Edge]] = {b: [] for b in cfg.blocks}
        for e in cfg.edges:
            out[e[0]].append(e)
            inc[e[1]].append(e)
        for bid in list(cfg.blocks):
            if bid in (entry, exit_) or cfg.blocks[bid]:
                continue
            if len(out[bid]) != 1 or out[bid][0][2] is not None:
                continue
            dst = out[bid][0][1]
            if dst == bid:
                continue
            cfg.edges = [e for e in cfg.edges if e[0] != bid]
            cfg.edges = [(s, dst if d == bid else d, lab) for s, d, lab in cfg.edges]
            del cfg.blocks[bid]
            changed = True
            break
        if changed:
            continue
        # merge A -> B when that is A's only out-edge and B's only in-edge
        for s, d, lab in cfg.edges:
            if lab is not None or s == d or s == entry or d == exit_:
                continue
            if len(out[s]) == 1 and len(inc[d]) == 1:
                cfg.blocks[s].extend(cfg.blocks[d])
                cfg.edges = [e for e in cfg.edges if e != (s, d, lab)]
                cfg.edges = [(a, b, l) if a != d else (s, b, l) for a, b, l in cfg.edges]
                del cfg.blocks[d]
                changed = True
                break


def _find_back_edges(cfg: CFG) -> set[tuple[int, int]]:
    """DFS back edges; exact loop edges for this structured source language."""
    back: set[tuple[int, int]] = set()
    on_stack: set[int] = set()
    visited: set[int] = set()

    def dfs(b: int) -> None:
        visited.add(b)
        on_stack.add(b)
        for dst, _ in cfg.succ.get(b, ()):
            if dst in on_stack:
                back.add((b, dst))
            elif dst not in visited:
                dfs(dst)
        on_stack.discard(b)

    dfs(cfg.entry)
    return back


def build_cfg(body: list[Stmt]) -> CFG:
    return _Builder(body).build()


def cfg_to_dot(cfg: CFG, label_stmt=None) -> str:
    """Graphviz rendering for the --dump-cfg flag."""
    lines = ["digraph cfg {", "    node [shape=box, fontname=monospace];"]
    for bid in sorted(cfg.blocks):
        if bid == cfg.entry:
            text = "entry"
        elif bid == cfg.exit:
            text = "exit"
        else:
            rows = []
            for sid in cfg.blocks[bid]:
                desc = label_stmt(cfg.stmts[sid]) if label_stmt else type(cfg.stmts[sid]).__name__
                rows.append(f"s{sid}: {desc}")
            text = "\\l".join(rows) + "\\l" if rows else f"b{bid}"
        text = text.replace('"', '\\"')  # string literals in labels
        lines.append(f'    b{bid} [label="{text}"];')
    for src, dst, label in cfg.edges:
        attr = ""
        if label is not None:
            attr = f' [label="s{label[0]}={"T" if label[1] else "F"}"]'
        if (src, dst) in cfg.back_edges:
            attr = attr[:-1] + ', style=dashed]' if attr else ' [style=dashed]'
        lines.append(f"    b{src} -> b{dst}{attr};")
    lines.append("}")
    return "\n".join(lines)
