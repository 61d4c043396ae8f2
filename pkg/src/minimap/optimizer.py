"""Range extraction and the rule-based execution planner.

plan() is a pure function of (analysis document, catalog entries, input
identity, flags). It never touches the filesystem, so every planning
decision is reproducible and unit-testable: the CLI resolves the catalog
and hashes the input, then hands everything in.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from minimap.detect.descriptors import AnalysisDocument, InputId
from minimap.detect.dnf import ConditionDNF
from minimap.errors import NotSargableError, StaleIndexError
from minimap.lang.ast import Binary, Expr, FieldAccess, IntLit, Schema, StrLit, Unary, VarRef, is_int

Key = Union[int, str]

# mirror of each comparison under operand swap and under negation
_SWAP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}
_NEG = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}


@dataclass(frozen=True)
class KeyRange:
    """Half-open interval [lo, hi); None is unbounded on that side."""

    lo: Optional[Key]
    hi: Optional[Key]

    def is_empty(self) -> bool:
        return self.lo is not None and self.hi is not None and self.lo >= self.hi

    def contains(self, v: Key) -> bool:
        if self.lo is not None and v < self.lo:
            return False
        if self.hi is not None and v >= self.hi:
            return False
        return True

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi}


@dataclass
class KeyRangeSet:
    """Disjoint ranges in ascending order."""

    ranges: list[KeyRange]

    def __post_init__(self):
        self.ranges = _normalize(self.ranges)

    def contains(self, v: Key) -> bool:
        return any(r.contains(v) for r in self.ranges)

    def is_empty(self) -> bool:
        return not self.ranges

    def to_json(self) -> list:
        return [r.to_json() for r in self.ranges]

    @staticmethod
    def from_json(obj: list) -> "KeyRangeSet":
        return KeyRangeSet([KeyRange(r.get("lo"), r.get("hi")) for r in obj])


def _normalize(ranges: list[KeyRange]) -> list[KeyRange]:
    live = [r for r in ranges if not r.is_empty()]
    if not live:
        return []
    # None sorts as minus infinity on lo
    live.sort(key=lambda r: (r.lo is not None, r.lo if r.lo is not None else 0))
    out = [live[0]]
    for r in live[1:]:
        last = out[-1]
        if last.hi is None or (r.lo is not None and r.lo > last.hi):
            out.append(r)
            continue
        # overlap or adjacency: extend
        if last.hi is not None and (r.hi is None or r.hi > last.hi):
            out[-1] = KeyRange(last.lo, r.hi)
    return out


def _succ(v: Key) -> Key:
    """Smallest value strictly greater than v in the key order."""
    if isinstance(v, int):
        return v + 1
    return v + "\x00"


def _const_value(e: Expr) -> Optional[Key]:
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, StrLit):
        return e.value
    if isinstance(e, Unary) and e.op == "-":
        inner = _const_value(e.operand)
        if isinstance(inner, int):
            return -inner
    return None


def _is_field_ref(e: Expr, fname: str, schema: Schema) -> bool:
    if (isinstance(e, FieldAccess) and e.name == fname
            and isinstance(e.base, VarRef) and e.base.binding == "param_val"):
        return True
    return (fname == schema.key_field and isinstance(e, VarRef)
            and e.binding == "param_key")


def _atom_interval(atom, fname: str, schema: Schema) -> Optional[KeyRange]:
    """Interval an atom imposes on the field, or None when unconstraining."""
    e = atom.expr
    if not isinstance(e, Binary) or e.op not in _SWAP:
        return None
    if _is_field_ref(e.left, fname, schema):
        op, const = e.op, _const_value(e.right)
    elif _is_field_ref(e.right, fname, schema):
        op, const = _SWAP[e.op], _const_value(e.left)
    else:
        return None
    if const is None:
        return None
    want_int = is_int(schema.type_of(fname))
    if want_int != isinstance(const, int):
        return None
    if atom.negated:
        op = _NEG[op]
    if op == "<":
        return KeyRange(None, const)
    if op == "<=":
        return KeyRange(None, _succ(const))
    if op == ">":
        return KeyRange(_succ(const), None)
    if op == ">=":
        return KeyRange(const, None)
    if op == "==":
        return KeyRange(const, _succ(const))
    return None  # != admits everything but one point; widen


def _intersect(a: KeyRange, b: KeyRange) -> KeyRange:
    lo = a.lo if b.lo is None else (b.lo if a.lo is None else max(a.lo, b.lo))
    hi = a.hi if b.hi is None else (b.hi if a.hi is None else min(a.hi, b.hi))
    return KeyRange(lo, hi)


def dnf_to_ranges(dnf: ConditionDNF, fname: str, schema: Schema) -> KeyRangeSet:
    """Key ranges on one field that cover every record the DNF accepts.

    Each disjunct must constrain the field through at least one sargable
    atom (a comparison other than != against a constant), otherwise that
    disjunct admits arbitrary field values and NotSargableError is raised.
    Atoms over other fields are ignored: the scan may over-approximate, the
    map body re-establishes the exact predicate.
    """
    if schema.type_of(fname) == "blob":
        raise NotSargableError(f"field {fname!r} is a blob")
    if dnf.kind == "never":
        return KeyRangeSet([])
    if dnf.kind == "always":
        raise NotSargableError(f"unconditional emit puts no bound on {fname!r}")
    out: list[KeyRange] = []
    for conj in dnf.disjuncts:
        acc: Optional[KeyRange] = None
        for atom in conj:
            iv = _atom_interval(atom, fname, schema)
            if iv is not None:
                acc = iv if acc is None else _intersect(acc, iv)
        if acc is None:
            raise NotSargableError(
                f"a disjunct leaves {fname!r} unconstrained")
        out.append(acc)
    return KeyRangeSet(out)


# --------------------------------------------------------------------------
# planning

@dataclass
class ExecutionDescriptor:
    """Everything the engine needs to know about reading this job's input."""

    source: str                      # "raw" | "btree" | "cgf"
    path: str                        # file the engine will open
    input: InputId                   # identity of the raw input
    active: list[str] = field(default_factory=list)
    index_field: Optional[str] = None
    ranges: Optional[KeyRangeSet] = None
    retained_fields: list[str] = field(default_factory=list)
    zeroed_fields: list[str] = field(default_factory=list)
    codecs: dict[str, str] = field(default_factory=dict)
    rewrite_fields: list[str] = field(default_factory=list)
    unlocked_by: list[str] = field(default_factory=list)
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "source": self.source,
            "path": self.path,
            "input": self.input.to_json(),
            "active": list(self.active),
            "index_field": self.index_field,
            "ranges": self.ranges.to_json() if self.ranges is not None else None,
            "retained_fields": list(self.retained_fields),
            "zeroed_fields": list(self.zeroed_fields),
            "codecs": dict(sorted(self.codecs.items())),
            "rewrite_fields": list(self.rewrite_fields),
            "unlocked_by": list(self.unlocked_by),
            "reason": self.reason,
        }


def plan(doc: AnalysisDocument, entries: list, input_id: InputId, schema: Schema,
         no_opt: bool = False, drop_select: bool = False,
         allow_rewrite: bool = True) -> ExecutionDescriptor:
    """Choose the best catalog artifact for this job and input.

    entries are catalog records (storage.catalog.CatalogEntry) already
    filtered to this schema. Freshness is judged by input sha256; artifacts
    recorded against the same path but a different hash are stale, and if
    a stale artifact was the only compatible choice planning fails with
    StaleIndexError rather than silently reading the raw file.
    """
    all_fields = [f for f, _ in schema.fields]
    select = doc.get("select") if not drop_select else None
    project = doc.get("project")
    delta = doc.get("delta")
    direct = doc.get("direct_op")
    needed = [f for f in all_fields
              if not (project and f in project.dropped_fields)]

    raw = ExecutionDescriptor(
        source="raw", path=input_id.path, input=input_id,
        retained_fields=list(all_fields))
    if no_opt:
        raw.reason = "optimizations disabled"
        return raw
    if not doc.descriptors:
        raw.reason = "no optimization opportunities detected"
        return raw

    candidates = []
    stale = []
    for e in entries:
        if e.input_path != input_id.path:
            continue
        if e.input_sha256 != input_id.sha256:
            stale.append(e)
            continue
        cand = _score(e, schema, select, project, delta, direct,
                      needed, all_fields, allow_rewrite)
        if cand is not None:
            candidates.append(cand)

    if not candidates:
        if stale:
            names = ", ".join(sorted(e.path for e in stale))
            raise StaleIndexError(
                f"input {input_id.path} changed since generation of: {names}")
        raw.unlocked_by = _unlocked(doc, set())
        raw.reason = "no compatible artifact in catalog"
        return raw

    # selection beats everything (it skips whole records; delta and friends
    # only shrink what is still read), then most activated optimizations,
    # then smallest file, then path for determinism
    candidates.sort(key=lambda c: (
        "select" not in c[0], -len(c[0]), c[1].size_bytes, c[1].path))
    active, entry, extras = candidates[0]
    desc = ExecutionDescriptor(
        source=entry.artifact, path=entry.path, input=input_id,
        active=sorted(active),
        retained_fields=list(entry.retained_fields),
        zeroed_fields=[f for f in all_fields if f not in entry.retained_fields],
        codecs=dict(entry.codecs),
        unlocked_by=_unlocked(doc, active),
        reason=f"catalog artifact {entry.label!r} activates: "
               + (", ".join(sorted(active)) if active else "nothing"),
    )
    desc.index_field = extras.get("index_field")
    desc.ranges = extras.get("ranges")
    desc.rewrite_fields = extras.get("rewrite_fields", [])
    return desc


def _score(entry, schema, select, project, delta, direct, needed, all_fields,
           allow_rewrite):
    """(activated kinds, entry, extras) when usable, else None."""
    if not set(needed) <= set(entry.retained_fields):
        return None
    active: set[str] = set()
    extras: dict = {}
    if entry.artifact == "btree":
        # a tree is ordered by its index field; without an active selection
        # it offers nothing over the raw file and reordering is unsafe for
        # jobs whose members care about input order, so require selection
        if select is None or entry.index_field not in select.candidate_fields:
            return None
        try:
            ranges = dnf_to_ranges(select.dnf, entry.index_field, schema)
        except NotSargableError:
            return None
        active.add("select")
        extras["index_field"] = entry.index_field
        extras["ranges"] = ranges
    else:
        if entry.index_field is not None:
            return None
    if project and any(f not in entry.retained_fields for f in project.dropped_fields):
        active.add("project")
    if delta and any(entry.codecs.get(f) == "delta" for f in delta.fields):
        active.add("delta")
    if (direct and allow_rewrite
            and all(entry.codecs.get(f) == "dict" for f in direct.fields)):
        active.add("direct_op")
        extras["rewrite_fields"] = list(direct.fields)
    return (active, entry, extras)


def _unlocked(doc: AnalysisDocument, active: set) -> list[str]:
    """Spec labels worth generating because they would activate more."""
    missing = {d.kind for d in doc.descriptors} - set(active)
    if not missing:
        return []
    out = []
    for spec in doc.index_specs:
        if spec.label == "combined" or spec.label in missing:
            out.append(spec.label)
    return out
