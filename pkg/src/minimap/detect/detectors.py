"""The four opportunity detectors and the `analyze` entry point.

Every detector is conservative: a descriptor is produced only when the
optimization it licenses provably cannot change the job's output files.
Loops, impure builtins and member state all push toward "no descriptor"
rather than toward a clever answer.
"""

from __future__ import annotations

from typing import Optional

from minimap.analysis.context import AnalysisContext
from minimap.detect.descriptors import (
    AnalysisDocument,
    DeltaDescriptor,
    Descriptor,
    DirectOpDescriptor,
    IndexGenSpec,
    InputId,
    ProjectDescriptor,
    SelectDescriptor,
)
from minimap.detect.dnf import ConditionDNF, build_dnf
from minimap.errors import CyclicPathError, NotSargableError
from minimap.lang.ast import (
    AssignStmt,
    Binary,
    Call,
    EmitStmt,
    Expr,
    FieldAccess,
    IfStmt,
    LogStmt,
    Stmt,
    StrLit,
    VarRef,
    WhileStmt,
    is_int,
    stmt_exprs,
    walk_stmts,
)
from minimap.lang.builtins import is_pure
from minimap.lang.typecheck import TypedJob


def find_select(ctx: AnalysisContext) -> Optional[ConditionDNF]:
    """Predicate under which the map emits anything, or None.

    None when any emit is reachable through a loop, or when any path
    condition or emitted expression depends on member state or an impure
    builtin: skipping a record could then change later behavior even if
    this record emits nothing.
    """
    path_literals: list[list[tuple[Expr, bool]]] = []
    cond_sids: set[int] = set()
    try:
        for emit in ctx.map_emits:
            if not ctx.is_func(emit.sid):
                return None
            for path in ctx.emit_paths(emit.sid):
                literals = []
                for pc in path:
                    cond_sids.add(pc.sid)
                    literals.append((pc.resolved, pc.polarity))
                path_literals.append(literals)
    except CyclicPathError:
        return None
    for sid in cond_sids:
        if not ctx.is_func(sid):
            return None
    return build_dnf(path_literals)


def find_project(ctx: AnalysisContext) -> set[str]:
    """Fields whose values never influence output: safe to drop.

    Used fields are those feeding emit-path statements (log statements
    excluded), plus anything feeding a member assignment or an impure call
    anywhere in the body including the conditions guarding it, since member
    and table state flows across records. A schema whose value fields are
    all blobs is opaque payload and is never projected.
    """
    schema = ctx.schema
    if schema.is_blob_schema():
        return set()
    all_fields = set(schema.field_names())
    try:
        stmt_ids: set[int] = set()
        for emit in ctx.map_emits:
            stmt_ids |= ctx.emit_path_stmts(emit.sid)
    except CyclicPathError:
        return all_fields - _fields_referenced(ctx)
    used: set[str] = set()
    for sid in stmt_ids:
        if isinstance(ctx.cfg.stmts[sid], LogStmt):
            continue
        used |= ctx.fields_of(sid)
    members = {m.name for m in ctx.job.members}
    for stmt, guards in _guarded_stmts(ctx.job.map_body):
        if _writes_state(stmt, members):
            used |= ctx.fields_of(stmt.sid)
            for gsid in guards:
                used |= ctx.fields_of(gsid)
    return all_fields - used


def find_delta(ctx: AnalysisContext, dropped: set[str]) -> list[str]:
    """Integer fields that survive projection, in schema order."""
    schema = ctx.schema
    if schema.is_blob_schema():
        return []
    return [f for f, t in schema.fields if is_int(t) and f not in dropped]


def find_direct_op(ctx: AnalysisContext) -> list[str]:
    """String fields used only in equality-preserving ways.

    A use qualifies when it is one side of == or != whose other side is a
    string literal or another use of the same field, or when it is the key
    of a map emit while the single emit-key field rule holds (every map
    emit keys exactly this field, output is unsorted, and the reduce side
    treats its key equality-preservingly too). Aliased uses through locals
    are not traced and simply disqualify.
    """
    schema, job = ctx.schema, ctx.job
    uses = {f: [] for f, t in schema.fields if t == "str"}
    if not uses:
        return []
    for stmt in walk_stmts(job.map_body):
        for root in stmt_exprs(stmt):
            _collect_uses(root, stmt, uses, schema, job)
    emit_key_field = _sole_emit_key_field(ctx, uses)
    eligible = set()
    for f, field_uses in uses.items():
        if field_uses and all(_use_ok(role, other, f, emit_key_field, schema)
                              for role, other in field_uses):
            eligible.add(f)
    if emit_key_field in eligible and not _reduce_key_ok(job):
        eligible.discard(emit_key_field)
    return [f for f, _ in schema.fields if f in eligible]


def analyze(typed: TypedJob, input_id: Optional[InputId] = None) -> AnalysisDocument:
    """Run all detectors and assemble the analysis document.

    A map whose behavior is tied to invocation history (member state or an
    impure builtin anywhere in its body) gets no descriptors at all: its
    output may not strictly depend on the record, so no input restructuring
    of any kind is provably safe.
    """
    # imported here: the planner module imports this package
    from minimap.optimizer import dnf_to_ranges

    ctx = AnalysisContext(typed)
    schema = typed.schema
    if not _map_is_functional(ctx):
        return AnalysisDocument(
            schema_name=schema.name, job_name=typed.job.name,
            input=input_id, descriptors=[], index_specs=[])
    descriptors: list[Descriptor] = []

    select: Optional[SelectDescriptor] = None
    dnf = find_select(ctx)
    if dnf is not None:
        cands = []
        for fname, fty in schema.fields:
            if fty == "blob":
                continue
            try:
                dnf_to_ranges(dnf, fname, schema)
            except NotSargableError:
                continue
            cands.append(fname)
        if cands:
            select = SelectDescriptor(dnf=dnf, candidate_fields=cands)
            descriptors.append(select)

    dropped = find_project(ctx)
    project: Optional[ProjectDescriptor] = None
    if dropped:
        project = ProjectDescriptor(
            dropped_fields=[f for f, _ in schema.fields if f in dropped])
        descriptors.append(project)

    delta_fields = find_delta(ctx, dropped)
    delta: Optional[DeltaDescriptor] = None
    if delta_fields:
        delta = DeltaDescriptor(fields=delta_fields)
        descriptors.append(delta)

    direct_fields = find_direct_op(ctx)
    direct: Optional[DirectOpDescriptor] = None
    if direct_fields:
        direct = DirectOpDescriptor(fields=direct_fields)
        descriptors.append(direct)

    specs = _index_specs(schema, input_id, select, project, delta, direct)
    return AnalysisDocument(
        schema_name=schema.name,
        job_name=typed.job.name,
        input=input_id,
        descriptors=descriptors,
        index_specs=specs,
    )


# --------------------------------------------------------------------------
# helpers

def _map_is_functional(ctx: AnalysisContext) -> bool:
    """No member reads or writes, no impure builtins, every emit functional."""
    members = {m.name for m in ctx.job.members}
    for stmt in walk_stmts(ctx.job.map_body):
        if isinstance(stmt, AssignStmt) and stmt.name in members:
            return False
        for root in stmt_exprs(stmt):
            for node in _walk(root):
                if isinstance(node, VarRef) and node.binding == "member":
                    return False
                if isinstance(node, Call) and not is_pure(node.name):
                    return False
    return all(ctx.is_func(emit.sid) for emit in ctx.map_emits)


def _index_specs(schema, input_id, select, project, delta, direct) -> list[IndexGenSpec]:
    """One spec per detected descriptor plus one combined spec."""
    specs: list[IndexGenSpec] = []
    all_fields = [f for f, _ in schema.fields]
    dropped = set(project.dropped_fields) if project else set()
    surviving = [f for f in all_fields if f not in dropped]

    if select:
        specs.append(IndexGenSpec(
            label="select", input=input_id, retained_fields=list(all_fields),
            index_field=select.candidate_fields[0]))
    if project:
        specs.append(IndexGenSpec(
            label="project", input=input_id, retained_fields=list(surviving)))
    if delta:
        specs.append(IndexGenSpec(
            label="delta", input=input_id, retained_fields=list(all_fields),
            codecs={f: "delta" for f in delta.fields}))
    if direct:
        specs.append(IndexGenSpec(
            label="direct_op", input=input_id, retained_fields=list(all_fields),
            codecs={f: "dict" for f in direct.fields}))
    if not specs:
        return specs

    if select:
        idx = next((c for c in select.candidate_fields if c not in dropped), None)
        if idx is not None:
            specs.append(IndexGenSpec(
                label="combined", input=input_id,
                retained_fields=list(surviving), index_field=idx))
            return specs
    codecs = {}
    if delta:
        codecs.update({f: "delta" for f in delta.fields if f not in dropped})
    if direct:
        codecs.update({f: "dict" for f in direct.fields if f not in dropped})
    specs.append(IndexGenSpec(
        label="combined", input=input_id,
        retained_fields=list(surviving), codecs=codecs))
    return specs


def _guarded_stmts(body: list[Stmt], guards: tuple = ()):
    """Yield (stmt, enclosing condition sids) over the whole body."""
    for s in body:
        yield s, guards
        if isinstance(s, IfStmt):
            yield from _guarded_stmts(s.then_body, guards + (s.sid,))
            yield from _guarded_stmts(s.else_body, guards + (s.sid,))
        elif isinstance(s, WhileStmt):
            yield from _guarded_stmts(s.body, guards + (s.sid,))


def _writes_state(stmt: Stmt, members: set[str]) -> bool:
    if isinstance(stmt, AssignStmt) and stmt.name in members:
        return True
    for root in stmt_exprs(stmt):
        for node in _walk(root):
            if isinstance(node, Call) and not is_pure(node.name):
                return True
    return False


def _walk(e: Expr):
    yield e
    if isinstance(e, FieldAccess):
        yield from _walk(e.base)
    elif hasattr(e, "operand"):
        yield from _walk(e.operand)
    elif isinstance(e, Binary):
        yield from _walk(e.left)
        yield from _walk(e.right)
    elif isinstance(e, Call):
        for a in e.args:
            yield from _walk(a)


def _fields_referenced(ctx: AnalysisContext) -> set[str]:
    """Every field the map body could touch, loops or not.

    Fallback for cyclic bodies: a field with no reference anywhere cannot
    influence anything. A bare record reference outside a field access
    counts as touching every field.
    """
    schema = ctx.schema
    used: set[str] = set()

    def scan(e: Expr):
        if (isinstance(e, FieldAccess) and isinstance(e.base, VarRef)
                and e.base.binding == "param_val"):
            used.add(e.name)
            return
        if isinstance(e, VarRef):
            if e.binding == "param_val":
                used.update(schema.field_names())
            elif e.binding == "param_key":
                used.add(schema.key_field)
            return
        if isinstance(e, FieldAccess):
            scan(e.base)
        elif hasattr(e, "operand"):
            scan(e.operand)
        elif isinstance(e, Binary):
            scan(e.left)
            scan(e.right)
        elif isinstance(e, Call):
            for a in e.args:
                scan(a)

    for stmt in walk_stmts(ctx.job.map_body):
        for root in stmt_exprs(stmt):
            scan(root)
    return used


def _is_field_use(e: Expr, f: str, schema) -> bool:
    if (isinstance(e, FieldAccess) and e.name == f
            and isinstance(e.base, VarRef) and e.base.binding == "param_val"):
        return True
    return (f == schema.key_field and isinstance(e, VarRef)
            and e.binding == "param_key")


def _collect_uses(root: Expr, stmt: Stmt, uses: dict, schema, job) -> None:
    """Record (role, other-operand) for every string field use under root."""

    def visit(e: Expr, parent, slot):
        for f in uses:
            if not _is_field_use(e, f, schema):
                continue
            if (isinstance(parent, Binary) and parent.op in ("==", "!=")):
                other = parent.right if e is parent.left else parent.left
                uses[f].append(("cmp", other))
            elif parent is None and isinstance(stmt, EmitStmt) and slot == "key":
                uses[f].append(("emit_key", None))
            else:
                uses[f].append(("other", None))
            return
        if isinstance(e, VarRef) and e.binding == "param_val":
            # whole record escaping (emit value, alias let, log arg):
            # its serialized form embeds every raw string
            for f in uses:
                uses[f].append(("other", None))
            return
        if isinstance(e, FieldAccess):
            return  # bases are always plain variable references
        if hasattr(e, "operand"):
            visit(e.operand, e, None)
        elif isinstance(e, Binary):
            visit(e.left, e, None)
            visit(e.right, e, None)
        elif isinstance(e, Call):
            for a in e.args:
                visit(a, e, None)

    slot = "key" if isinstance(stmt, EmitStmt) and root is stmt.key else None
    visit(root, None, slot)


def _sole_emit_key_field(ctx: AnalysisContext, uses: dict) -> Optional[str]:
    """The one string field every map emit keys directly, if any."""
    job = ctx.job
    if job.sorted_output or not ctx.map_emits:
        return None
    fields = set()
    for emit in ctx.map_emits:
        match = None
        for f in uses:
            if _is_field_use(emit.key, f, ctx.schema):
                match = f
                break
        if match is None:
            return None
        fields.add(match)
    return fields.pop() if len(fields) == 1 else None


def _use_ok(role, other, f, emit_key_field, schema) -> bool:
    if role == "emit_key":
        return f == emit_key_field
    if role != "cmp":
        return False
    if isinstance(other, StrLit):
        return True
    # only the same field: two fields tokenized by different dictionaries
    # would turn token equality into garbage
    return _is_field_use(other, f, schema)


def _reduce_key_ok(job) -> bool:
    """Reduce must treat its token-typed key equality-preservingly.

    Uses of the key param may be equality against a string literal or the
    emit key position (whole, so output keys stay translatable); any string
    emit key other than the bare key param would dodge back-translation,
    so that is rejected too.
    """
    kp = job.reduce_key_param

    def visit(e: Expr, parent, is_emit_key: bool) -> bool:
        if isinstance(e, VarRef) and e.name == kp:
            if is_emit_key:
                return True
            return (isinstance(parent, Binary) and parent.op in ("==", "!=")
                    and isinstance(parent.right if e is parent.left else parent.left, StrLit))
        if isinstance(e, FieldAccess):
            return visit(e.base, e, False)
        if hasattr(e, "operand"):
            return visit(e.operand, e, False)
        if isinstance(e, Binary):
            return visit(e.left, e, False) and visit(e.right, e, False)
        if isinstance(e, Call):
            return all(visit(a, e, False) for a in e.args)
        return True

    for stmt in walk_stmts(job.reduce_body):
        for root in stmt_exprs(stmt):
            top_is_key = isinstance(stmt, EmitStmt) and root is stmt.key
            if top_is_key and root.ty == "str" and not (
                    isinstance(root, VarRef) and root.name == kp):
                return False
            if not visit(root, None, top_is_key):
                return False
    return True
