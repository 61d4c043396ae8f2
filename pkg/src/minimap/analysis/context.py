"""One analysis context per typed job: shared CFG, dataflow and DAG cache."""

from __future__ import annotations

from functools import cached_property

from minimap.analysis.cfg import CFG, build_cfg
from minimap.analysis.paths import (
    PathCond,
    emit_path_stmts,
    enumerate_emit_paths,
    logs_on_emit_paths,
)
from minimap.analysis.reaching import ReachingDefs, compute_reaching
from minimap.analysis.usedef import UseDefDAG, fields_in, get_use_def, is_func
from minimap.lang.ast import EmitStmt
from minimap.lang.typecheck import TypedJob


class AnalysisContext:
    """Lazily built analyses over a job's map body."""

    def __init__(self, typed: TypedJob):
        self.typed = typed
        self.job = typed.job
        self.schema = typed.schema
        self._dags: dict[int, UseDefDAG] = {}
        self._paths: dict[int, list[list[PathCond]]] = {}

    @cached_property
    def cfg(self) -> CFG:
        return build_cfg(self.job.map_body)

    @cached_property
    def reaching(self) -> ReachingDefs:
        params = [self.job.map_key_param, self.job.map_val_param]
        members = [m.name for m in self.job.members]
        return compute_reaching(self.cfg, params, members)

    @property
    def map_emits(self) -> list[EmitStmt]:
        return self.typed.map_emits

    def use_def(self, sid: int) -> UseDefDAG:
        dag = self._dags.get(sid)
        if dag is None:
            dag = get_use_def(self.cfg.stmts, self.reaching, sid, self.schema.key_field)
            self._dags[sid] = dag
        return dag

    def is_func(self, sid: int) -> bool:
        return is_func(self.use_def(sid))

    def fields_of(self, sid: int) -> set[str]:
        return fields_in(self.use_def(sid), self.schema.field_names())

    def emit_paths(self, emit_sid: int) -> list[list[PathCond]]:
        paths = self._paths.get(emit_sid)
        if paths is None:
            paths = enumerate_emit_paths(self.cfg, emit_sid)
            self._paths[emit_sid] = paths
        return paths

    def emit_path_stmts(self, emit_sid: int) -> set[int]:
        return emit_path_stmts(self.cfg, emit_sid)

    def logs_on_emit_paths(self) -> bool:
        return logs_on_emit_paths(self.cfg)
