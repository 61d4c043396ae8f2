"""Per-task state and run statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

from minimap.lang.ast import JobSpec


@dataclass
class TaskContext:
    """Mutable state owned by exactly one map or reduce task.

    Members are copied fresh from their declared initializers, so state never
    leaks across tasks; the member table backs table_put/table_get/table_has.
    """

    members: dict[str, object] = field(default_factory=dict)
    table: dict[str, int] = field(default_factory=dict)
    logs: list[str] = field(default_factory=list)

    @classmethod
    def for_job(cls, job: JobSpec) -> "TaskContext":
        return cls(members={m.name: m.init for m in job.members})


@dataclass
class ExecutionStats:
    bytes_read: int = 0
    records_scanned: int = 0
    map_invocations: int = 0
    pairs_emitted: int = 0
    shuffle_bytes: int = 0
    reduce_groups: int = 0
    wall_millis: float = 0.0

    def to_json(self) -> dict:
        return {
            "bytes_read": self.bytes_read,
            "records_scanned": self.records_scanned,
            "map_invocations": self.map_invocations,
            "pairs_emitted": self.pairs_emitted,
            "shuffle_bytes": self.shuffle_bytes,
            "reduce_groups": self.reduce_groups,
            "wall_millis": round(self.wall_millis, 3),
        }
