"""Execution engine: interpreter, map-shuffle-reduce runner, index builds."""

from minimap.engine.context import ExecutionStats, TaskContext
from minimap.engine.indexgen import artifact_path, run_index_gen
from minimap.engine.interp import eval_expr, interpret_map, interpret_reduce
from minimap.engine.rewrite import RewriteResult, rewrite_for_directop
from minimap.engine.runner import RECORDS_PER_TASK, JobResult, run_job, run_raw
from minimap.engine.sources import SourceData, load_source

__all__ = [
    "ExecutionStats", "TaskContext",
    "eval_expr", "interpret_map", "interpret_reduce",
    "SourceData", "load_source",
    "RewriteResult", "rewrite_for_directop",
    "RECORDS_PER_TASK", "JobResult", "run_job", "run_raw",
    "artifact_path", "run_index_gen",
]
