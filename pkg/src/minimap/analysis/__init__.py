"""Static analysis over map bodies: CFG, dataflow, use-def DAGs, emit paths."""

from minimap.analysis.cfg import CFG, build_cfg, cfg_to_dot
from minimap.analysis.context import AnalysisContext
from minimap.analysis.paths import PathCond, enumerate_emit_paths, logs_on_emit_paths
from minimap.analysis.reaching import ReachingDefs, compute_reaching
from minimap.analysis.usedef import UseDefDAG, dump_usedef, fields_in, get_use_def, is_func

__all__ = [
    "CFG", "build_cfg", "cfg_to_dot",
    "AnalysisContext",
    "PathCond", "enumerate_emit_paths", "logs_on_emit_paths",
    "ReachingDefs", "compute_reaching",
    "UseDefDAG", "dump_usedef", "fields_in", "get_use_def", "is_func",
]
