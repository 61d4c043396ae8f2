"""Opportunity detectors and the descriptor documents they produce."""

from minimap.detect.dnf import Atom, ConditionDNF, annotate_atom, eval_dnf
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
from minimap.detect.detectors import (
    analyze,
    find_delta,
    find_direct_op,
    find_project,
    find_select,
)

__all__ = [
    "Atom", "ConditionDNF", "annotate_atom", "eval_dnf",
    "AnalysisDocument", "DeltaDescriptor", "Descriptor", "DirectOpDescriptor",
    "IndexGenSpec", "InputId", "ProjectDescriptor", "SelectDescriptor",
    "analyze", "find_delta", "find_direct_op", "find_project", "find_select",
]
