"""Call-graph construction and inter-procedural taint analysis."""

from .spec import SinkPattern, TaintSpec, load_taint_spec, default_taint_spec
from .callgraph import CallGraph, CallEdge, CallInfo, build_call_graph
from .engine import (
    AnalysisResult,
    TaintPath,
    analyze_taint,
    K_FIELD,
    MAX_WITNESS_PATHS,
)

__all__ = [
    "AnalysisResult",
    "CallEdge",
    "CallGraph",
    "CallInfo",
    "K_FIELD",
    "MAX_WITNESS_PATHS",
    "SinkPattern",
    "TaintPath",
    "TaintSpec",
    "analyze_taint",
    "build_call_graph",
    "default_taint_spec",
    "load_taint_spec",
]
