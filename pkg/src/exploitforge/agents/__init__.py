"""Per-alert agent pipeline: ReAct supervisor and its sub-agents."""

from .state import (
    ConstraintItem,
    ConstraintSet,
    ExploitCandidate,
    FpReason,
    SupervisorState,
    Verdict,
)
from .supervisor import ACTIONS, run_supervisor

__all__ = [
    "ACTIONS",
    "ConstraintItem",
    "ConstraintSet",
    "ExploitCandidate",
    "FpReason",
    "SupervisorState",
    "Verdict",
    "run_supervisor",
]
