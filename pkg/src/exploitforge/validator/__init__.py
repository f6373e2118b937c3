"""Sandboxed validation: prepare, execute, trace, apply oracles, anti-cheat."""

from .types import (
    CanarySpec,
    ExecutionInfo,
    OracleResult,
    SandboxEnv,
    TraceEvent,
)
from .anticheat import ANTI_CHEAT_CMD_PHRASE, anti_cheat_scan
from .sandbox import prepare_sandbox
from .execute import RuntimeMissingError, execute
from .oracle import apply_oracle

__all__ = [
    "ANTI_CHEAT_CMD_PHRASE",
    "CanarySpec",
    "ExecutionInfo",
    "OracleResult",
    "RuntimeMissingError",
    "SandboxEnv",
    "TraceEvent",
    "anti_cheat_scan",
    "apply_oracle",
    "execute",
    "prepare_sandbox",
]
