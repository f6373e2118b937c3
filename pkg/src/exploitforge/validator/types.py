"""Validation data types and their JSON forms.

The trace file contract (shared bit-exact with the runtime shim):
UTF-8 JSON lines, one event per line,
``{"kind":"...","api":"...","args":[...],"stack":[{"fn":"...","file":"...","line":N}]}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

EXPLOIT_FILE_NAME = "exploit.js"

TRACE_PATH_ENV = "VULNSAGE_TRACE_PATH"
PROTO_CANARY_ENV = "VULNSAGE_PROTO_CANARY"
SANDBOX_ROOT_ENV = "VULNSAGE_SANDBOX_ROOT"

EVENT_KINDS = ("child-exec", "code-eval", "fs-read", "proto-write")


@dataclass(frozen=True)
class TraceEvent:
    kind: str
    api: str
    args: tuple[str, ...]
    stack: tuple[tuple[str, str, int], ...]  # (fn, file, line)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "api": self.api,
            "args": list(self.args),
            "stack": [{"fn": fn, "file": file, "line": line} for fn, file, line in self.stack],
        }

    @classmethod
    def from_json(cls, d: dict) -> "TraceEvent":
        if d.get("kind") not in EVENT_KINDS:
            raise ValueError(f"unknown trace event kind {d.get('kind')!r}")
        return cls(
            kind=d["kind"],
            api=str(d.get("api", "")),
            args=tuple(str(a) for a in d.get("args", [])),
            stack=tuple(
                (str(f.get("fn", "")), str(f.get("file", "")), int(f.get("line", 0)))
                for f in d.get("stack", [])
            ),
        )

    def is_exit_probe(self) -> bool:
        return self.kind == "proto-write" and self.api == "exit-probe"


@dataclass(frozen=True)
class CanarySpec:
    """Unique per (alert, attempt) artifacts whose appearance proves payload
    execution. All paths are sandbox-root relative, so oracle decisions are
    replayable from persisted traces alone."""

    alert_id: str
    attempt_index: int
    package_base_name: str

    @property
    def cmd_canary_file(self) -> str:
        return f"cmd-canary-{self.alert_id}-{self.attempt_index}.txt"

    @property
    def fs_canary_path(self) -> str:
        return f"fs-canary-{self.alert_id}-{self.attempt_index}.txt"

    @property
    def fs_canary_content(self) -> str:
        return f"CANARY-CONTENT-{self.alert_id}-{self.attempt_index}"

    @property
    def proto_canary_prop(self) -> str:
        return f"__ef_canary_{self.alert_id}_{self.attempt_index}__"

    @property
    def package_prefix(self) -> str:
        return f"node_modules/{self.package_base_name}"

    def marker_for(self, vuln_type: str) -> str:
        if vuln_type in ("CmdInj", "CodeInj"):
            return self.cmd_canary_file
        if vuln_type == "Path":
            return self.fs_canary_path
        if vuln_type == "Proto":
            return self.proto_canary_prop
        raise ValueError(f"no marker for vulnType {vuln_type!r}")

    def to_json(self) -> dict:
        return {
            "alertId": self.alert_id,
            "attemptIndex": self.attempt_index,
            "packageBaseName": self.package_base_name,
        }

    @classmethod
    def from_json(cls, d: dict) -> "CanarySpec":
        return cls(d["alertId"], d["attemptIndex"], d["packageBaseName"])


@dataclass
class SandboxEnv:
    root_dir: Path
    package_dir: Path
    exploit_file: Path
    canary: CanarySpec
    trace_path: Path
    timeout_sec: float = 30.0


@dataclass
class ExecutionInfo:
    compile_status: str  # "success" | "failed"
    compile_diagnostics: list[str] = field(default_factory=list)
    exit_code: int | None = None
    timed_out: bool = False
    stderr_tail: str = ""
    runtime_error_stack: str | None = None
    events: list[TraceEvent] = field(default_factory=list)
    cmd_canary_exists: bool = False
    trace_flagged: bool = False  # some trace lines were unreadable

    @property
    def compiled(self) -> bool:
        return self.compile_status == "success"

    def compile_text(self) -> str:
        if self.compiled:
            return "compilation success"
        return "compilation failed: " + "; ".join(self.compile_diagnostics)

    def to_json(self) -> dict:
        return {
            "compile": {
                "status": self.compile_status,
                "diagnostics": list(self.compile_diagnostics),
            },
            "exitCode": self.exit_code,
            "timedOut": self.timed_out,
            "stderrTail": self.stderr_tail,
            "runtimeErrorStack": self.runtime_error_stack,
            "events": [e.to_json() for e in self.events],
            "cmdCanaryExists": self.cmd_canary_exists,
            "traceFlagged": self.trace_flagged,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ExecutionInfo":
        return cls(
            compile_status=d["compile"]["status"],
            compile_diagnostics=list(d["compile"].get("diagnostics", [])),
            exit_code=d.get("exitCode"),
            timed_out=bool(d.get("timedOut", False)),
            stderr_tail=str(d.get("stderrTail", "")),
            runtime_error_stack=d.get("runtimeErrorStack"),
            events=[TraceEvent.from_json(e) for e in d.get("events", [])],
            cmd_canary_exists=bool(d.get("cmdCanaryExists", False)),
            trace_flagged=bool(d.get("traceFlagged", False)),
        )


@dataclass(frozen=True)
class OracleResult:
    level: str  # "NotReached" | "SinkReached" | "PayloadConfirmed"
    evidence: str

    @property
    def confirmed(self) -> bool:
        return self.level == "PayloadConfirmed"

    @property
    def sink_reached(self) -> bool:
        return self.level in ("SinkReached", "PayloadConfirmed")

    def to_json(self) -> dict:
        return {"level": self.level, "evidence": self.evidence}

    @classmethod
    def from_json(cls, d: dict) -> "OracleResult":
        return cls(d["level"], d.get("evidence", ""))
