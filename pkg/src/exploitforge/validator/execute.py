"""Run an exploit candidate under node with the trace shim preloaded and
collect the execution record."""

from __future__ import annotations

import json
import os
import shutil
import signal
import subprocess
from pathlib import Path

from ..frontend.builder import check_syntax
from .types import (
    PROTO_CANARY_ENV,
    SANDBOX_ROOT_ENV,
    TRACE_PATH_ENV,
    ExecutionInfo,
    SandboxEnv,
    TraceEvent,
)

_STDERR_TAIL = 2000


class RuntimeMissingError(Exception):
    pass


def execute(env: SandboxEnv, shim_path: str | Path | None = None,
            node_binary: str = "node") -> ExecutionInfo:
    source = env.exploit_file.read_text(encoding="utf-8")
    diagnostics = check_syntax(source)
    if diagnostics:
        return ExecutionInfo(
            compile_status="failed",
            compile_diagnostics=[d.render() for d in diagnostics],
        )

    node = shutil.which(node_binary)
    if node is None:
        raise RuntimeMissingError(f"target runtime {node_binary!r} not found on PATH")

    cmd = [node]
    if shim_path is not None:
        cmd += ["--require", str(Path(shim_path).resolve())]
    cmd.append(str(env.exploit_file))

    run_env = dict(os.environ)
    run_env[TRACE_PATH_ENV] = str(env.trace_path)
    run_env[PROTO_CANARY_ENV] = env.canary.proto_canary_prop
    run_env[SANDBOX_ROOT_ENV] = str(env.root_dir)

    proc = subprocess.Popen(
        cmd,
        cwd=env.root_dir,
        env=run_env,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        start_new_session=True,  # lets us kill the whole process tree
    )
    timed_out = False
    try:
        _, stderr = proc.communicate(timeout=env.timeout_sec)
    except subprocess.TimeoutExpired:
        timed_out = True
        try:
            os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
        except (ProcessLookupError, PermissionError):
            proc.kill()
        _, stderr = proc.communicate()

    stderr_text = stderr.decode("utf-8", errors="replace")
    events, flagged = _parse_trace(env.trace_path)
    exit_code = None if timed_out else proc.returncode
    runtime_error_stack = None
    if not timed_out and proc.returncode not in (0, None) and stderr_text.strip():
        runtime_error_stack = stderr_text[-_STDERR_TAIL:]

    return ExecutionInfo(
        compile_status="success",
        exit_code=exit_code,
        timed_out=timed_out,
        stderr_tail=stderr_text[-_STDERR_TAIL:],
        runtime_error_stack=runtime_error_stack,
        events=events,
        cmd_canary_exists=(env.root_dir / env.canary.cmd_canary_file).exists(),
        trace_flagged=flagged,
    )


def _parse_trace(trace_path: Path) -> tuple[list[TraceEvent], bool]:
    events: list[TraceEvent] = []
    flagged = False
    if not trace_path.exists():
        return events, flagged
    for line in trace_path.read_text(encoding="utf-8", errors="replace").splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            events.append(TraceEvent.from_json(json.loads(line)))
        except (ValueError, KeyError, TypeError):
            flagged = True  # keep what parses, flag the rest
    return events, flagged
