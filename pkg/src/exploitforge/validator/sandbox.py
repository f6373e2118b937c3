"""Sandbox preparation: offline install by directory copy, canary
provisioning, per-attempt isolation."""

from __future__ import annotations

import shutil
import tempfile
from pathlib import Path

from .types import EXPLOIT_FILE_NAME, CanarySpec, SandboxEnv


class SandboxError(Exception):
    pass


def prepare_sandbox(
    package_root: str | Path,
    exploit_source: str,
    canary: CanarySpec,
    timeout_sec: float = 30.0,
    base_dir: str | Path | None = None,
) -> SandboxEnv:
    """Copy the target package into a fresh sandbox where ``require(<name>)``
    resolves to it, write the exploit, and plant the filesystem canary."""
    root = Path(tempfile.mkdtemp(prefix="efsb-", dir=base_dir))
    package_dir = root / "node_modules" / canary.package_base_name
    try:
        shutil.copytree(package_root, package_dir)
    except OSError as e:
        shutil.rmtree(root, ignore_errors=True)
        raise SandboxError(f"package copy failed: {e}") from None

    exploit_file = root / EXPLOIT_FILE_NAME
    exploit_file.write_text(exploit_source, encoding="utf-8")
    (root / canary.fs_canary_path).write_text(canary.fs_canary_content, encoding="utf-8")

    return SandboxEnv(
        root_dir=root,
        package_dir=package_dir,
        exploit_file=exploit_file,
        canary=canary,
        trace_path=root / "trace.jsonl",
        timeout_sec=timeout_sec,
    )


def destroy_sandbox(env: SandboxEnv) -> None:
    shutil.rmtree(env.root_dir, ignore_errors=True)
