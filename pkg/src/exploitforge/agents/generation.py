"""Exploit candidate generation and vulnerability-specific hints."""

from __future__ import annotations

import re

from ..alerts import AlertInfo
from ..frontend import check_syntax
from ..gateway import ChatRequest
from ..validator.types import CanarySpec
from .prompts import generation_prompt
from .state import ConstraintSet, ExploitCandidate

_CODE_BLOCK = re.compile(r"```[a-zA-Z]*\n(.*?)```", re.DOTALL)


class NoCodeBlockError(Exception):
    pass


def vulnerability_hint(vuln_type: str, canary: CanarySpec) -> str:
    if vuln_type == "CmdInj":
        return (f"the exploit must cause the package to run a command that creates "
                f"the file {canary.cmd_canary_file} in the working directory "
                f"(e.g. `touch {canary.cmd_canary_file}`)")
    if vuln_type == "CodeInj":
        return (f"the evaluated code must spawn a child process creating the file "
                f"{canary.cmd_canary_file}; inside evaluated code use "
                f"process.mainModule.require('child_process') since plain require "
                f"is not in scope (e.g. execSync('touch {canary.cmd_canary_file}'))")
    if vuln_type == "Path":
        return (f"the exploit must make the package read the planted file "
                f"{canary.fs_canary_path} which sits in the sandbox root, one level "
                f"above the package directory; reach it by path traversal")
    if vuln_type == "Proto":
        return (f"the exploit must make the package define the property "
                f"{canary.proto_canary_prop} on Object.prototype (never assign "
                f"any __proto__ or prototype expression yourself)")
    raise ValueError(f"no hint for vulnType {vuln_type!r}")


def extract_code_block(reply: str) -> str:
    m = _CODE_BLOCK.search(reply)
    if m is None:
        raise NoCodeBlockError("reply contains no fenced code block")
    return m.group(1).strip() + "\n"


def generate_exploit(alert: AlertInfo, constraints: ConstraintSet, hint: str,
                     provider, ledger, attempt_index: int) -> ExploitCandidate:
    prompt = generation_prompt(alert, constraints.render_numbered(), hint)
    source = None
    for attempt in range(2):
        req = ChatRequest(messages=[{"role": "user", "content": prompt}],
                          agent_tag="generate_exploit")
        resp = provider.chat(req)
        ledger.record("generate_exploit", resp.input_tokens, resp.output_tokens)
        try:
            source = extract_code_block(resp.content)
            break
        except NoCodeBlockError:
            if attempt == 1:
                raise
            prompt += "\n\nYour previous reply had no code block. Reply with exactly one fenced code block."
    assert source is not None
    diagnostics = check_syntax(source)
    candidate = ExploitCandidate(
        source=source,
        vuln_type=alert.vuln_type,
        attempt_index=attempt_index,
        syntax_status="ok" if not diagnostics else "failed",
        syntax_diagnostics=[d.render() for d in diagnostics],
    )
    return candidate
