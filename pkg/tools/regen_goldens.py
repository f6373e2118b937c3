#!/usr/bin/env python3
"""Regenerate the committed fixture artifacts.

Produces, for every fixture package under fixtures/packages/:
  - fixtures/goldens/alerts/<pkg>.alerts.json   scan output (byte-exact golden)
  - fixtures/transcripts/<pkg>.json             scripted provider transcript
  - fixtures/goldens/replay/<pkg>/attempt-N.json frozen execution records
  - fixtures/exploits/f_cheat.js                the anti-cheat rejection fixture

Replay records come in two flavors:
  --replay-mode model   hand-modeled records (no runtime needed)
  --replay-mode live    run each exploit in the real sandbox with the trace
                        shim (needs node + a built shim), then normalize paths

Canary names embed alert ids, so transcripts/replays must be regenerated
whenever the analysis changes anything that feeds the alert id.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from exploitforge.alerts import AlertInfo, group_paths_into_alerts, write_alerts_file  # noqa: E402
from exploitforge.frontend import check_syntax, parse_package  # noqa: E402
from exploitforge.taint import analyze_taint, build_call_graph, default_taint_spec  # noqa: E402
from exploitforge.validator.execute import execute  # noqa: E402
from exploitforge.validator.sandbox import destroy_sandbox, prepare_sandbox  # noqa: E402
from exploitforge.validator.types import CanarySpec  # noqa: E402

FIXTURES = ROOT / "fixtures"
PACKAGES = ["shellq", "deepcmd", "confeval", "docvault", "deepmix", "hostping", "queuectl"]


def dump(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def scan_fixture(pkg: str) -> list[AlertInfo]:
    model = parse_package(FIXTURES / "packages" / pkg)
    result = analyze_taint(model, build_call_graph(model), default_taint_spec())
    return group_paths_into_alerts(result.paths, model)


# --- exploit sources ----------------------------------------------------------


def exploits_for(pkg: str, canaries: dict[int, CanarySpec]) -> dict[int, str]:
    c1 = canaries[1]
    if pkg == "shellq":
        return {1: f'const pkg = require("shellq");\npkg.run("; touch {c1.cmd_canary_file}");\n'}
    if pkg == "deepcmd":
        c2 = canaries[2]
        return {
            1: f'const pkg = require("deepcmd");\npkg.entry("; touch {c1.cmd_canary_file}");\n',
            2: f'const pkg = require("deepcmd");\npkg.entry("--name=x; touch {c2.cmd_canary_file}");\n',
        }
    if pkg == "confeval":
        payload = ("x=process.mainModule.require('child_process')"
                   f".execSync('touch {c1.cmd_canary_file}')")
        return {1: f'const pkg = require("confeval");\npkg.loadConfig("{payload}");\n'}
    if pkg == "docvault":
        return {1: f'const pkg = require("docvault");\npkg.fetchDoc("../../../{c1.fs_canary_path}");\n'}
    if pkg == "deepmix":
        patch = f'{{"__proto__": {{"{c1.proto_canary_prop}": 1}}}}'
        return {1: f"const pkg = require(\"deepmix\");\npkg.apply({{}}, JSON.parse('{patch}'));\n"}
    if pkg == "hostping":
        return {1: f'const pkg = require("hostping");\npkg.ping("; touch {c1.cmd_canary_file}");\n'}
    if pkg == "queuectl":
        return {1: f'const pkg = require("queuectl");\npkg.runQueue("; touch {c1.cmd_canary_file}");\n'}
    raise ValueError(pkg)


# --- scripted transcripts -------------------------------------------------------


def _sup(substrings, thought, action):
    return {
        "expectAgentTag": "supervisor",
        "expectSubstrings": substrings,
        "reply": f"Thought: {thought}\nAction: {action}\nAction Input: {{}}",
    }


def _extract(substrings, constraints, next_function):
    bullets = "\n".join(f"- {c}" for c in constraints) or "- (none)"
    return {
        "expectAgentTag": "extract_constraints",
        "expectSubstrings": substrings,
        "reply": f"CONSTRAINTS:\n{bullets}\nNEXT_FUNCTION: {next_function}",
    }


def _generate(substrings, source):
    return {
        "expectAgentTag": "generate_exploit",
        "expectSubstrings": substrings,
        "reply": "Following the constraints and the hint:\n\n```js\n" + source + "```\n",
    }


def _correct(substrings, root_cause, constraints):
    bullets = "\n".join(f"- {c}" for c in constraints)
    return {
        "expectAgentTag": "reflect_correction",
        "expectSubstrings": substrings,
        "reply": f"ROOT_CAUSE: {root_cause}\nNEW_CONSTRAINTS:\n{bullets}",
    }


def _fp(substrings, category, explanation):
    return {
        "expectAgentTag": "reflect_false_positive",
        "expectSubstrings": substrings,
        "reply": f"VERDICT: FALSE_POSITIVE\nCATEGORY: {category}\nEXPLANATION: {explanation}",
    }


DEEPCMD_INSIGHT = "the argument must start with --name="


def transcript_for(pkg: str, exploits: dict[int, str], canaries) -> list[dict]:
    c1 = canaries[1]
    if pkg == "shellq":
        return [
            _sup(["shellq", "run (cmd)"], "Review the taint flow before writing code.",
                 "extract_constraints"),
            _extract(["run (cmd)"],
                     ['cmd is appended to "ls " and executed by a shell via exec.'], "NONE"),
            _sup(["shellq"], "Constraints are clear; write the exploit.", "generate_exploit"),
            _generate(["finalConstraints", c1.cmd_canary_file], exploits[1]),
            _sup(["shellq"], "Validate the candidate in the sandbox.", "validate"),
        ]
    if pkg == "deepcmd":
        c2 = canaries[2]
        return [
            _sup(["deepcmd", "entry (opts)"], "Understand the three-function chain first.",
                 "extract_constraints"),
            _extract(["entry (opts)"], ["opts is forwarded unchanged to mid."], "mid (v)"),
            _extract(["mid (v)"],
                     ["the first 7 characters of v are stripped before the shell wrapper."],
                     "NONE"),
            _sup(["deepcmd"], "Try a direct payload.", "generate_exploit"),
            _generate(["finalConstraints", c1.cmd_canary_file], exploits[1]),
            _sup(["deepcmd"], "Validate attempt 1.", "validate"),
            _sup(["deepcmd"], "No trace events: the input never reached the wrapper.",
                 "reflect_correction"),
            _correct(["Step 1"],
                     "The guard in mid returns early because the input fails its prefix check.",
                     [DEEPCMD_INSIGHT]),
            _sup(["deepcmd"], "Regenerate with the new constraint.", "generate_exploit"),
            _generate(["finalConstraints", DEEPCMD_INSIGHT, c2.cmd_canary_file], exploits[2]),
            _sup(["deepcmd"], "Validate attempt 2.", "validate"),
        ]
    if pkg == "confeval":
        return [
            _sup(["confeval", "loadConfig (text)"], "Inspect the eval gate.",
                 "extract_constraints"),
            _extract(["loadConfig (text)"],
                     ["text must be a string containing '='; everything after the first '=' is evaluated as code."],
                     "NONE"),
            _sup(["confeval"], "Build the evaluated payload.", "generate_exploit"),
            _generate(["finalConstraints", c1.cmd_canary_file], exploits[1]),
            _sup(["confeval"], "Validate the candidate.", "validate"),
        ]
    if pkg == "docvault":
        return [
            _sup(["docvault", "fetchDoc (name)"], "Check how the path is assembled.",
                 "extract_constraints"),
            _extract(["fetchDoc (name)"],
                     ["name is joined under the package docs directory; traversal segments survive."],
                     "NONE"),
            _sup(["docvault"], "Traverse out of the package directory.", "generate_exploit"),
            _generate(["finalConstraints", c1.fs_canary_path], exploits[1]),
            _sup(["docvault"], "Validate the candidate.", "validate"),
        ]
    if pkg == "deepmix":
        return [
            _sup(["deepmix", "apply (target, patch)"], "Study the merge recursion.",
                 "extract_constraints"),
            _extract(["apply (target, patch)"],
                     ["patch is merged recursively into target key by key."], "merge (dst, src)"),
            _extract(["merge (dst, src)"],
                     ["nested objects recurse, so special keys in patch pick the destination object."],
                     "NONE"),
            _sup(["deepmix"], "Craft the polluting patch.", "generate_exploit"),
            _generate(["finalConstraints", c1.proto_canary_prop], exploits[1]),
            _sup(["deepmix"], "Validate the candidate.", "validate"),
        ]
    if pkg == "hostping":
        return [
            _sup(["hostping", "ping (host)"], "Trace the host value.", "extract_constraints"),
            _extract(["ping (host)"], ["host flows through stripMeta before the ping command."],
                     "stripMeta (s)"),
            _extract(["stripMeta (s)"],
                     ["stripMeta deletes every character outside [a-zA-Z0-9]."], "NONE"),
            _sup(["hostping"], "Try a shell metacharacter payload anyway.", "generate_exploit"),
            _generate(["finalConstraints", c1.cmd_canary_file], exploits[1]),
            _sup(["hostping"], "Validate attempt 1.", "validate"),
            _sup(["hostping"], "The command ran stripped; the flow looks neutralized.",
                 "reflect_false_positive"),
            _fp(["SanitizerPresent"], "SanitizerPresent",
                "stripMeta removes every non-alphanumeric character before exec; it is an unlisted sanitizer on the flow."),
        ]
    if pkg == "queuectl":
        return [
            _sup(["queuectl", "runQueue (jobs)"], "Check which element reaches execSync.",
                 "analyze"),
            _sup(["queuectl"], "Attempt an injection through jobs.", "generate_exploit"),
            _generate(["finalConstraints", c1.cmd_canary_file], exploits[1]),
            _sup(["queuectl"], "Validate attempt 1.", "validate"),
            _sup(["queuectl"], "Only the constant cmds[0] is executed; the alert is array over-taint.",
                 "reflect_false_positive"),
            _fp(["StaticImprecision"], "StaticImprecision",
                "only cmds[0], a constant, reaches execSync; the alert exists because one tainted element taints the whole array."),
        ]
    raise ValueError(pkg)


# --- hand-modeled replay records ------------------------------------------------


def _frame(fn, file, line):
    return {"fn": fn, "file": file, "line": line}


def _event(kind, api, args, stack):
    return {"kind": kind, "api": api, "args": args, "stack": stack}


def modeled_replays(pkg: str, canaries, exploits) -> dict[int, dict]:
    base = {
        "compile": {"status": "success", "diagnostics": []},
        "exitCode": 0, "timedOut": False, "stderrTail": "",
        "runtimeErrorStack": None, "traceFlagged": False,
    }
    c1 = canaries[1]
    if pkg == "shellq":
        ev = _event("child-exec", "child_process.exec",
                    [f"ls ; touch {c1.cmd_canary_file}"],
                    [_frame("run", "node_modules/shellq/index.js", 4),
                     _frame("", "exploit.js", 2)])
        return {1: {**base, "events": [ev], "cmdCanaryExists": True}}
    if pkg == "deepcmd":
        c2 = canaries[2]
        ev2 = _event("child-exec", "child_process.execSync",
                     [f"echo x; touch {c2.cmd_canary_file}"],
                     [_frame("sinkWrapper", "node_modules/deepcmd/index.js", 4),
                      _frame("mid", "node_modules/deepcmd/index.js", 12),
                      _frame("entry", "node_modules/deepcmd/index.js", 16),
                      _frame("", "exploit.js", 2)])
        return {
            1: {**base, "events": [], "cmdCanaryExists": False},
            2: {**base, "events": [ev2], "cmdCanaryExists": True},
        }
    if pkg == "confeval":
        code = exploits[1].split('loadConfig("')[1].rsplit('")', 1)[0].split("=", 1)[1]
        ev_eval = _event("code-eval", "eval", [f"({code})"],
                         [_frame("loadConfig", "node_modules/confeval/index.js", 6),
                          _frame("", "exploit.js", 2)])
        ev_exec = _event("child-exec", "child_process.execSync",
                         [f"touch {c1.cmd_canary_file}"],
                         [_frame("eval", "eval at loadConfig (node_modules/confeval/index.js:6:10)", 1),
                          _frame("loadConfig", "node_modules/confeval/index.js", 6),
                          _frame("", "exploit.js", 2)])
        return {1: {**base, "events": [ev_eval, ev_exec], "cmdCanaryExists": True}}
    if pkg == "docvault":
        ev = _event("fs-read", "fs.readFileSync",
                    [c1.fs_canary_path, c1.fs_canary_content],
                    [_frame("fetchDoc", "node_modules/docvault/index.js", 6),
                     _frame("", "exploit.js", 2)])
        return {1: {**base, "events": [ev], "cmdCanaryExists": False}}
    if pkg == "deepmix":
        ev_write = _event("proto-write", "canary-setter", [c1.proto_canary_prop, "1"],
                          [_frame("merge", "node_modules/deepmix/index.js", 11),
                           _frame("merge", "node_modules/deepmix/index.js", 8),
                           _frame("apply", "node_modules/deepmix/index.js", 17),
                           _frame("", "exploit.js", 2)])
        probe = _event("proto-write", "exit-probe", [c1.proto_canary_prop, "true"], [])
        return {1: {**base, "events": [ev_write, probe], "cmdCanaryExists": False}}
    if pkg == "hostping":
        stripped = "".join(ch for ch in f"touch {c1.cmd_canary_file}" if ch.isalnum())
        ev = _event("child-exec", "child_process.exec", [f"ping -c 1 {stripped}"],
                    [_frame("ping", "node_modules/hostping/index.js", 9),
                     _frame("", "exploit.js", 2)])
        return {1: {**base, "events": [ev], "cmdCanaryExists": False}}
    if pkg == "queuectl":
        ev = _event("child-exec", "child_process.execSync", ["echo ready"],
                    [_frame("runQueue", "node_modules/queuectl/index.js", 6),
                     _frame("", "exploit.js", 2)])
        return {1: {**base, "events": [ev], "cmdCanaryExists": False}}
    raise ValueError(pkg)


# --- live replay records --------------------------------------------------------


def live_replays(pkg: str, canaries, exploits, shim: Path) -> dict[int, dict]:
    out = {}
    for attempt, source in exploits.items():
        canary = canaries[attempt]
        env = prepare_sandbox(FIXTURES / "packages" / pkg, source, canary, timeout_sec=20)
        try:
            info = execute(env, shim_path=shim)
            payload = info.to_json()
            payload["stderrTail"] = ""  # absolute-path noise; goldens stay path-free
            if payload["runtimeErrorStack"] is not None:
                payload["runtimeErrorStack"] = "(runtime error; see live run)"
            out[attempt] = payload
        finally:
            destroy_sandbox(env)
    return out


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--replay-mode", choices=["model", "live"], default="model")
    ap.add_argument("--shim", default=str(ROOT / "shim" / "dist" / "index.js"))
    ap.add_argument("--only", default=None, help="regen a single fixture")
    args = ap.parse_args()

    packages = [args.only] if args.only else PACKAGES
    for pkg in packages:
        alerts = scan_fixture(pkg)
        assert len(alerts) == 1, f"{pkg}: expected exactly 1 alert, got {len(alerts)}"
        alert = alerts[0]
        write_alerts_file(alerts, FIXTURES / "goldens" / "alerts" / f"{pkg}.alerts.json")

        canaries = {n: CanarySpec(alert.alert_id, n, pkg) for n in (1, 2)}
        exploits = exploits_for(pkg, canaries)
        for src in exploits.values():
            assert check_syntax(src) == [], f"{pkg}: exploit does not parse:\n{src}"

        dump(FIXTURES / "transcripts" / f"{pkg}.json",
             transcript_for(pkg, exploits, canaries))

        if args.replay_mode == "live":
            replays = live_replays(pkg, canaries, exploits, Path(args.shim))
        else:
            replays = modeled_replays(pkg, canaries, exploits)
        for attempt, record in replays.items():
            dump(FIXTURES / "goldens" / "replay" / pkg / f"attempt-{attempt}.json", record)

        if pkg == "shellq":
            cheat = (f'const pkg = require("shellq");\n'
                     f'const cp = require("child_process");\n'
                     f'cp.exec("touch {canaries[1].cmd_canary_file}");\n')
            path = FIXTURES / "exploits" / "f_cheat.js"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(cheat, encoding="utf-8")
        print(f"{pkg}: alertId={alert.alert_id} vulnType={alert.vuln_type} "
              f"attempts={sorted(exploits)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
