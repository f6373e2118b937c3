"""ReAct supervisor: one loop per alert.

Every turn the supervisor model is shown the action registry, the reasoning
and format instructions, the task, and the history so far, and replies with a
thought/action/input triple. A legality guard validates the action before
dispatch; illegal names are never executed. The loop terminates on the finish
action, on a false-positive reflection, on a confirmed payload, or on attempt
budget exhaustion. No fixed action order is imposed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..alerts import AlertInfo
from ..gateway import ChatRequest, TransportError
from ..validator.anticheat import anti_cheat_scan
from ..validator.oracle import apply_oracle
from ..validator.types import CanarySpec, ExecutionInfo, OracleResult
from . import prompts
from .extraction import extract_constraints
from .generation import NoCodeBlockError, generate_exploit, vulnerability_hint
from .reflection import reflect_correction, reflect_false_positive
from .state import ExploitCandidate, FpReason, SupervisorState, Verdict

ACTIONS: dict[str, str] = {
    "analyze": "re-read the alert details (call chain and taint paths)",
    "extract_constraints": "review the call chain function by function and accumulate input constraints",
    "generate_exploit": "write the next exploit candidate from the template, constraints, and hint (consumes one attempt)",
    "validate": "run the current candidate in the sandbox and apply the vulnerability oracle",
    "reflect_correction": "analyze the last failed execution and add corrective constraints",
    "reflect_false_positive": "decide whether the alert itself is a false positive",
    "finish": "stop working on this alert",
}

_HISTORY_WINDOW = 6


class MalformedActionError(Exception):
    pass


@dataclass
class ParsedAction:
    thought: str
    name: str
    args: dict


def parse_action_reply(text: str) -> ParsedAction:
    thought = ""
    name = None
    args: dict = {}
    for raw in text.splitlines():
        line = raw.strip()
        if line.lower().startswith("thought:") and not thought:
            thought = line.split(":", 1)[1].strip()
        elif line.lower().startswith("action:") and name is None:
            name = line.split(":", 1)[1].strip()
        elif line.lower().startswith("action input:"):
            payload = line.split(":", 1)[1].strip()
            if payload:
                try:
                    parsed = json.loads(payload)
                except json.JSONDecodeError:
                    raise MalformedActionError(f"action input is not JSON: {payload!r}") from None
                if not isinstance(parsed, dict):
                    raise MalformedActionError("action input must be a JSON object")
                args = parsed
    if not name:
        raise MalformedActionError(f"no Action line in reply: {text[:200]!r}")
    return ParsedAction(thought, name, args)


def registry_text() -> str:
    return "\n".join(f"- {name}: {desc}" for name, desc in ACTIONS.items())


def render_history(state: SupervisorState) -> str:
    entries = state.transcript[-_HISTORY_WINDOW:]
    skipped = len(state.transcript) - len(entries)
    parts = []
    if skipped > 0:
        parts.append(f"(...{skipped} earlier steps omitted...)")
    for e in entries:
        parts.append(f"Thought: {e['thought']}\nAction: {e['action']}\n"
                     f"Observation: {e['observation']}")
    return "\n\n".join(parts)


def render_execution(info: ExecutionInfo, oracle: OracleResult | None) -> str:
    lines = [info.compile_text()]
    if info.compiled:
        lines.append(f"exitCode: {info.exit_code}, timedOut: {info.timed_out}")
        if info.runtime_error_stack:
            lines.append("runtimeErrorStack:\n" + info.runtime_error_stack.strip())
        if info.events:
            lines.append("execution traces:")
            for ev in info.events[:10]:
                arg0 = ev.args[0][:120] if ev.args else ""
                lines.append(f"  - {ev.kind} {ev.api} args[0]={arg0!r} "
                             f"stackDepth={len(ev.stack)}")
            if len(info.events) > 10:
                lines.append(f"  (... {len(info.events) - 10} more events)")
        else:
            lines.append("execution traces: (none)")
    if oracle is not None:
        lines.append(f"oracle: {oracle.level} — {oracle.evidence}")
    return "\n".join(lines)


def classify_outcome(oracle: OracleResult, anti_cheat_ok: bool,
                     state: SupervisorState) -> str:
    """Returns the verdict fragment for one validation: "confirmed", "poe",
    "void" (anti-cheat rejection), or "failed"."""
    if not anti_cheat_ok:
        return "void"
    if oracle.confirmed:
        return "confirmed"
    if oracle.level == "SinkReached":
        return "poe"
    return "failed"


def run_supervisor(
    alert: AlertInfo,
    provider,
    ledger,
    validate_fn,
    budget: int = 20,
    extraction_cap: int = 12,
    state: SupervisorState | None = None,
) -> tuple[Verdict, SupervisorState]:
    """Drive the per-alert loop. ``validate_fn(candidate) -> ExecutionInfo``
    is injected by the caller (live sandbox execution or trace replay)."""
    if state is None:
        state = SupervisorState(alert=alert)
    pkg_base = alert.package_name.split(":")[0]
    max_steps = budget * 8 + 16

    def canary_for(attempt: int) -> CanarySpec:
        return CanarySpec(alert.alert_id, attempt, pkg_base)

    def final_verdict(outcome: str, **kw) -> Verdict:
        return Verdict(outcome=outcome, attempts_used=state.attempts, **kw)

    for _step in range(max_steps):
        if state.attempts >= budget and not state.pending_validation:
            if state.poe_candidate is not None:
                return final_verdict("PoEOnly", exploit=state.poe_candidate,
                                     oracle_evidence=state.poe_evidence), state
            return final_verdict("Exhausted"), state

        prompt = prompts.supervisor_prompt(registry_text(), alert, render_history(state))
        try:
            action = _ask_for_action(provider, ledger, prompt)
        except TransportError as e:
            v = final_verdict("Exhausted", aborted=True)
            state.record("", "(provider failure)", f"aborted: {e}")
            return v, state
        except MalformedActionError as e:
            state.record("", "(malformed)", f"unparseable action reply: {e}")
            continue  # a wasted step

        if action.name not in ACTIONS:
            state.record(action.thought, action.name,
                         f"illegal action {action.name!r}: not in the registry, refused")
            continue

        if action.name == "finish":
            state.record(action.thought, "finish", "run finished by supervisor")
            if state.poe_candidate is not None:
                return final_verdict("PoEOnly", exploit=state.poe_candidate,
                                     oracle_evidence=state.poe_evidence), state
            return final_verdict("Exhausted"), state

        try:
            observation, terminal = _dispatch(action, state, provider, ledger,
                                              validate_fn, budget, extraction_cap,
                                              canary_for)
        except TransportError as e:
            state.record(action.thought, action.name, f"aborted: {e}")
            return final_verdict("Exhausted", aborted=True), state
        state.record(action.thought, action.name, observation)
        if terminal is not None:
            return terminal, state

    if state.poe_candidate is not None:
        return final_verdict("PoEOnly", exploit=state.poe_candidate,
                             oracle_evidence=state.poe_evidence), state
    return final_verdict("Exhausted"), state


def _ask_for_action(provider, ledger, prompt: str) -> ParsedAction:
    last_error: MalformedActionError | None = None
    for attempt in range(2):
        req = ChatRequest(messages=[{"role": "user", "content": prompt}],
                          agent_tag="supervisor")
        resp = provider.chat(req)
        ledger.record("supervisor", resp.input_tokens, resp.output_tokens)
        try:
            return parse_action_reply(resp.content)
        except MalformedActionError as e:
            last_error = e
            prompt += ("\n\nYour previous reply was not parseable. Use exactly the "
                       "three-line Thought/Action/Action Input format.")
    raise last_error  # one reformat retry exhausted: the step is wasted


def _dispatch(action: ParsedAction, state: SupervisorState, provider, ledger,
              validate_fn, budget: int, extraction_cap: int,
              canary_for) -> tuple[str, Verdict | None]:
    alert = state.alert
    name = action.name

    if name == "analyze":
        chain = prompts.render_call_chain(alert)
        paths = "\n".join(
            " -> ".join(h.access or h.fn for h in p.hops) + f"  [{p.vuln_type}]"
            for p in alert.paths[:8]) or "(no stored paths)"
        return f"{prompts.describe_alert(alert)}\n\ncall chain:\n{chain}\n\ntaint paths:\n{paths}", None

    if name == "extract_constraints":
        before = len(state.constraints)
        rounds, partial, reason = extract_constraints(
            alert, provider, ledger, state.constraints, cap=extraction_cap,
            start_round=state.constraint_rounds + 1)
        state.constraint_rounds += rounds
        note = " (partial)" if partial else ""
        return (f"extraction ran {rounds} round(s){note}, stopped because {reason}; "
                f"{len(state.constraints) - before} new constraint(s), "
                f"{len(state.constraints)} total"), None

    if name == "generate_exploit":
        if state.attempts >= budget:
            return f"refused: attempt budget ({budget}) exhausted", None
        attempt_index = state.attempts + 1
        hint = vulnerability_hint(alert.vuln_type, canary_for(attempt_index))
        try:
            candidate = generate_exploit(alert, state.constraints, hint,
                                         provider, ledger, attempt_index)
        except NoCodeBlockError:
            state.attempts = attempt_index  # a wasted attempt, per the budget rule
            state.pending_validation = False
            return "generation reply had no code block even after a retry; attempt wasted", None
        state.attempts = attempt_index
        state.candidate = candidate
        state.candidates.append(candidate)
        state.pending_validation = candidate.syntax_status == "ok"
        if candidate.syntax_status == "ok":
            return f"candidate {attempt_index} generated; syntax ok", None
        diag = "; ".join(candidate.syntax_diagnostics)
        return (f"candidate {attempt_index} generated; syntax FAILED: {diag}; "
                f"route this to reflect_correction"), None

    if name == "validate":
        candidate = state.candidate
        if candidate is None:
            return "refused: no candidate to validate; generate_exploit first", None
        if candidate.syntax_status != "ok":
            return "refused: candidate failed the syntax check; reflect and regenerate", None
        canary = canary_for(candidate.attempt_index)
        ac = anti_cheat_scan(candidate.source, alert.vuln_type, canary)
        if not ac.ok:
            candidate.voided = True
            state.pending_validation = False
            state.failed_validations += 1
            return f"attempt void: {ac.evidence}", None
        info = validate_fn(candidate)
        state.last_execution = info
        state.pending_validation = False
        oracle = apply_oracle(alert.vuln_type, info, canary)
        state.last_oracle = oracle
        fragment = classify_outcome(oracle, ac.ok, state)
        obs = render_execution(info, oracle)
        if fragment == "confirmed":
            verdict = Verdict(outcome="ExploitConfirmed", exploit=candidate,
                              oracle_evidence=oracle.evidence,
                              attempts_used=state.attempts)
            return obs, verdict
        if fragment == "poe":
            state.poe_candidate = candidate
            state.poe_evidence = oracle.evidence
            state.failed_validations += 1
            return obs + "\n(the path is executable; payload still unconfirmed)", None
        state.failed_validations += 1
        return obs, None

    if name == "reflect_correction":
        candidate = state.candidate
        if candidate is None:
            return "refused: nothing to reflect on yet", None
        if candidate.syntax_status == "failed":
            failure_text = "syntax check failed:\n" + "\n".join(candidate.syntax_diagnostics)
        elif state.last_execution is not None:
            failure_text = render_execution(state.last_execution, state.last_oracle)
        elif candidate.voided:
            failure_text = "attempt was voided by the anti-cheat scan"
        else:
            return "refused: no failed execution to reflect on", None
        insights = reflect_correction(candidate, failure_text, state.constraints,
                                      provider, ledger)
        state.constraint_rounds += 1
        state.constraints.extend(insights, origin="reflection",
                                 round_no=state.constraint_rounds)
        if insights:
            return f"{len(insights)} correction insight(s) added to the constraints", None
        return "no new insight derived from the failure", None

    if name == "reflect_false_positive":
        if state.failed_validations == 0:
            return "refused: no failed validation yet; false-positive reasoning needs evidence", None
        evidence_parts = []
        if state.last_execution is not None:
            evidence_parts.append(render_execution(state.last_execution, state.last_oracle))
        if state.candidate is not None and state.candidate.voided:
            evidence_parts.append("last attempt was voided by anti-cheat")
        reason, warning = reflect_false_positive(
            alert, "\n".join(evidence_parts), provider, ledger)
        if reason is not None:
            verdict = Verdict(outcome="FalsePositive", fp_reason=reason,
                              attempts_used=state.attempts)
            return f"false positive concluded: {reason.category} — {reason.explanation}", verdict
        if warning:
            return f"reflection reply coerced to NOT_FP: {warning}", None
        return "reflection says the alert is not a false positive", None

    raise AssertionError(f"unhandled action {name!r}")  # guarded above
