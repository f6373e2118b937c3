"""Incremental constraint extraction over the alert's call chain.

One function is reviewed per round. The reply names the next function to
review; extraction stops when the model answers NONE, revisits a function, or
the round cap is hit. Constraints accumulate append-only.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..alerts import AlertInfo
from ..gateway import ChatRequest, GatewayError
from .prompts import extraction_prompt
from .state import ConstraintSet


@dataclass
class ExtractionStep:
    reviewed_function: str
    new_constraints: list[str]
    next_function: str | None  # None encodes "all relevant functions covered"


class MalformedStepError(Exception):
    pass


def parse_extraction_reply(text: str, reviewed: str) -> ExtractionStep:
    constraints: list[str] = []
    next_function: str | None = None
    saw_constraints = saw_next = False
    for raw in text.splitlines():
        line = raw.strip()
        if line.upper().startswith("CONSTRAINTS:"):
            saw_constraints = True
            continue
        if line.upper().startswith("NEXT_FUNCTION:"):
            saw_next = True
            value = line.split(":", 1)[1].strip()
            if value and value.upper() != "NONE":
                next_function = value
            continue
        if saw_constraints and not saw_next and line.startswith("- "):
            item = line[2:].strip()
            if item and item != "(none)":
                constraints.append(item)
    if not saw_constraints or not saw_next:
        raise MalformedStepError(f"missing CONSTRAINTS/NEXT_FUNCTION sections in: {text[:200]!r}")
    return ExtractionStep(reviewed, constraints, next_function)


def _known_functions(alert: AlertInfo) -> dict[str, str]:
    """signature -> source, for the call chain plus the input class set."""
    known = {sig: src for sig, src in alert.call_chain_with_ctx}
    for entry in alert.input_class_set:
        head = entry.split("(", 1)[0].strip()
        known[head] = entry
    return known


def _resolve_next(name: str, known: dict[str, str]) -> str | None:
    if name in known:
        return name
    for sig in known:
        if sig.split(" (")[0] == name or sig.split("(")[0].strip() == name:
            return sig
    return None


def extract_constraints(alert: AlertInfo, provider, ledger, constraints: ConstraintSet,
                        cap: int, start_round: int = 1) -> tuple[int, bool, str]:
    """Run the extraction loop, appending to ``constraints``.

    Returns (rounds_run, partial, stop_reason)."""
    known = _known_functions(alert)
    if not alert.call_chain_with_ctx:
        return 0, False, "empty call chain"
    current = alert.call_chain_with_ctx[0][0]  # start at the entry point
    reviewed: set[str] = set()
    rounds = 0
    for i in range(cap):
        round_no = start_round + i
        prompt = extraction_prompt(alert, current, known.get(current, "(source unavailable)"),
                                   constraints.render_numbered())
        reply = None
        for attempt in range(2):
            req = ChatRequest(messages=[{"role": "user", "content": prompt}],
                              agent_tag="extract_constraints")
            try:
                resp = provider.chat(req)
            except GatewayError:
                raise
            ledger.record("extract_constraints", resp.input_tokens, resp.output_tokens)
            try:
                reply = parse_extraction_reply(resp.content, current)
                break
            except MalformedStepError:
                if attempt == 1:
                    return rounds, True, "malformed extraction reply"
                prompt += ("\n\nYour previous reply was not parseable. Reply with the "
                           "CONSTRAINTS list and the NEXT_FUNCTION line exactly as specified.")
        assert reply is not None
        rounds += 1
        reviewed.add(current)
        constraints.extend(reply.new_constraints, origin="extraction", round_no=round_no)
        if reply.next_function is None:
            return rounds, False, "model reported all functions covered"
        nxt = _resolve_next(reply.next_function, known)
        if nxt is None:
            return rounds, True, f"next function {reply.next_function!r} is not in the alert"
        if nxt in reviewed:
            return rounds, False, f"revisit of {nxt!r} stops extraction"
        current = nxt
    return rounds, False, f"round cap {cap} reached"
