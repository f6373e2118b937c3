"""Reflection agents: correction insights and false-positive reasoning."""

from __future__ import annotations

from ..alerts import AlertInfo
from ..gateway import ChatRequest
from .prompts import correction_prompt, false_positive_prompt
from .state import FP_CATEGORIES, ConstraintSet, ExploitCandidate, FpReason


def reflect_correction(candidate: ExploitCandidate, execution_text: str,
                       constraints: ConstraintSet, provider, ledger) -> list[str]:
    """Derive new constraint texts from a failed attempt. Malformed replies
    yield an empty list; the supervisor may then try a different action."""
    prompt = correction_prompt(candidate.attempt_index, candidate.source,
                               execution_text, constraints.render_numbered())
    req = ChatRequest(messages=[{"role": "user", "content": prompt}],
                      agent_tag="reflect_correction")
    resp = provider.chat(req)
    ledger.record("reflect_correction", resp.input_tokens, resp.output_tokens)
    return parse_insights(resp.content)


def parse_insights(text: str) -> list[str]:
    insights: list[str] = []
    in_section = False
    for raw in text.splitlines():
        line = raw.strip()
        upper = line.upper()
        if upper.startswith("NEW_CONSTRAINTS:"):
            value = line.split(":", 1)[1].strip()
            if value.upper() == "NONE":
                return []
            in_section = True
            continue
        if in_section and line.startswith("- "):
            item = line[2:].strip()
            if item:
                insights.append(item)
        elif in_section and line and not line.startswith("-"):
            break
    return insights


def reflect_false_positive(alert: AlertInfo, failure_evidence: str,
                           provider, ledger) -> tuple[FpReason | None, str | None]:
    """Returns (reason, warning). reason None means "not a false positive".
    Categories outside the two known ones are coerced to None with a warning."""
    prompt = false_positive_prompt(alert, failure_evidence)
    req = ChatRequest(messages=[{"role": "user", "content": prompt}],
                      agent_tag="reflect_false_positive")
    resp = provider.chat(req)
    ledger.record("reflect_false_positive", resp.input_tokens, resp.output_tokens)
    return parse_fp_reply(resp.content)


def parse_fp_reply(text: str) -> tuple[FpReason | None, str | None]:
    verdict = None
    category = None
    explanation = ""
    for raw in text.splitlines():
        line = raw.strip()
        upper = line.upper()
        if upper.startswith("VERDICT:"):
            verdict = line.split(":", 1)[1].strip().upper()
        elif upper.startswith("CATEGORY:"):
            category = line.split(":", 1)[1].strip()
        elif upper.startswith("EXPLANATION:"):
            explanation = line.split(":", 1)[1].strip()
    if verdict == "NOT_FP" or verdict is None and category is None:
        return None, None
    if category in FP_CATEGORIES:
        return FpReason(category, explanation), None
    return None, (f"reply named unknown false-positive category {category!r}; "
                  f"only {', '.join(FP_CATEGORIES)} are accepted")
