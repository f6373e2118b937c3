"""Prompt assembly from the versioned resource templates.

Single function bodies longer than the truncation budget are cut to a
head+tail window so extraction prompts stay within context limits.
"""

from __future__ import annotations

from importlib import resources

from ..alerts import AlertInfo

FUNCTION_BODY_BUDGET = 8000
_TRUNCATION_NOTE = "\n/* ... truncated ... */\n"


def load_template(name: str) -> str:
    return resources.files("exploitforge.resources.prompts").joinpath(f"{name}.txt").read_text("utf-8")


def truncate_body(text: str, budget: int = FUNCTION_BODY_BUDGET) -> str:
    if len(text) <= budget:
        return text
    head = int(budget * 0.6)
    tail = budget - head - len(_TRUNCATION_NOTE)
    return text[:head] + _TRUNCATION_NOTE + text[-tail:]


def describe_alert(alert: AlertInfo) -> str:
    return "\n".join([
        f"vulnType: {alert.vuln_type}",
        f"packageName: {alert.package_name}",
        f"entryPoint: {alert.entry_point}",
        f"sink: {alert.sink}",
        f"alertId: {alert.alert_id}",
        "template:",
        alert.template,
    ])


def render_call_chain(alert: AlertInfo) -> str:
    parts = []
    for sig, src in alert.call_chain_with_ctx:
        parts.append(f"// {sig}\n{truncate_body(src)}")
    return "\n\n".join(parts) if parts else "(empty)"


def supervisor_prompt(action_registry: str, alert: AlertInfo, history: str) -> str:
    return load_template("supervisor").format(
        action_registry=action_registry,
        task_description=describe_alert(alert),
        history=history or "(no actions taken yet)",
    )


def extraction_prompt(alert: AlertInfo, function_name: str, function_source: str,
                      constraints_text: str) -> str:
    signatures = "\n".join(f"- {sig}" for sig, _ in alert.call_chain_with_ctx) or "(none)"
    input_classes = "\n\n".join(
        truncate_body(s) for s in alert.input_class_set) or "(empty)"
    return load_template("extraction").format(
        signatures=signatures,
        input_class_set=input_classes,
        function_name=function_name,
        function_source=truncate_body(function_source),
        constraints=constraints_text,
    )


def generation_prompt(alert: AlertInfo, final_constraints: str, hint: str) -> str:
    return load_template("generation").format(
        vuln_type=alert.vuln_type,
        package_name=alert.package_name,
        entry_point=alert.entry_point,
        sink=alert.sink,
        template=alert.template,
        final_constraints=final_constraints,
        hint=hint,
    )


def correction_prompt(attempt_index: int, candidate_source: str,
                      execution_info: str, constraints_text: str) -> str:
    return load_template("correction").format(
        attempt_index=attempt_index,
        candidate_source=candidate_source,
        execution_info=execution_info,
        constraints=constraints_text,
    )


def false_positive_prompt(alert: AlertInfo, failure_evidence: str) -> str:
    return load_template("false_positive").format(
        task_description=describe_alert(alert),
        call_chain=render_call_chain(alert),
        failure_evidence=failure_evidence or "(none)",
    )
