"""Run report: machine JSON plus a human-readable markdown summary.

Verdict buckets partition the alert set. PoEs count every alert whose path
was proven executable, so confirmed exploits increment both the exploit and
the PoE tally.
"""

from __future__ import annotations

import json
from decimal import Decimal
from pathlib import Path

from .agents.state import Verdict
from .config import DETERMINISTIC_TIMESTAMP, RunConfig
from .gateway import UsageLedger, compute_cost
from .runner import dump_json, load_persisted


class ReportError(Exception):
    pass


def build_report(results: dict[str, tuple[Verdict, UsageLedger]],
                 wall_seconds: float, deterministic: bool) -> dict:
    per_alert = []
    totals = {
        "alerts": 0, "PoEs": 0, "exploits": 0, "falsePositives": 0, "exhausted": 0,
        "inputTokens": 0, "outputTokens": 0,
    }
    total_cost = Decimal("0")
    for alert_id in sorted(results):
        verdict, ledger = results[alert_id]
        cost = compute_cost(ledger)
        total_cost += cost
        totals["alerts"] += 1
        if verdict.outcome == "ExploitConfirmed":
            totals["exploits"] += 1
            totals["PoEs"] += 1
        elif verdict.outcome == "PoEOnly":
            totals["PoEs"] += 1
        elif verdict.outcome == "FalsePositive":
            totals["falsePositives"] += 1
        else:
            totals["exhausted"] += 1
        totals["inputTokens"] += ledger.total_input
        totals["outputTokens"] += ledger.total_output
        per_alert.append({
            "alertId": alert_id,
            "verdict": verdict.outcome,
            "fpCategory": verdict.fp_reason.category if verdict.fp_reason else None,
            "attemptsUsed": verdict.attempts_used,
            "aborted": verdict.aborted,
            "tokens": {"input": ledger.total_input, "output": ledger.total_output},
            "cost": str(cost),
        })
    return {
        "generatedAt": DETERMINISTIC_TIMESTAMP if deterministic else None,
        "perAlert": per_alert,
        "totals": {
            **totals,
            "cost": str(total_cost.quantize(Decimal("0.0001"))),
            "wallSeconds": 0.0 if deterministic else round(wall_seconds, 3),
        },
    }


def write_report(report: dict, run_dir: Path, timestamp: str | None = None) -> None:
    if report.get("generatedAt") is None:
        report = {**report, "generatedAt": timestamp or DETERMINISTIC_TIMESTAMP}
    dump_json(run_dir / "report.json", report)
    (run_dir / "report.md").write_text(render_markdown(report), encoding="utf-8")


def render_markdown(report: dict) -> str:
    t = report["totals"]
    lines = [
        "# Run report",
        "",
        f"- alerts: {t['alerts']}",
        f"- PoEs: {t['PoEs']}",
        f"- exploits: {t['exploits']}",
        f"- false positives: {t['falsePositives']}",
        f"- exhausted: {t['exhausted']}",
        f"- tokens: {t['inputTokens']} in / {t['outputTokens']} out",
        f"- cost: ${t['cost']}",
        "",
        "| alert | verdict | attempts | tokens (in/out) | cost |",
        "|-------|---------|----------|-----------------|------|",
    ]
    for row in report["perAlert"]:
        verdict = row["verdict"]
        if row.get("fpCategory"):
            verdict += f" ({row['fpCategory']})"
        lines.append(
            f"| {row['alertId']} | {verdict} | {row['attemptsUsed']} "
            f"| {row['tokens']['input']}/{row['tokens']['output']} | ${row['cost']} |")
    lines.append("")
    return "\n".join(lines)


def report_from_run_dir(run_dir: Path, cfg: RunConfig) -> dict:
    """Rebuild the report from persisted per-alert verdicts (cmd_report)."""
    results = {}
    corrupt: list[str] = []
    for child in sorted(run_dir.iterdir()):
        if not child.is_dir():
            continue
        try:
            persisted = load_persisted(child)
        except (json.JSONDecodeError, KeyError, ValueError):
            corrupt.append(child.name)
            continue
        if persisted is not None:
            results[child.name] = persisted
    if corrupt:
        raise ReportError(f"corrupt verdict files: {', '.join(corrupt)}")
    return build_report(results, wall_seconds=0.0, deterministic=cfg.deterministic)
