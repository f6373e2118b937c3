"""Per-alert run orchestration: provider wiring, validation mode (live
sandbox or trace replay), artifact persistence, and resume."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .agents import run_supervisor
from .agents.state import Verdict
from .alerts import AlertInfo
from .config import RunConfig
from .gateway import ScriptedChatProvider, HttpChatProvider, UsageLedger
from .validator.execute import execute
from .validator.sandbox import destroy_sandbox, prepare_sandbox
from .validator.types import CanarySpec, ExecutionInfo


class RunnerError(Exception):
    pass


def dump_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def make_provider(cfg: RunConfig, alert: AlertInfo):
    if cfg.llm_provider == "scripted":
        if not cfg.llm_transcript:
            raise RunnerError("scripted provider needs llm.transcript")
        path = Path(cfg.llm_transcript)
        if path.is_dir():
            base = alert.package_name.split(":")[0]
            path = path / f"{base}.json"
        if not path.is_file():
            raise RunnerError(f"no scripted transcript at {path}")
        return ScriptedChatProvider.from_file(path)
    return HttpChatProvider(cfg.llm_endpoint, cfg.llm_model)


def make_validate_fn(alert: AlertInfo, package_root: Path | None,
                     cfg: RunConfig, alert_dir: Path):
    pkg_base = alert.package_name.split(":")[0]

    def persist(candidate, info: ExecutionInfo) -> None:
        attempt_dir = alert_dir / "attempts" / f"attempt-{candidate.attempt_index}"
        dump_json(attempt_dir / "execution.json", info.to_json())

    if cfg.oracle_from_traces:
        replay_root = Path(cfg.oracle_from_traces)

        def replay(candidate) -> ExecutionInfo:
            specific = replay_root / pkg_base / f"attempt-{candidate.attempt_index}.json"
            fallback = replay_root / pkg_base / "default.json"
            path = specific if specific.is_file() else fallback
            if not path.is_file():
                raise RunnerError(f"no replay trace at {specific} (or default.json)")
            info = ExecutionInfo.from_json(json.loads(path.read_text(encoding="utf-8")))
            persist(candidate, info)
            return info

        return replay

    if package_root is None:
        raise RunnerError("live validation needs --package")

    def live(candidate) -> ExecutionInfo:
        canary = CanarySpec(alert.alert_id, candidate.attempt_index, pkg_base)
        env = prepare_sandbox(package_root, candidate.source, canary,
                              timeout_sec=cfg.timeout_sec)
        try:
            info = execute(env, shim_path=cfg.shim_path)
        finally:
            stderr_path = alert_dir / "attempts" / f"attempt-{candidate.attempt_index}" / "stderr.txt"
            stderr_path.parent.mkdir(parents=True, exist_ok=True)
            if env.trace_path.exists():
                raw = env.trace_path.read_text(encoding="utf-8", errors="replace")
                (stderr_path.parent / "trace.jsonl").write_text(raw, encoding="utf-8")
            destroy_sandbox(env)
        (alert_dir / "attempts" / f"attempt-{candidate.attempt_index}" / "stderr.txt").write_text(
            info.stderr_tail, encoding="utf-8")
        persist(candidate, info)
        return info

    return live


def run_alert(alert: AlertInfo, package_root: Path | None, cfg: RunConfig,
              run_dir: Path) -> tuple[Verdict, UsageLedger]:
    alert_dir = run_dir / alert.alert_id
    alert_dir.mkdir(parents=True, exist_ok=True)
    provider = make_provider(cfg, alert)
    ledger = UsageLedger(price_per_k_input=cfg.price_input_per_k,
                         price_per_k_output=cfg.price_output_per_k)
    validate_fn = make_validate_fn(alert, package_root, cfg, alert_dir)

    verdict, state = run_supervisor(
        alert, provider, ledger, validate_fn,
        budget=cfg.budget, extraction_cap=cfg.extraction_cap)

    dump_json(alert_dir / "transcript.json", state.transcript)
    dump_json(alert_dir / "constraints.json", state.constraints.to_json())
    for cand in state.candidates:
        cand_path = alert_dir / "candidates" / f"attempt-{cand.attempt_index}.txt"
        cand_path.parent.mkdir(parents=True, exist_ok=True)
        cand_path.write_text(cand.source, encoding="utf-8")
    dump_json(alert_dir / "verdict.json", {"alertId": alert.alert_id, **verdict.to_json()})
    dump_json(alert_dir / "usage.json", ledger.to_json())
    return verdict, ledger


def load_persisted(alert_dir: Path) -> tuple[Verdict, UsageLedger] | None:
    vpath = alert_dir / "verdict.json"
    upath = alert_dir / "usage.json"
    if not vpath.is_file():
        return None
    verdict = Verdict.from_json(json.loads(vpath.read_text(encoding="utf-8")))
    if upath.is_file():
        ledger = UsageLedger.from_json(json.loads(upath.read_text(encoding="utf-8")))
    else:
        ledger = UsageLedger()
    return verdict, ledger


def run_all(alerts: list[AlertInfo], package_root: Path | None, cfg: RunConfig,
            run_dir: Path, force: bool = False) -> dict[str, tuple[Verdict, UsageLedger]]:
    """Run every alert (resuming finished ones) and return results by id."""
    run_dir.mkdir(parents=True, exist_ok=True)
    results: dict[str, tuple[Verdict, UsageLedger]] = {}
    todo: list[AlertInfo] = []
    for alert in alerts:
        persisted = None
        if not force:
            try:
                persisted = load_persisted(run_dir / alert.alert_id)
            except (json.JSONDecodeError, KeyError, ValueError):
                persisted = None  # corrupt verdict: redo the alert
        if persisted is not None:
            results[alert.alert_id] = persisted
        else:
            todo.append(alert)

    def one(alert: AlertInfo):
        return alert.alert_id, run_alert(alert, package_root, cfg, run_dir)

    if cfg.parallel > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=cfg.parallel) as pool:
            for alert_id, res in pool.map(one, todo):
                results[alert_id] = res
    else:
        for alert in todo:
            alert_id, res = one(alert)
            results[alert_id] = res
    return results
