"""Command-line interface.

Commands: scan, exploit, report, version.
Exit codes: 0 success, 2 input error, 3 partial failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .alerts import group_paths_into_alerts, load_alerts_file, write_alerts_file
from .config import ConfigError, load_config
from .frontend import FrontendError, parse_package
from .gateway import GatewayError
from .report import ReportError, build_report, render_markdown, report_from_run_dir, write_report
from .runner import RunnerError, run_all
from .taint import analyze_taint, build_call_graph, default_taint_spec, load_taint_spec
from .taint.spec import VULN_TYPES


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FrontendError, RunnerError, ReportError, GatewayError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exploitforge",
        description="static taint alerts in, validated proof-of-concept exploits out",
    )
    sub = parser.add_subparsers(required=True)

    p_scan = sub.add_parser("scan", help="analyze a package and write alerts.json")
    p_scan.add_argument("package_dir")
    p_scan.add_argument("--vuln-types", default=None,
                        help=f"comma-separated subset of {','.join(VULN_TYPES)}")
    p_scan.add_argument("-o", "--output", default="alerts.json")
    p_scan.add_argument("--taint-spec", default=None)
    p_scan.set_defaults(func=cmd_scan)

    p_x = sub.add_parser("exploit", help="run the agent pipeline over an alert file")
    p_x.add_argument("--alerts", required=True)
    p_x.add_argument("--package", default=None)
    p_x.add_argument("--config", default=None)
    p_x.add_argument("--run-dir", required=True)
    p_x.add_argument("--llm", default=None,
                     help="provider override: scripted:<path> or http")
    p_x.add_argument("--oracle-from-traces", default=None,
                     help="replay mode: directory of frozen execution records")
    p_x.add_argument("--budget", type=int, default=None)
    p_x.add_argument("--parallel", type=int, default=None)
    p_x.add_argument("--deterministic", action="store_true")
    p_x.add_argument("--force", action="store_true",
                     help="re-run alerts that already have a verdict")
    p_x.add_argument("--shim", default=None, help="path to the trace shim for live runs")
    p_x.set_defaults(func=cmd_exploit)

    p_r = sub.add_parser("report", help="summarize a run directory")
    p_r.add_argument("--run-dir", required=True)
    p_r.add_argument("--deterministic", action="store_true")
    p_r.set_defaults(func=cmd_report)

    p_v = sub.add_parser("version", help="print the version")
    p_v.set_defaults(func=lambda args: (print(__version__), 0)[1])
    return parser


def cmd_scan(args) -> int:
    try:
        model = parse_package(args.package_dir)
    except FrontendError as e:
        for d in e.diagnostics:
            print(d.render(), file=sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return 2
    for w in model.warnings:
        print(w.render(), file=sys.stderr)

    spec = load_taint_spec(args.taint_spec) if args.taint_spec else default_taint_spec()
    if args.vuln_types:
        wanted = [v.strip() for v in args.vuln_types.split(",") if v.strip()]
        unknown = [v for v in wanted if v not in VULN_TYPES]
        if unknown:
            print(f"error: unknown vuln types {unknown}", file=sys.stderr)
            return 2
        spec = spec.restricted_to(wanted)

    cg = build_call_graph(model)
    result = analyze_taint(model, cg, spec)
    if result.incomplete:
        print("warning: analysis budget exceeded; results are partial", file=sys.stderr)
    alerts = group_paths_into_alerts(result.paths, model)
    write_alerts_file(alerts, args.output)
    print(f"{len(alerts)} alert(s) written to {args.output}")
    return 0


def cmd_exploit(args) -> int:
    cfg = load_config(args.config)
    if args.llm:
        if args.llm.startswith("scripted:"):
            cfg.llm_provider = "scripted"
            cfg.llm_transcript = args.llm.split(":", 1)[1]
        elif args.llm == "http":
            cfg.llm_provider = "http"
        else:
            print(f"error: bad --llm value {args.llm!r}", file=sys.stderr)
            return 2
    if args.oracle_from_traces:
        cfg.oracle_from_traces = args.oracle_from_traces
    if args.budget is not None:
        cfg.budget = args.budget
    if args.parallel is not None:
        cfg.parallel = args.parallel
    if args.deterministic:
        cfg.deterministic = True
    if args.shim:
        cfg.shim_path = args.shim
    cfg.validate()

    alerts = load_alerts_file(args.alerts)
    run_dir = Path(args.run_dir)
    package_root = Path(args.package) if args.package else None

    started = time.monotonic()
    results = run_all(alerts, package_root, cfg, run_dir, force=args.force)
    wall = time.monotonic() - started

    report = build_report(results, wall_seconds=wall, deterministic=cfg.deterministic)
    write_report(report, run_dir, timestamp=_now_rfc3339())
    print(render_markdown(report))
    if any(v.aborted for v, _ in results.values()):
        print("error: at least one alert aborted on provider failure", file=sys.stderr)
        return 3
    return 0


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    if not run_dir.is_dir():
        print(f"error: no run directory {run_dir}", file=sys.stderr)
        return 2
    cfg = load_config(None)
    cfg.deterministic = args.deterministic
    report = report_from_run_dir(run_dir, cfg)
    write_report(report, run_dir, timestamp=_now_rfc3339())
    print(render_markdown(report))
    return 0


def _now_rfc3339() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


if __name__ == "__main__":
    sys.exit(main())
