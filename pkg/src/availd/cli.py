"""Command-line entry points: serve, report, simulate, export, import."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .alerts import parse_scenario, run_probe_scenario
from .config import load_config
from .errors import AvaildError
from .eventstore import EventLog
from .metrics import TimeInterval
from .store import ServiceStore
from .timeutil import parse_rfc3339, to_rfc3339


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="availd",
        description="Availability SLA tracking service: incident lifecycle, "
        "outage records, RCA workflow, change control, and the dashboard.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", required=True, help="path to the TOML config")
    serve.add_argument("--data-dir", required=True, help="event log directory")
    serve.add_argument("--port", type=int, default=8080)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--ui-dir", default=None, help="static UI bundle to serve")

    report = sub.add_parser("report", help="print the executive report")
    report.add_argument("--config", required=True)
    report.add_argument("--data-dir", required=True)
    report.add_argument("--from", dest="from_", required=True, metavar="RFC3339")
    report.add_argument("--to", dest="to", required=True, metavar="RFC3339")
    report.add_argument("--format", choices=("json", "text"), default="json")

    simulate = sub.add_parser(
        "simulate", help="run a probe scenario; print or ingest the alert stream"
    )
    simulate.add_argument("--scenario", required=True, help="scenario file")
    simulate.add_argument(
        "--config", default=None, help="with --data-dir: ingest into the store"
    )
    simulate.add_argument("--data-dir", default=None)

    export = sub.add_parser("export", help="write the event log as NDJSON to stdout")
    export.add_argument("--data-dir", required=True)
    export.add_argument("--from-seq", dest="from_seq", type=int, default=0)

    imp = sub.add_parser("import", help="merge an exported NDJSON event stream")
    imp.add_argument("file", help="NDJSON file to merge")
    imp.add_argument("--data-dir", required=True)

    return parser


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    config = load_config(args.config)
    store = ServiceStore(config, Path(args.data_dir))
    app = create_app(store, ui_dir=args.ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _render_text_report(report: dict) -> str:
    lines = [
        f"Executive report {report['period']['from']} .. {report['period']['to']}",
        "",
        f"Incidents: {report['incidents']['total']}",
    ]
    for key in ("by_severity", "by_source", "by_product"):
        tallies = report["incidents"][key]
        if tallies:
            rendered = ", ".join(f"{k}: {v}" for k, v in sorted(tallies.items()))
            lines.append(f"  {key.replace('_', ' ')}: {rendered}")
    mean = report["incidents"]["mean_duration_minutes"]
    if mean is not None:
        lines.append(f"  mean outage duration: {mean} min")
    lines.append("")
    lines.append("Availability:")
    for row in report["availability"]:
        if row["availability_percent"] is None:
            lines.append(f"  {row['product_id']}: no planned uptime")
            continue
        status = "met" if row["met"] else "MISSED"
        lines.append(
            f"  {row['product_id']}: {row['availability_percent']}% "
            f"(target {row['sla_target_percent']}%, downtime "
            f"{row['downtime_minutes']} of {row['allowed_downtime_minutes']} "
            f"allowed min) - {status}"
        )
    if report["breaches"]:
        lines.append("")
        lines.append("Breaches:")
        for breach in report["breaches"]:
            lines.append(
                f"  {breach['product_id']}: margin {breach['margin_minutes']} min"
            )
    rca = report["rca_backlog"]
    lines.append("")
    lines.append(
        f"RCA backlog: {rca['open']} open, {rca['submitted']} submitted, "
        f"{rca['overdue']} overdue"
        + (
            f", mean age {rca['mean_age_days']} days"
            if rca["mean_age_days"] is not None
            else ""
        )
    )
    changes = report["changes"]
    tallies = ", ".join(f"{k}: {v}" for k, v in sorted(changes["by_state"].items()))
    lines.append(
        f"Changes: {tallies or 'none'} "
        f"({changes['executed_in_period']} executed in period, "
        f"{changes['correlated_with_incidents']} correlated with incidents)"
    )
    return "\n".join(lines)


def _cmd_report(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    store = ServiceStore(config, Path(args.data_dir))
    try:
        period = TimeInterval(parse_rfc3339(args.from_), parse_rfc3339(args.to))
        report = store.executive_report(period)
    finally:
        store.close()
    if args.format == "json":
        print(json.dumps(report, indent=2))
    else:
        print(_render_text_report(report))
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    text = Path(args.scenario).read_text(encoding="utf-8")
    scenario = parse_scenario(text)
    events = run_probe_scenario(scenario)
    if args.config is None or args.data_dir is None:
        for event in events:
            print(
                json.dumps(
                    {
                        "monitor_id": event.monitor_id,
                        "fired_at": to_rfc3339(event.fired_at),
                        "value": event.value,
                        "message": event.message,
                    },
                    sort_keys=True,
                )
            )
        return 0
    config = load_config(args.config)
    store = ServiceStore(config, Path(args.data_dir))
    try:
        for event in events:
            store.ingest_alert(
                monitor_id=event.monitor_id,
                fired_at=event.fired_at,
                value=event.value,
                message=event.message,
            )
        counters = store.alert_counters()
    finally:
        store.close()
    print(
        f"ingested {len(events)} events: "
        + ", ".join(f"{k}={v}" for k, v in sorted(counters.items()))
    )
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    log = EventLog(Path(args.data_dir) / "events.ndjson")
    try:
        sys.stdout.write(log.export_events(since=args.from_seq))
    finally:
        log.close()
    return 0


def _cmd_import(args: argparse.Namespace) -> int:
    text = Path(args.file).read_text(encoding="utf-8")
    log = EventLog(Path(args.data_dir) / "events.ndjson")
    try:
        appended, skipped = log.import_events(text)
    finally:
        log.close()
    print(f"imported {appended} events ({skipped} already present)")
    return 0


_COMMANDS = {
    "serve": _cmd_serve,
    "report": _cmd_report,
    "simulate": _cmd_simulate,
    "export": _cmd_export,
    "import": _cmd_import,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except AvaildError as exc:
        details = exc.details
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(details, dict):
            for key, value in details.items():
                if key == "problems" and isinstance(value, list):
                    for problem in value:
                        print(f"  - {problem}", file=sys.stderr)
                else:
                    print(f"  {key}: {value}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
