"""Command line entry points: validate, run, report, serve."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .assets import AssetIndex
from .errors import ParseError
from .report import render_report, summarize
from .logbook import SessionLog
from .scenario import parse_scenario, validate_scenario
from .session import load_script, run_scripted


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="maple",
                                     description="Story/quiz session engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check a scenario file")
    p_validate.add_argument("scenario", type=Path)
    p_validate.add_argument("--assets", type=Path,
                            help="asset index file (defaults to the manifest)")

    p_run = sub.add_parser("run", help="replay a scenario headlessly")
    p_run.add_argument("scenario", type=Path)
    p_run.add_argument("--script", type=Path, help="scripted events JSON")
    p_run.add_argument("--log", type=Path, help="write the session log here")
    p_run.add_argument("--assets", type=Path)

    p_report = sub.add_parser("report", help="summarize a session log")
    p_report.add_argument("log", type=Path)
    p_report.add_argument("--scenario", type=Path, required=True,
                          help="scenario the log was recorded against")
    p_report.add_argument("--format", choices=("text", "structured"),
                          default="text")

    p_serve = sub.add_parser("serve", help="run the websocket console service")
    p_serve.add_argument("--scenario", type=Path, required=True)
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--assets", type=Path)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1


def _load_scenario(path: Path):
    return parse_scenario(path.read_bytes())


def _load_assets(args, scenario) -> AssetIndex:
    if getattr(args, "assets", None):
        return AssetIndex.load(args.assets)
    return scenario.manifest_index()


def _dispatch(args) -> int:
    if args.command == "validate":
        return _cmd_validate(args)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "report":
        return _cmd_report(args)
    if args.command == "serve":
        return _cmd_serve(args)
    raise AssertionError(args.command)


def _cmd_validate(args) -> int:
    scenario = _load_scenario(args.scenario)
    result = validate_scenario(scenario, _load_assets(args, scenario))
    for finding in result.errors:
        where = finding.state_id or "-"
        print(f"error   {finding.code:<28} {where:<14} {finding.message}")
    for finding in result.warnings:
        where = finding.state_id or "-"
        print(f"warning {finding.code:<28} {where:<14} {finding.message}")
    if result.ok:
        print(f"ok: {scenario.id!r} with {len(scenario.states)} states")
        return 0
    return 1


def _cmd_run(args) -> int:
    scenario = _load_scenario(args.scenario)
    assets = _load_assets(args, scenario)
    script = load_script(args.script.read_text(encoding="utf-8")) if args.script else []
    log = run_scripted(scenario, script, assets=assets)
    data = log.serialize()
    if args.log:
        args.log.write_bytes(data)
        print(f"wrote {len(log)} log entries to {args.log}", file=sys.stderr)
    else:
        sys.stdout.buffer.write(data)
    return 0


def _cmd_report(args) -> int:
    scenario = _load_scenario(args.scenario)
    log = SessionLog.parse(args.log.read_bytes())
    summary = summarize(log, scenario)
    sys.stdout.buffer.write(render_report(summary, args.format))
    return 0


def _cmd_serve(args) -> int:
    from .bridge import serve

    scenario = _load_scenario(args.scenario)
    assets = _load_assets(args, scenario)
    port = int(os.environ.get("MAPLE_PORT", args.port))
    try:
        serve(scenario, port=port, host=args.host, assets=assets)
    except (OSError, SystemExit) as exc:
        print(f"serve failed (port {port} in use?): {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
