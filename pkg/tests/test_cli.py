"""Command line interface tests."""

from __future__ import annotations

import json
import os
import socket
import subprocess
import sys
import time
import urllib.request
from importlib import resources
from pathlib import Path

import pytest

from maple.cli import main

SAMPLE = resources.files("maple.data").joinpath("sample")


@pytest.fixture()
def sample_paths(tmp_path):
    scenario = tmp_path / "scenario.json"
    scenario.write_text(SAMPLE.joinpath("maple_forest.json").read_text("utf-8"))
    script = tmp_path / "script.json"
    script.write_text(SAMPLE.joinpath("script.json").read_text("utf-8"))
    assets = tmp_path / "assets.json"
    assets.write_text(SAMPLE.joinpath("assets.json").read_text("utf-8"))
    return scenario, script, assets


def test_validate_ok(sample_paths, capsys):
    scenario, _, assets = sample_paths
    assert main(["validate", str(scenario), "--assets", str(assets)]) == 0
    out = capsys.readouterr().out
    assert "ok:" in out and "maple_forest" in out


def test_validate_reports_errors(tmp_path, capsys):
    bad = {"schema_version": 1, "id": "x", "title": "t", "target_words": [],
           "initial_state": "ghost", "assets": [], "states": [
               {"kind": "story", "id": "a", "text": "hi",
                "transition": {"duration_ms": 0, "next": None}}]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert main(["validate", str(path)]) == 1
    out = capsys.readouterr().out
    assert "UNKNOWN_INITIAL_STATE" in out
    assert "NONPOSITIVE_DURATION" in out


def test_validate_parse_error_exit(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{nope")
    assert main(["validate", str(path)]) == 1
    assert "parse error" in capsys.readouterr().err


def test_run_writes_deterministic_log(sample_paths, tmp_path):
    scenario, script, assets = sample_paths
    out1 = tmp_path / "one.ndjson"
    out2 = tmp_path / "two.ndjson"
    for out in (out1, out2):
        code = main(["run", str(scenario), "--script", str(script),
                     "--assets", str(assets), "--log", str(out)])
        assert code == 0
    assert out1.read_bytes() == out2.read_bytes()
    first = json.loads(out1.read_text().splitlines()[0])
    assert first["kind"] == "state_entered"


def test_report_text_matches_golden(sample_paths, tmp_path, capsys):
    scenario, script, assets = sample_paths
    log_path = tmp_path / "session.ndjson"
    main(["run", str(scenario), "--script", str(script),
          "--assets", str(assets), "--log", str(log_path)])
    capsys.readouterr()
    assert main(["report", str(log_path), "--scenario", str(scenario)]) == 0
    out = capsys.readouterr().out
    golden = (Path(__file__).parent / "data" / "golden_report.txt").read_text()
    assert out == golden


def test_report_structured_roundtrips(sample_paths, tmp_path, capsys):
    from maple.report import parse_report
    scenario, script, assets = sample_paths
    log_path = tmp_path / "session.ndjson"
    main(["run", str(scenario), "--script", str(script),
          "--assets", str(assets), "--log", str(log_path)])
    capsys.readouterr()
    main(["report", str(log_path), "--scenario", str(scenario),
          "--format", "structured"])
    out = capsys.readouterr().out
    assert parse_report(out).scenario_id == "maple_forest"


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def test_serve_respects_maple_port_env(sample_paths):
    scenario, _, _ = sample_paths
    port = free_port()
    env = dict(os.environ, MAPLE_PORT=str(port))
    proc = subprocess.Popen(
        [sys.executable, "-m", "maple.cli", "serve", "--scenario", str(scenario),
         "--port", "1"],  # env must override this unusable value
        env=env, stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    try:
        deadline = time.time() + 15
        info = None
        while time.time() < deadline:
            try:
                with urllib.request.urlopen(f"http://127.0.0.1:{port}/") as resp:
                    info = json.loads(resp.read())
                break
            except OSError:
                if proc.poll() is not None:
                    raise AssertionError(proc.stderr.read().decode())
                time.sleep(0.2)
        assert info is not None, "service never came up on MAPLE_PORT"
        assert info["scenario"] == "maple_forest"
    finally:
        proc.terminate()
        proc.wait(timeout=10)
