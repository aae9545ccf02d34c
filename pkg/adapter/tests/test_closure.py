"""End-to-end closure against the evaluation harness, when it is installed.

The serving side of this package is only correct if a real harness run over
the wire protocol scores the echoed gold exactly like the harness's own
in-process oracle endpoint. These tests build a small synthetic world with
the harness CLI, point its runner at ``llm-adapter serve`` as a spawned
agent command, and compare reports. They skip cleanly when the harness
package is not installed; nothing in this package imports it.
"""

import json
import subprocess
import sys

import pytest

pytest.importorskip("tripdiag")

from .conftest import echo_config_path

AGENT = f"{sys.executable} -m llm_adapter serve --config {echo_config_path()}"


def _cli(*args: str, timeout: float = 300.0) -> subprocess.CompletedProcess:
    proc = subprocess.run(
        [sys.executable, "-m", "tripdiag", *args],
        capture_output=True,
        text=True,
        timeout=timeout,
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    base = tmp_path_factory.mktemp("closure")
    world = base / "world"
    _cli("demo-catalog", "--seed", "5", "--out", str(world))
    ds = base / "ds"
    _cli(
        "gen-data",
        "--catalog", str(world / "catalog"),
        "--queries", str(world / "queries.json"),
        "--seed", "5",
        "--out", str(ds),
    )
    return ds


def _run(dataset_dir, out_path, *extra: str) -> dict:
    _cli("run", "--cases", str(dataset_dir), "--agent", AGENT, "--out", str(out_path), *extra)
    return json.loads(out_path.read_text(encoding="utf-8"))


class TestEchoClosure:
    def test_indistinguishable_from_the_in_process_oracle(self, dataset_dir, tmp_path):
        echo = _run(dataset_dir, tmp_path / "echo.json", "--include-gold")
        oracle_out = tmp_path / "oracle.json"
        _cli(
            "run", "--cases", str(dataset_dir), "--agent", "builtin:oracle",
            "--include-gold", "--out", str(oracle_out),
        )
        oracle = json.loads(oracle_out.read_text(encoding="utf-8"))
        assert echo["per_case"] == oracle["per_case"]
        assert echo["aggregates"] == oracle["aggregates"]

    def test_every_case_passes_with_gold_attached(self, dataset_dir, tmp_path):
        report = _run(dataset_dir, tmp_path / "report.json", "--include-gold")
        agg = report["aggregates"]
        assert agg["cases_total"] > 0
        assert agg["pass_rate_overall"] == 1.0
        failing = [row["case_id"] for row in report["per_case"] if not row["pass"]]
        assert failing == []
        assert {row["subtask"] for row in report["per_case"]} == {
            "extraction", "tool_use", "plan_gen", "identification", "correction",
        }

    def test_without_gold_every_case_fails_in_band(self, dataset_dir, tmp_path):
        report = _run(dataset_dir, tmp_path / "nogold.json")
        assert report["aggregates"]["pass_rate_overall"] == 0.0
        assert all(not row["pass"] for row in report["per_case"])

    def test_report_is_deterministic(self, dataset_dir, tmp_path):
        a = _run(dataset_dir, tmp_path / "first.json", "--include-gold")
        b = _run(dataset_dir, tmp_path / "second.json", "--include-gold")
        assert a == b
