import json
import warnings
from pathlib import Path

import numpy as np

from burstlab import cli, exact
from burstlab.builder import cb_property_report
from burstlab.experiment import ChecksFailedError, ScenarioError
from burstlab.formats import write_checkpoint
from burstlab.harness import CheckReport, HarnessReport
from burstlab.solver import exact_series


def _collecting_logger(messages: list[str]):
    def fake_build_logger(quiet):
        def _log(msg: str) -> None:
            if not quiet:
                messages.append(msg)

        return _log

    return fake_build_logger


def _sphere_checkpoint(directory: Path) -> Path:
    series = exact_series(exact.sphere_barrier(0.0), np.linspace(-3.0, 3.0, 61), [0.0, 0.1, 0.2])
    return write_checkpoint(directory / "series.chk", series)


def test_log_warning_records_emits_messages() -> None:
    messages: list[str] = []

    class DummyWarning:
        def __init__(self, message: str) -> None:
            self.message = message

    cli._log_warning_records(
        [DummyWarning("t1=2.6 outside the expected window"), DummyWarning("")], messages.append
    )

    assert messages == ["Warning: t1=2.6 outside the expected window"]


def test_progress_logger_format() -> None:
    messages: list[str] = []

    progress = cli._build_progress_logger(messages.append, "Flow phase")
    progress(3, 0.125, 1e-3, False)

    assert messages == ["Flow phase step 3: t=0.125000 dt=1.000e-03 [rejected]"]


def test_main_list_checks_outputs_csv(capsys) -> None:
    exit_code = cli.main(["--list-checks", "csv"])

    captured = capsys.readouterr()
    assert exit_code == 0
    assert captured.out.splitlines()[0] == "name,full_name,needs,required,documentation"


def test_main_list_checks_outputs_json(capsys) -> None:
    exit_code = cli.main(["--list-checks"])

    payload = json.loads(capsys.readouterr().out)
    assert exit_code == 0
    assert payload[0]["name"] == "curvature_envelope"


def test_build_writes_profile_and_reports(tmp_path: Path, monkeypatch) -> None:
    messages: list[str] = []
    monkeypatch.setattr(cli, "_build_logger", _collecting_logger(messages))

    def warn_report(profile, params):
        warnings.warn("Build warning")
        return cb_property_report(profile, params)

    monkeypatch.setattr(cli, "cb_property_report", warn_report)
    out = tmp_path / "build"

    exit_code = cli.main(["build", "--out", str(out)])

    assert exit_code == 0
    for name in ("profile.txt", "params.json", "properties.json", "doit"):
        assert (out / name).exists()
    assert json.loads((out / "params.json").read_text(encoding="utf-8"))["r_c"] == 0.05
    assert "Warning: Build warning" in messages
    assert not (out / "failures.log").exists()


def test_quiet_suppresses_output(tmp_path: Path, monkeypatch) -> None:
    messages: list[str] = []
    monkeypatch.setattr(cli, "_build_logger", _collecting_logger(messages))

    cli.main(["build", "--quiet", "--out", str(tmp_path / "q")])

    assert messages == []


def test_oracle_flow_writes_error(tmp_path: Path) -> None:
    out = tmp_path / "oracle"

    exit_code = cli.main(
        ["flow", "--oracle", "cigar", "--h", "0.1", "--t-end", "0.05", "--quiet", "--out", str(out)]
    )

    assert exit_code == 0
    payload = json.loads((out / "oracle.json").read_text(encoding="utf-8"))
    assert payload["error"] < 2e-2
    assert (out / "series.chk").exists()
    assert (out / "diagnostics.csv").exists()


def test_verify_passes_on_a_stored_series(tmp_path: Path) -> None:
    series = _sphere_checkpoint(tmp_path)
    out = tmp_path / "verify"

    exit_code = cli.main(["verify", "--series", str(series), "--checks", "chen", "-q", "--out", str(out)])

    assert exit_code == 0
    payload = json.loads((out / "verify.json").read_text(encoding="utf-8"))
    assert payload["passed"] is True
    assert [c["name"] for c in payload["checks"]] == ["chen"]


def test_verify_reports_a_failed_check(tmp_path: Path) -> None:
    series = _sphere_checkpoint(tmp_path)
    out = tmp_path / "verify"

    exit_code = cli.main(
        ["verify", "--series", str(series), "--checks", "claim_floor", "-q", "--out", str(out)]
    )

    assert exit_code == 1
    log = (out / "failures.log").read_text(encoding="utf-8")
    assert "ERROR verify -> claim_floor" in log


def test_verify_missing_series_is_a_usage_error(tmp_path: Path) -> None:
    out = tmp_path / "verify"

    exit_code = cli.main(["verify", "--series", str(tmp_path / "none.chk"), "-q", "--out", str(out)])

    assert exit_code == 2
    assert (out / "failures.log").exists()


def test_report_with_failed_checks_exits_with_check_code(tmp_path: Path, monkeypatch) -> None:
    failing = HarnessReport(checks=[CheckReport(name="plane_floor", passed=False, samples=3)], t1=None)

    def fake_scenario(*args, **kwargs):
        raise ChecksFailedError("harness checks failed: plane_floor", failing)

    monkeypatch.setattr(cli, "run_cb_scenario", fake_scenario)
    out = tmp_path / "report"

    exit_code = cli.main(["report", "-q", "--out", str(out)])

    assert exit_code == 1
    assert "ERROR report -> plane_floor: FAILED" in (out / "failures.log").read_text(encoding="utf-8")
    assert json.loads((out / "verify.json").read_text(encoding="utf-8"))["passed"] is False


def test_report_with_an_incomplete_flow_exits_with_solver_code(tmp_path: Path, monkeypatch) -> None:
    def fake_scenario(*args, **kwargs):
        raise ScenarioError("flow incomplete: step limit")

    monkeypatch.setattr(cli, "run_cb_scenario", fake_scenario)
    out = tmp_path / "report"

    assert cli.main(["report", "-q", "--out", str(out)]) == 3
    assert "ERROR report -> flow incomplete" in (out / "failures.log").read_text(encoding="utf-8")
