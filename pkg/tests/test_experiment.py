import math
from dataclasses import replace

import numpy as np
import pytest

from burstlab import exact, experiment
from burstlab.builder import solve_junctions
from burstlab.experiment import (
    BurstReport,
    PhaseDecomposition,
    SweepRow,
    SweepTable,
    ChecksFailedError,
    ScenarioError,
    detect_phases,
    rc_from_j,
    run_cb_scenario,
    sweep_rc,
)
from burstlab.harness import CheckReport, HarnessReport, HarnessSettings
from burstlab.noose import CoupledRun, NooseSummary
from burstlab.solver import FlowSeries, exact_series


def _series_with_sup_k(values: list[float], dt: float = 0.25) -> FlowSeries:
    times = [dt * k for k in range(len(values))]
    series = exact_series(exact.cylinder(0.5), np.linspace(0.0, 1.0, 11), times)
    for index, sup_k in enumerate(values):
        series.diagnostics[index] = replace(series.diagnostics[index], sup_k=sup_k)
    return series


def _empty_noose() -> NooseSummary:
    empty = np.empty(0)
    return NooseSummary(0.0, 1.0, None, None, empty, empty, empty, empty)


def _report(r_c: float, peak: float) -> BurstReport:
    return BurstReport(
        params=solve_junctions(r_c, 0.125 / r_c),
        horizon=4.5,
        t1=1.0,
        phases=PhaseDecomposition(
            phases=[], burst_runs=[(1.0, 1.5)], peak_sup_k=peak, peak_time=1.2, recovery_time=None
        ),
        harness=HarnessReport(checks=[], t1=1.0),
        noose=_empty_noose(),
        early_bounded=True,
        recovered=None,
        plane_ceiling_constant=None,
    )


@pytest.mark.parametrize(("j", "r_c"), [(1, 0.1), (2, 0.05), (4, 0.025), (8, 0.0125)])
def test_rc_from_j(j: int, r_c: float) -> None:
    assert rc_from_j(j) == pytest.approx(r_c)


def test_rc_from_j_needs_positive_j() -> None:
    with pytest.raises(ValueError):
        rc_from_j(0)


def test_phases_bounded_burst_recovered() -> None:
    values = [1.0] * 4 + [50.0] * 5 + [5.0] * 12
    series = _series_with_sup_k(values)

    phases = detect_phases(series, 0.1)

    assert phases.names() == ["bounded", "burst", "transition", "recovered"]
    assert phases.burst_interval == (1.0, 2.0)
    assert phases.peak_sup_k == 50.0
    assert phases.peak_time == 1.0
    assert phases.recovery_time == pytest.approx(2.25)
    assert not phases.ambiguous


def test_phases_without_a_burst() -> None:
    phases = detect_phases(_series_with_sup_k([1.0, 2.0, 3.0]), 0.1)

    assert phases.names() == ["bounded"]
    assert phases.burst_interval is None
    assert phases.recovery_time is None


def test_repeated_crossings_are_ambiguous() -> None:
    values = [1.0, 20.0, 1.0, 20.0, 20.0, 20.0, 30.0]

    with pytest.warns(RuntimeWarning):
        phases = detect_phases(_series_with_sup_k(values), 0.1)

    assert phases.ambiguous
    assert phases.burst_interval == (0.75, 1.5)
    assert phases.names()[:2] == ["bounded", "burst"]
    assert phases.phases[1].start == 0.25


def test_sweep_table_fits_the_peak_exponent() -> None:
    rows = [SweepRow(r_c=r, report=_report(r, 0.5 * r**-2)) for r in (0.1, 0.05, 0.025)]
    rows.append(SweepRow(r_c=0.0125, error="ScenarioError: flow incomplete"))
    table = SweepTable(rows)

    assert table.exponent == pytest.approx(2.0)
    assert table.increasing
    assert table.above_floor
    summary = table.to_dict()
    assert summary["rows"][-1]["peakK"] is None  # type: ignore[index]
    assert summary["rows"][-1]["error"].startswith("ScenarioError")  # type: ignore[index]


def test_single_row_has_no_exponent() -> None:
    assert SweepTable([SweepRow(r_c=0.1, report=_report(0.1, 20.0))]).exponent is None


@pytest.mark.parametrize(("r_c", "l_c"), [(0.2, 1.0), (0.05, 1.0)])
def test_scenario_rejects_parameters(r_c: float, l_c: float) -> None:
    with pytest.raises(ValueError):
        run_cb_scenario(r_c, l_c)


@pytest.mark.slow
def test_cb_scenario_bursts() -> None:
    r_c = 0.1
    report = run_cb_scenario(r_c, 0.125 / r_c)

    assert report.t1 > 0.0
    assert report.burst_detected
    assert report.phases.peak_sup_k >= 1.0 / r_c
    assert report.noose.area0 > 0.0
    assert math.isfinite(report.phases.peak_time)


def test_failed_checks_abort_the_scenario(monkeypatch: pytest.MonkeyPatch) -> None:
    failing = HarnessReport(checks=[CheckReport(name="plane_floor", passed=False, samples=4)], t1=None)
    seen: dict[str, HarnessSettings | None] = {}

    def fake_coupled(profile, horizon, **kwargs):
        return CoupledRun(series=_series_with_sup_k([1.0, 2.0]), noose=_empty_noose())

    def fake_checks(series, params, **kwargs):
        seen["settings"] = kwargs["settings"]
        return failing

    monkeypatch.setattr(experiment, "run_coupled", fake_coupled)
    monkeypatch.setattr(experiment, "run_checks", fake_checks)
    settings = HarnessSettings(u_tolerance=0.0)

    with pytest.raises(ChecksFailedError, match="plane_floor") as excinfo:
        run_cb_scenario(0.1, 1.25, 0.25, settings=settings)

    assert excinfo.value.report is failing
    assert seen["settings"] is settings


def test_sweep_passes_settings_to_every_run(monkeypatch: pytest.MonkeyPatch) -> None:
    seen: list[tuple[float, HarnessSettings | None]] = []
    failing = HarnessReport(checks=[CheckReport(name="bol", passed=False, samples=1)], t1=1.0)

    def fake_scenario(r_c, l_c, horizon, config, *, grid, settings, keep_series):
        seen.append((r_c, settings))
        if r_c < 0.05:
            raise ChecksFailedError("harness checks failed: bol", failing)
        if r_c < 0.1:
            raise ScenarioError("flow incomplete: step limit")
        return _report(r_c, r_c**-2)

    monkeypatch.setattr(experiment, "run_cb_scenario", fake_scenario)
    settings = HarnessSettings(seed=7)

    with pytest.warns(RuntimeWarning):
        table = sweep_rc([0.1, 0.05, 0.025], settings=settings)

    assert [r for r, _ in seen] == [0.1, 0.05, 0.025]
    assert all(s is settings for _, s in seen)
    assert table.rows[0].report is not None and table.rows[0].failures == []
    assert table.rows[1].failures == [] and table.rows[1].error == "ScenarioError: flow incomplete: step limit"
    assert [r.name for r in table.rows[2].failures] == ["bol"]
    assert table.rows[2].error == "ChecksFailedError: harness checks failed: bol"


@pytest.mark.slow
def test_cb_scenario_bursts_and_recovers() -> None:
    r_c = 0.05
    report = run_cb_scenario(r_c, 2.5, 4.5)

    assert 0.75 < report.t1 < 2.5
    assert report.t1 >= 1.0 - 4.0 * r_c**2
    assert report.early_bounded
    assert report.burst_in_window
    assert report.phases.peak_sup_k >= 1.0 / r_c
    assert report.phases.names()[:2] == ["bounded", "burst"]
    assert report.recovered
    assert report.harness.passed
    assert report.plane_ceiling_constant is not None and math.isfinite(report.plane_ceiling_constant)

    series = report.series
    assert series is not None
    for index in series.frames_between(4.0, math.inf):
        profile = series.profiles[index]
        assert series.diagnostics[index].sup_k <= 10.0
        assert np.all(profile.u >= -profile.s + report.params.se - 1e-6)
        plane_side = profile.s <= report.params.cylinder_start
        ceiling = -profile.s[plane_side] + report.params.se + report.plane_ceiling_constant
        assert np.all(profile.u[plane_side] <= ceiling + 1e-12)
