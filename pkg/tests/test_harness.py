import math
from dataclasses import replace

import numpy as np
import pytest

from burstlab import exact
from burstlab.builder import solve_junctions
from burstlab.harness import (
    BarrierCheck,
    CoverageError,
    DomainRect,
    HypothesisError,
    T1DetectionError,
    bol_curvature_floor,
    check_area_law,
    check_barrier,
    check_bol,
    check_burst_decay,
    check_chen,
    check_chen_growth,
    check_extinction_time,
    check_noose_length,
    check_pseudolocality,
    detect_t1,
    run_checks,
    sample_balls,
)
from burstlab.noose import NooseSummary
from burstlab.profile import RadialProfile
from burstlab.solver import FlowSeries, exact_series


@pytest.fixture
def sphere_series() -> FlowSeries:
    return exact_series(exact.sphere_barrier(0.0), np.linspace(-3.0, 3.0, 121), [0.0, 0.1, 0.2, 0.3])


def _summary(areas: list[float]) -> NooseSummary:
    times = np.array([0.0, 0.1, 0.2])
    return NooseSummary(
        rho0=0.0,
        area0=areas[0],
        t_emp=None,
        extinct_by=None,
        times=times,
        rhos=np.zeros(3),
        lengths=2.0 * math.pi * np.sqrt(2.0 * (1.0 - 2.0 * times)),
        areas=np.array(areas),
    )


def test_barrier_check_rejects_bad_direction() -> None:
    with pytest.raises(ValueError):
        BarrierCheck("x", exact.plane(0.0), "sideways", (DomainRect(0.0, 1.0),))
    with pytest.raises(ValueError):
        BarrierCheck("x", exact.plane(0.0), "upper", ())


def test_solution_sits_on_its_own_barrier(sphere_series: FlowSeries) -> None:
    check = BarrierCheck("sphere_barrier", exact.sphere_barrier(0.0), "lower", (DomainRect(0.0, 0.3),))

    report = check_barrier(sphere_series, check)

    assert report.passed
    assert report.samples == 4 * 121
    assert report.worst_excess == pytest.approx(0.0, abs=1e-12)


def test_violated_barrier_names_a_witness(sphere_series: FlowSeries) -> None:
    check = BarrierCheck("plane_floor", exact.plane(10.0), "lower", (DomainRect(0.0, 0.3),))

    report = check_barrier(sphere_series, check)

    assert not report.passed
    assert report.worst_t is not None and report.worst_s is not None
    assert "FAILED" in report.witness()
    assert report.to_dict()["passed"] is False


def test_barrier_past_the_horizon(sphere_series: FlowSeries) -> None:
    check = BarrierCheck("plane_floor", exact.plane(0.0), "lower", (DomainRect(0.0, 2.0),))

    with pytest.raises(CoverageError):
        check_barrier(sphere_series, check)


def test_chen_bound_on_positive_and_negative_curvature(sphere_series: FlowSeries) -> None:
    assert check_chen(sphere_series).passed
    assert check_chen_growth(sphere_series).passed

    cusp = exact_series(exact.cusp(0.0, 0.5), np.linspace(1.0, 5.0, 81), [0.0, 0.1])
    report = check_chen(cusp)
    assert not report.passed
    assert report.worst_value == pytest.approx(-4.0, rel=1e-2)


def test_bol_is_sharp_on_the_round_sphere(sphere_profile: RadialProfile) -> None:
    assert bol_curvature_floor(2.0 * math.pi * math.sqrt(2.0), 4.0 * math.pi) == pytest.approx(0.5)

    balls = sample_balls(sphere_profile, 20, seed=3)
    report = check_bol(sphere_profile, balls, tolerance=5e-3)

    assert report.passed
    assert report.details["balls"] == 20


def test_sample_balls_is_seeded(sphere_profile: RadialProfile) -> None:
    first = [b.area for b in sample_balls(sphere_profile, 10, seed=7)]
    second = [b.area for b in sample_balls(sphere_profile, 10, seed=7)]

    assert first == second
    assert first == sorted(first)


def test_area_law_and_loop_length() -> None:
    a0 = 4.0 * math.pi
    following = _summary([a0, a0 - 0.4 * math.pi, a0 - 0.8 * math.pi])
    stuck = _summary([a0, a0, a0])

    assert check_area_law(following).passed
    assert not check_area_law(stuck).passed
    assert check_noose_length(following).passed


def test_t1_needs_the_cylinder_scale(sphere_series: FlowSeries) -> None:
    with pytest.raises(T1DetectionError):
        detect_t1(sphere_series, 0.05)


def test_run_checks_reports_skips_and_failures(sphere_series: FlowSeries) -> None:
    params = solve_junctions(0.05, 2.5)

    report = run_checks(sphere_series, params, names=["chen", "claim_floor", "area_law"])

    assert [r.name for r in report.checks] == ["chen", "claim_floor", "area_law"]
    assert report.t1 is None
    assert report.get("chen").passed  # type: ignore[union-attr]
    area_law = report.get("area_law")
    assert area_law is not None and area_law.skipped == "no coupled loop"
    assert not area_law.passed
    assert "FAILED, no samples" in area_law.witness()
    assert [r.name for r in report.failures] == ["claim_floor", "area_law"]
    assert not report.passed
    assert report.to_dict()["checks"][2]["worst_excess"] is None  # type: ignore[index]


def test_pseudolocality_on_a_flat_cylinder() -> None:
    series = exact_series(exact.cylinder(0.5), np.linspace(0.0, 1.0, 41), [0.0, 0.5, 1.0])

    report = check_pseudolocality(series, (0.2, 0.8), 0.2, 1.0)

    assert report.passed
    assert not report.required
    assert report.details["t_star"] == 1.0
    assert report.details["b_emp"] == pytest.approx(0.04)
    with pytest.raises(HypothesisError):
        check_pseudolocality(series, (0.2, 0.8), 0.2, 100.0)


def test_required_checks_without_samples_fail() -> None:
    series = exact_series(exact.sphere_barrier(0.0), np.linspace(-3.0, 3.0, 61), [0.0, 0.01, 0.02])
    params = solve_junctions(0.1, 1.25)
    names = ["cylinder_cap", "plane_ceiling", "area_law", "noose_length", "width"]

    report = run_checks(series, params, names=names)

    assert all(r.skipped for r in report.checks)
    assert [r.name for r in report.failures] == names
    assert not report.passed
    assert report.to_dict()["passed"] is False


def test_informational_checks_may_skip() -> None:
    series = exact_series(exact.sphere_barrier(0.0), np.linspace(-3.0, 3.0, 61), [0.0, 0.01])
    params = solve_junctions(0.1, 1.25)

    report = run_checks(series, params, names=["chen", "pseudolocality"])

    pseudolocality = report.get("pseudolocality")
    assert pseudolocality is not None and not pseudolocality.required
    assert report.passed


def _series_with_sup_k(values: list[float], dt: float = 0.25) -> FlowSeries:
    series = exact_series(exact.cylinder(0.5), np.linspace(0.0, 1.0, 11), [dt * k for k in range(len(values))])
    for index, sup_k in enumerate(values):
        series.diagnostics[index] = replace(series.diagnostics[index], sup_k=sup_k)
    return series


def test_extinction_time_against_the_enclosed_area() -> None:
    area0 = 4.0 * math.pi
    close = replace(_summary([area0, area0, area0]), t_emp=1.02)
    late = replace(_summary([area0, area0, area0]), t_emp=1.2)
    slow_loop = replace(_summary([10.4 * math.pi] * 3), t_emp=2.6)

    assert check_extinction_time(close).passed
    assert check_extinction_time(close).details["t_pred"] == pytest.approx(1.0)
    assert not check_extinction_time(late).passed
    assert not check_extinction_time(slow_loop).passed
    with pytest.raises(CoverageError):
        check_extinction_time(_summary([area0, area0, area0]))


def test_burst_decay_after_the_last_crossing() -> None:
    decaying = check_burst_decay(_series_with_sup_k([1.0, 20.0, 30.0, 12.0, 8.0, 6.0, 5.0]), 0.1)
    rebounding = check_burst_decay(_series_with_sup_k([1.0, 20.0, 5.0, 8.0, 4.0]), 0.1)

    assert decaying.passed
    assert decaying.samples == 2
    assert decaying.details["from"] == 1.0
    assert not rebounding.passed
    assert rebounding.worst_t == 0.75
    assert rebounding.worst_value == 8.0
    assert check_burst_decay(_series_with_sup_k([1.0, 20.0, 5.0, 8.0, 4.0]), 0.1, t_from=0.75).passed


def test_burst_decay_needs_a_finished_burst() -> None:
    with pytest.raises(CoverageError):
        check_burst_decay(_series_with_sup_k([1.0, 2.0, 3.0]), 0.1)
    with pytest.raises(CoverageError):
        check_burst_decay(_series_with_sup_k([1.0, 20.0]), 0.1)
