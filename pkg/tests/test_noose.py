import math

import numpy as np
import pytest

from burstlab import exact
from burstlab.noose import (
    NooseCoupler,
    NooseError,
    enclosed_area,
    noose_velocity,
    run_coupled,
    state_of,
    summary_from_series,
    tracked_circle_growth,
)
from burstlab.profile import RadialProfile
from burstlab.solver import CoverageError, SolverConfig, exact_series


def _sphere_segment() -> RadialProfile:
    s = np.linspace(-3.0, 3.0, 121)
    return RadialProfile(s, np.asarray(exact.evaluate(exact.sphere_barrier(0.0), 0.0, s)))


def test_velocity_points_toward_the_tip(sphere_profile: RadialProfile) -> None:
    assert noose_velocity(sphere_profile, 0.0) == pytest.approx(0.0, abs=1e-12)

    u = float(exact.evaluate(exact.sphere_barrier(0.0), 0.0, 1.0))
    expected = 2.0 * math.exp(-2.0 * u) * math.tanh(1.0)
    assert noose_velocity(sphere_profile, 1.0) == pytest.approx(expected, rel=1e-3)


def test_enclosed_area_and_state(sphere_profile: RadialProfile) -> None:
    assert enclosed_area(sphere_profile, 0.0) == pytest.approx(4.0 * math.pi, rel=1e-4)

    state = state_of(sphere_profile, 0.0)
    assert state.alive
    assert state.length == pytest.approx(2.0 * math.pi * math.sqrt(2.0))


def test_loop_must_start_inside_the_grid(sphere_profile: RadialProfile) -> None:
    with pytest.raises(NooseError):
        NooseCoupler(sphere_profile, 10.0)
    with pytest.raises(NooseError):
        noose_velocity(sphere_profile, -3.0)


def test_area_drops_at_four_pi() -> None:
    profile = _sphere_segment()
    edge = math.tanh(3.0)
    config = SolverConfig(
        right_boundary="neumann", left_slope=edge, right_slope=-edge, trim=False, cadence=0.01
    )

    coupled = run_coupled(profile, 0.1, rho0=0.0, config=config)

    noose = coupled.noose
    assert coupled.series.complete
    assert not noose.extinct
    assert noose.times[0] == 0.0
    assert noose.area0 == pytest.approx(enclosed_area(profile, 0.0))
    assert noose.area_law_deviation() < 0.01
    assert np.allclose(noose.area_rates(), -4.0 * math.pi * edge, rtol=0.02)
    assert np.max(np.abs(noose.rhos)) < 1e-6
    assert coupled.series.diagnostics[-1].noose_area == pytest.approx(noose.areas[-1])
    assert noose.to_dict()["t_emp"] is None


def test_summary_from_series_reads_the_loop_columns() -> None:
    series = exact_series(exact.sphere_barrier(0.0), np.linspace(-3.0, 3.0, 61), [0.0, 0.1, 0.2, 0.3])
    for index in (0, 1):
        state = state_of(series.profiles[index], 0.5)
        series.set_noose(
            index,
            {"noose_rho": state.rho, "noose_len": state.length, "noose_area": state.enclosed_area},
        )

    summary = summary_from_series(series)

    assert summary.rho0 == 0.5
    assert summary.times.tolist() == pytest.approx([0.0, 0.1])
    assert summary.t_emp == pytest.approx(0.2)
    assert summary.extinct


def test_summary_from_series_needs_loop_columns() -> None:
    series = exact_series(exact.sphere_barrier(0.0), np.linspace(-3.0, 3.0, 61), [0.0, 0.1])

    with pytest.raises(CoverageError):
        summary_from_series(series)


def test_tracked_circles_grow_no_faster_than_the_bound() -> None:
    series = exact_series(exact.cigar(1.0), np.linspace(-6.0, 6.0, 121), [0.0, 0.5, 1.0])

    report = tracked_circle_growth(series, 0.0, 1.0)

    assert report.passed
    assert report.bound_ratio == pytest.approx(math.sqrt(3.0))
    with pytest.raises(ValueError):
        tracked_circle_growth(series, 1.0, 0.0)
