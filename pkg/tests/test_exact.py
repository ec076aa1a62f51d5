import math

import numpy as np
import pytest

from burstlab import exact
from burstlab.families import FAMILY_NAMES, load_family


def test_load_family_by_name() -> None:
    for name in FAMILY_NAMES:
        assert load_family(name).name == name


def test_unknown_family_is_an_import_error() -> None:
    with pytest.raises(ImportError):
        load_family("paraboloid")
    with pytest.raises(ValueError):
        exact.BarrierFn("paraboloid")


def test_barrier_round_trips_through_dict() -> None:
    barrier = exact.cusp(-3.0, 15.0)

    assert exact.BarrierFn.from_dict(barrier.to_dict()) == barrier


@pytest.mark.parametrize(
    "barrier",
    [exact.cigar(1.0), exact.cigar(4.0, 1.5, 0.25), exact.sphere(2.0, 0.5), exact.plane(-2.0, 3.0)],
)
def test_flow_families_solve_the_equation(barrier: exact.BarrierFn) -> None:
    residual = exact.is_exact_flow(barrier)
    s = np.linspace(-4.0, 4.0, 17)

    assert np.max(np.abs(residual(0.3, s))) < 1e-10


def test_cusp_is_static_but_not_a_flow() -> None:
    with pytest.raises(exact.DomainError):
        exact.is_exact_flow(exact.cusp(0.0))


def test_cusp_is_undefined_left_of_its_asymptote() -> None:
    with pytest.raises(exact.DomainError):
        exact.evaluate(exact.cusp(1.0), 0.0, 0.5)
    assert float(exact.curvature(exact.cusp(1.0, 15.0), 0.0, 2.0)) == pytest.approx(-1.0 / 225.0)


def test_sphere_extinction() -> None:
    barrier = exact.sphere_barrier(3.0)

    assert exact.extinction_time(barrier) == pytest.approx(1.0)
    assert float(exact.curvature(barrier, 0.5, 3.0)) == pytest.approx(1.0)
    with pytest.raises(exact.DomainError):
        exact.evaluate(barrier, 1.0, 0.0)


def test_sphere_total_area() -> None:
    assert exact.area(exact.sphere(math.sqrt(2.0)), 0.0, -math.inf, math.inf) == pytest.approx(8.0 * math.pi)
    with pytest.raises(exact.DomainError):
        exact.area(exact.cigar(1.0), 0.0, -math.inf, 0.0)


def test_cigar_curvature_peaks_at_the_tip() -> None:
    low, high = exact.curvature_range(exact.cigar(2.0), 0.0, 0.0)

    assert low == pytest.approx(2.0)
    assert high == pytest.approx(4.0)


FLOW_FAMILIES = [
    exact.cigar(1.0),
    exact.cigar(4.0, 1.5, 0.25),
    exact.sphere(2.0, 0.5),
    exact.plane(-2.0, 3.0),
    exact.cylinder(0.5),
]


@pytest.mark.parametrize("barrier", FLOW_FAMILIES, ids=lambda b: b.family)
def test_flow_families_on_random_points(barrier: exact.BarrierFn) -> None:
    rng = np.random.default_rng(20)
    t = rng.uniform(0.0, 0.4, 1000)
    s = rng.uniform(-5.0, 5.0, 1000)

    assert np.max(np.abs(exact.is_exact_flow(barrier)(t, s))) < 1e-12


@pytest.mark.parametrize("lam", [0.125, 0.5, 2.0, 16.0])
def test_cigar_rescaling(lam: float) -> None:
    rng = np.random.default_rng(5)
    t = rng.uniform(0.0, 2.0, 200)
    s = rng.uniform(-20.0, 20.0, 200)
    unit = exact.cigar(1.0)

    scaled = [float(exact.evaluate(exact.cigar(lam), tt, ss)) for tt, ss in zip(t, s)]
    rescaled = [float(exact.evaluate(unit, lam * tt, ss)) - 0.5 * math.log(lam) for tt, ss in zip(t, s)]

    assert np.allclose(scaled, rescaled, rtol=0.0, atol=1e-12)


@pytest.mark.parametrize("lam", [0.25, 1.0, 4.0])
def test_cigar_envelope(lam: float) -> None:
    report = exact.cigar_envelope_checks(lam, np.linspace(-10.0, 10.0, 401))

    assert report.passed
    assert report.samples == 401


def test_cigar_tail_area_dominates_linear_bound() -> None:
    tail = exact.cigar_tail_area(1.0, 0.0, -1.0)

    assert tail.ordered
    assert tail.exact == pytest.approx(math.pi * math.log1p(math.exp(2.0)))
    assert tail.bound == pytest.approx(2.0 * math.pi)
    with pytest.raises(exact.DomainError):
        exact.cigar_tail_area(1.0, 1.0, -1.0)


def test_frozen_sphere_and_cigar_match_the_flow() -> None:
    s = np.linspace(-2.0, 2.0, 9)
    for barrier in (exact.sphere(2.0, 0.5), exact.cigar(0.5, 1.0)):
        frozen = exact.frozen_at(barrier, 1.0)

        assert np.allclose(exact.evaluate(frozen, 0.0, s), exact.evaluate(barrier, 1.0, s))


def test_fit_cap_on_a_plane_slope() -> None:
    cap = exact.fit_cap(2.0, 0.5, -1.0)

    assert cap.family == "plane"
    assert float(exact.evaluate(cap, 0.0, 2.0)) == pytest.approx(0.5)


def test_fit_cap_picks_the_family_closest_to_the_hint() -> None:
    sphere_cap = exact.fit_cap(1.0, 0.0, -0.5, curvature_hint=0.75)
    cigar_cap = exact.fit_cap(1.0, 0.0, -0.5, curvature_hint=0.5)

    assert sphere_cap.family == "sphere"
    assert cigar_cap.family == "cigar"
    for cap in (sphere_cap, cigar_cap):
        assert float(exact.evaluate(cap, 0.0, 1.0)) == pytest.approx(0.0, abs=1e-12)
        assert float(exact.slope(cap, 0.0, 1.0)) == pytest.approx(-0.5)
    assert float(exact.curvature(cigar_cap, 0.0, 1.0)) == pytest.approx(0.5)
    assert float(exact.curvature(sphere_cap, 0.0, 1.0)) == pytest.approx(0.75)


def test_fit_cap_rejects_rising_profiles() -> None:
    with pytest.raises(exact.DomainError):
        exact.fit_cap(0.0, 0.0, 0.1)


@pytest.mark.parametrize("lam", [0.125, 1.0, 16.0])
def test_cigar_envelope_on_a_wide_grid(lam: float) -> None:
    report = exact.cigar_envelope_checks(lam, np.linspace(-50.0, 50.0, 20001))

    assert report.passed
    assert report.samples == 20001
    assert report.worst_margin >= -1e-12
