import math

import numpy as np
import pytest

from burstlab import grid
from burstlab.builder import (
    PIECE_NAMES,
    CBParams,
    GridSpec,
    build_cb_profile,
    bulb_volume_exact,
    cb_conformal_factor,
    cb_property_report,
    cb_slope,
    junction_residuals,
    piece_index,
    solve_junctions,
)


def test_solve_junctions_matches_cusp_and_sphere() -> None:
    params = solve_junctions(0.05, 2.5)

    value_gap, slope_gap = junction_residuals(params.r_c, params.s2, params.sb)
    assert abs(value_gap) < 1e-12
    assert abs(slope_gap) < 1e-12
    assert params.sb * params.r_c <= 1.75
    assert params.se - params.s0 == pytest.approx(0.5 * math.log1p(0.05**2))
    assert params.cylinder_start == pytest.approx(-50.0)


def test_solve_junctions_closed_form_ends() -> None:
    params = solve_junctions(0.1, 1.25)

    assert params.s0 == pytest.approx(-27.211276, abs=1e-6)
    assert params.se == pytest.approx(-27.206301, abs=1e-6)
    assert params.se == pytest.approx(params.s0 + 0.5 * math.log(1.01), abs=1e-14)
    assert params.s2 < math.atan(10.0) / 0.1


@pytest.mark.parametrize("r_c, l_c", [(1.5, 1.0), (0.0, 1.0), (0.05, 0.0)])
def test_solve_junctions_rejects_bad_parameters(r_c: float, l_c: float) -> None:
    with pytest.raises(ValueError):
        solve_junctions(r_c, l_c)


def test_params_round_trip() -> None:
    params = solve_junctions(0.1, 1.25)

    assert CBParams.from_dict(params.to_dict()) == params


def test_conformal_factor_is_c1_across_junctions() -> None:
    params = solve_junctions(0.1, 1.25)
    points = np.asarray(params.junctions)
    left, right = points - 1e-7, points + 1e-7

    assert np.allclose(cb_conformal_factor(params, left), cb_conformal_factor(params, right), atol=1e-6)
    assert np.allclose(cb_slope(params, left), cb_slope(params, right), atol=1e-5)


def test_piece_index_assigns_closed_cylinder() -> None:
    params = solve_junctions(0.1, 1.25)
    points = [params.s0 - 1.0, params.cylinder_start, -1.0, 0.0, 1.0, params.sb]

    names = [PIECE_NAMES[i] for i in piece_index(params, points)]

    assert names == ["plane", "cylinder", "cylinder", "cylinder", "cusp", "sphere"]


def test_pieces_take_their_closed_forms() -> None:
    params = solve_junctions(0.05, 2.5)

    assert cb_conformal_factor(params, -10.0)[0] == pytest.approx(math.log(0.05))
    assert cb_conformal_factor(params, params.s0 - 2.0)[0] == pytest.approx(-(params.s0 - 2.0) + params.se)
    sphere = -math.log(math.cosh(1.0)) + 0.5 * math.log(2.0)
    assert cb_conformal_factor(params, params.sb + 1.0)[0] == pytest.approx(sphere)


def test_default_profile_passes_construction_checks() -> None:
    params = solve_junctions(0.05, 2.5)
    profile = build_cb_profile(params)

    report = cb_property_report(profile, params)

    assert report.passed, report.failures
    assert profile.cap is not None
    assert set(params.junctions) <= set(profile.s.tolist())
    assert report.spacing_ratio <= grid.MAX_SPACING_RATIO
    assert report.disc_radius == pytest.approx(math.sqrt(1.0 + 0.05**2))
    assert report.k_min == pytest.approx(-1.0, abs=5e-3)
    assert report.k_max == pytest.approx(0.5, abs=5e-3)
    assert params.sb <= report.sb_estimate
    assert 2.0 * math.pi < report.bulb_volume < 10.0 * math.pi
    assert report.bulb_volume == pytest.approx(bulb_volume_exact(params), rel=1e-3)


def test_grid_spec_controls_extent() -> None:
    params = solve_junctions(0.1, 1.25)

    profile = build_cb_profile(params, GridSpec(h=0.1, left_margin=4.0, right_depth=5.0))

    assert profile.s_min == pytest.approx(params.se - 4.0)
    assert profile.s_max == pytest.approx(params.sb + 5.0)
    assert float(np.max(np.diff(profile.s[profile.s >= params.s0]))) <= 0.1 + 1e-12


def test_explicit_grid_gets_junction_nodes() -> None:
    params = solve_junctions(0.1, 1.25)
    nodes = np.linspace(params.s0 - 2.0, params.s2 + 3.0, 2001)

    profile = build_cb_profile(params, nodes)

    assert set(params.junctions) <= set(profile.s.tolist())


def test_explicit_grid_must_cover_junctions() -> None:
    params = solve_junctions(0.1, 1.25)

    with pytest.raises(ValueError):
        build_cb_profile(params, np.linspace(-5.0, 5.0, 11))


@pytest.mark.parametrize("r_c", [1 / 10, 1 / 20, 1 / 40, 1 / 80])
def test_construction_across_radii(r_c: float) -> None:
    params = solve_junctions(r_c, 0.125 / r_c)

    report = cb_property_report(build_cb_profile(params), params)

    assert report.passed, report.failures
    assert params.sb * r_c <= 1.75
    assert report.bulb_volume < 10.0 * math.pi
    assert bulb_volume_exact(params) < 10.0 * math.pi
