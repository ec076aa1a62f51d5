"""Cylinder-with-bulb (CB) initial surfaces.

In logarithmic cylindrical coordinates the CB conformal factor has five pieces:
a flat plane for s ≤ s0, a hyperbolic collar up to −l_c/r_c, a flat cylinder of
radius r_c up to 0, a hyperbolic cusp up to s2 and a round sphere of radius √2
centred at s_b. s0 and s_e are explicit; (s2, s_b) come from the C¹ matching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import optimize

from . import exact, grid
from .profile import RadialProfile, curvature, volume

JUNCTION_TOL = 1e-12
SPHERE_OFFSET = 0.5 * math.log(2.0)
PIECE_NAMES = ("plane", "collar", "cylinder", "cusp", "sphere")
PIECE_CURVATURE = {"plane": 0.0, "collar": -1.0, "cylinder": 0.0, "cusp": -1.0, "sphere": 0.5}


class JunctionSolveError(RuntimeError):
    """Raised when the C¹ matching between cusp and sphere cannot be solved."""


@dataclass(frozen=True, slots=True)
class CBParams:
    r_c: float
    l_c: float
    s0: float
    se: float
    s2: float
    sb: float

    @property
    def cylinder_start(self) -> float:
        return -self.l_c / self.r_c

    @property
    def junctions(self) -> tuple[float, float, float, float]:
        return (self.s0, self.cylinder_start, 0.0, self.s2)

    @property
    def log_rc(self) -> float:
        return math.log(self.r_c)

    def to_dict(self) -> dict[str, float]:
        return {
            "r_c": self.r_c,
            "l_c": self.l_c,
            "s0": self.s0,
            "se": self.se,
            "s2": self.s2,
            "sb": self.sb,
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, object]) -> CBParams:
        return cls(**{key: float(payload[key]) for key in ("r_c", "l_c", "s0", "se", "s2", "sb")})  # type: ignore[arg-type]


def _check_inputs(r_c: float, l_c: float) -> None:
    if not 0.0 < r_c < 1.0:
        raise ValueError(f"r_c must lie in (0, 1), got {r_c}")
    if not l_c > 0.0:
        raise ValueError(f"l_c must be positive, got {l_c}")


def cusp_tangent_point(r_c: float) -> float:
    """s̃2 = r_c^{−1} arctan r_c^{−1}, where the cusp slope reaches 1."""

    return math.atan(1.0 / r_c) / r_c


def junction_residuals(r_c: float, s2: float, sb: float) -> tuple[float, float]:
    """Value and slope mismatch between the cusp and sphere pieces at s2."""

    value = (math.log(r_c) - math.log(math.cos(r_c * s2))) - (
        -_log_cosh(s2 - sb) + SPHERE_OFFSET
    )
    slope_gap = r_c * math.tan(r_c * s2) - math.tanh(sb - s2)
    return value, slope_gap


def _log_cosh(y: float) -> float:
    return float(np.logaddexp(y, -y)) - math.log(2.0)


def solve_junctions(r_c: float, l_c: float) -> CBParams:
    """Closed-form s0, s_e and the bracketed solution of the cusp/sphere matching."""

    _check_inputs(r_c, l_c)
    s0 = -(l_c + math.atan(1.0 / r_c)) / r_c
    se = s0 + 0.5 * math.log1p(r_c**2)

    log_rc = math.log(r_c)

    def mismatch(s2: float) -> float:
        m = r_c * math.tan(r_c * s2)
        return log_rc - math.log(math.cos(r_c * s2)) - 0.5 * math.log1p(-m * m) - SPHERE_OFFSET

    upper = cusp_tangent_point(r_c) * (1.0 - 1e-12)
    lo_value, hi_value = mismatch(0.0), mismatch(upper)
    if not (lo_value < 0.0 < hi_value):
        raise JunctionSolveError(
            f"cusp/sphere matching not bracketed on (0, {upper}): f={lo_value}, {hi_value}"
        )
    s2 = float(optimize.brentq(mismatch, 0.0, upper, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    sb = s2 + math.atanh(r_c * math.tan(r_c * s2))

    value_gap, slope_gap = junction_residuals(r_c, s2, sb)
    if max(abs(value_gap), abs(slope_gap)) > JUNCTION_TOL:
        raise JunctionSolveError(
            f"matching residual too large at s2={s2}: value {value_gap:.3e}, slope {slope_gap:.3e}"
        )
    if sb > 7.0 / (4.0 * r_c):
        raise JunctionSolveError(f"sphere centre s_b={sb} exceeds 7/(4 r_c)={7.0 / (4.0 * r_c)}")
    return CBParams(r_c=r_c, l_c=l_c, s0=s0, se=se, s2=s2, sb=sb)


def piece_index(params: CBParams, s: np.ndarray | float) -> np.ndarray:
    """Index into PIECE_NAMES of the piece each coordinate belongs to."""

    points = np.asarray(s, dtype=float)
    edges = np.array([params.s0, params.cylinder_start, 0.0, params.s2])
    # closed cylinder piece, half-open elsewhere
    index = np.searchsorted(edges, points, side="left")
    index = np.where(points == params.cylinder_start, 2, index)
    return index


def cb_conformal_factor(params: CBParams, s: np.ndarray | float) -> np.ndarray:
    """u_cb(s) assembled from its five pieces."""

    points = np.atleast_1d(np.asarray(s, dtype=float))
    pieces = piece_index(params, points)
    r_c, l_c = params.r_c, params.l_c
    out = np.empty_like(points)
    mask = pieces == 0
    out[mask] = -points[mask] + params.se
    mask = pieces == 1
    out[mask] = params.log_rc - np.log(np.cos(r_c * points[mask] + l_c))
    mask = pieces == 2
    out[mask] = params.log_rc
    mask = pieces == 3
    out[mask] = params.log_rc - np.log(np.cos(r_c * points[mask]))
    mask = pieces == 4
    out[mask] = np.asarray(exact.evaluate(exact.sphere_barrier(params.sb), 0.0, points[mask]))
    return out


def cb_slope(params: CBParams, s: np.ndarray | float) -> np.ndarray:
    """u_cb′(s), taken from the piece that owns s."""

    points = np.atleast_1d(np.asarray(s, dtype=float))
    pieces = piece_index(params, points)
    r_c, l_c = params.r_c, params.l_c
    out = np.zeros_like(points)
    mask = pieces == 0
    out[mask] = -1.0
    mask = pieces == 1
    out[mask] = r_c * np.tan(r_c * points[mask] + l_c)
    mask = pieces == 3
    out[mask] = r_c * np.tan(r_c * points[mask])
    mask = pieces == 4
    out[mask] = -np.tanh(points[mask] - params.sb)
    return out


@dataclass(frozen=True, slots=True)
class GridSpec:
    """Default grading: uniform h from s0 to s_max, graded plane region on the left."""

    h: float = 0.05
    left_margin: float = 10.0
    right_depth: float = 8.0
    ratio: float = 1.1
    h_coarse: float = 1.0


def default_grid(params: CBParams, spec: GridSpec | None = None) -> np.ndarray:
    """Node list from s_e − left_margin to s_b + right_depth with every junction a node."""

    spec = spec or GridSpec()
    s_left = params.se - spec.left_margin
    s_max = params.sb + spec.right_depth
    breaks = [params.s0, params.cylinder_start, 0.0, params.s2, s_max]
    lengths = np.diff(breaks)
    h_eff = min(spec.h, float(np.min(lengths)) / 5.0)
    uniform = [grid.uniform_segment(a, b, h_eff) for a, b in zip(breaks[:-1], breaks[1:])]
    adjacent = float(uniform[0][1] - uniform[0][0])
    plane = grid.graded_segment(
        s_left, params.s0, adjacent, ratio=spec.ratio, h_max=spec.h_coarse, fine_end="stop"
    )
    return grid.join_segments([plane, *uniform])


def build_cb_profile(
    params: CBParams,
    grid_spec: GridSpec | Sequence[float] | np.ndarray | None = None,
) -> RadialProfile:
    """Sample u_cb on the grid and attach the sphere cap beyond the last node."""

    if grid_spec is None or isinstance(grid_spec, GridSpec):
        nodes = default_grid(params, grid_spec)
    else:
        nodes = np.asarray(grid_spec, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("explicit grid must be a one-dimensional node list")
        if nodes[0] > params.s0 or nodes[-1] <= params.s2:
            raise ValueError(
                f"grid [{nodes[0]}, {nodes[-1]}] does not cover the junctions "
                f"[{params.s0}, {params.s2}]"
            )
        nodes = grid.insert_nodes(nodes, params.junctions)
    return RadialProfile(nodes, cb_conformal_factor(params, nodes), exact.sphere_barrier(params.sb))


def bulb_volume_exact(params: CBParams) -> float:
    """Vol U_b in closed form: 2π r_c tan(r_c s2) + 4π(1 + tanh(s_b − s2))."""

    m = params.r_c * math.tan(params.r_c * params.s2)
    return 2.0 * math.pi * m + 4.0 * math.pi * (1.0 + m)


@dataclass(frozen=True, slots=True)
class PropertyReport:
    params: CBParams
    k_min: float
    k_max: float
    piece_errors: dict[str, float]
    bulb_volume: float
    bulb_volume_exact: float
    bulb_volume_estimate: float
    sb_bound: float
    sb_estimate: float
    disc_radius: float
    disc_radius_expected: float
    s0_root: float
    c1_mismatch: float
    spacing_ratio: float
    tolerance: float
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict[str, object]:
        return {
            "params": self.params.to_dict(),
            "k_min": self.k_min,
            "k_max": self.k_max,
            "piece_errors": dict(self.piece_errors),
            "bulb_volume": self.bulb_volume,
            "bulb_volume_exact": self.bulb_volume_exact,
            "bulb_volume_estimate": self.bulb_volume_estimate,
            "sb_bound": self.sb_bound,
            "sb_estimate": self.sb_estimate,
            "disc_radius": self.disc_radius,
            "disc_radius_expected": self.disc_radius_expected,
            "s0_root": self.s0_root,
            "c1_mismatch": self.c1_mismatch,
            "spacing_ratio": self.spacing_ratio,
            "tolerance": self.tolerance,
            "failures": list(self.failures),
            "passed": self.passed,
        }


def _s0_root(params: CBParams) -> float:
    r_c, l_c = params.r_c, params.l_c
    lo = (-0.5 * math.pi + 1e-9 - l_c) / r_c
    hi = params.cylinder_start
    return float(
        optimize.brentq(lambda s: r_c * math.tan(r_c * s + l_c) + 1.0, lo, hi, xtol=1e-14)
    )


def cb_property_report(
    profile: RadialProfile, params: CBParams, *, tolerance: float = 1e-3
) -> PropertyReport:
    """Measure the construction properties on a built profile."""

    sample = curvature(profile)
    pieces = piece_index(params, profile.s)
    on_junction = np.isin(profile.s, params.junctions)
    # stencil within one closed piece: neither the node nor a neighbour past a junction
    clean = ~sample.one_sided & ~on_junction
    clean[1:-1] &= (pieces[:-2] == pieces[1:-1]) | on_junction[:-2]
    clean[1:-1] &= (pieces[2:] == pieces[1:-1]) | on_junction[2:]

    piece_errors: dict[str, float] = {}
    for index, name in enumerate(PIECE_NAMES):
        mask = clean & (pieces == index)
        if np.any(mask):
            errors = np.abs(sample.k[mask] - PIECE_CURVATURE[name])
            piece_errors[name] = float(np.max(errors))
    k_min = float(np.min(sample.k[clean]))
    k_max = float(np.max(sample.k[clean]))
    # three-point K error on the hyperbolic pieces is at most (2r_c² + 6)h²/12
    curved = (profile.s >= params.s0) & (profile.s <= params.s2)
    h_curved = float(np.max(np.diff(profile.s[curved]))) if np.count_nonzero(curved) > 1 else 0.0
    k_allowance = tolerance + (2.0 * params.r_c**2 + 6.0) * h_curved**2 / 12.0

    bulb = volume(profile, 0.0, math.inf)
    tilde_s2 = cusp_tangent_point(params.r_c)
    sb_estimate = tilde_s2 + 0.5 * math.log(8.0 / (1.0 + params.r_c**2))
    volume_estimate = 2.0 * math.pi + 4.0 * math.pi * (1.0 + math.tanh(params.sb - tilde_s2))
    disc_radius = math.exp(-params.s0 + params.se)
    disc_expected = math.sqrt(1.0 + params.r_c**2)
    s0_root = _s0_root(params)
    junctions = np.asarray(params.junctions)
    left = np.nextafter(junctions, -np.inf)
    right = np.nextafter(junctions, np.inf)
    values = np.abs(cb_conformal_factor(params, left) - cb_conformal_factor(params, right))
    slopes = np.abs(cb_slope(params, left) - cb_slope(params, right))
    c1_mismatch = float(max(np.max(values), np.max(slopes)))
    ratio = grid.spacing_ratio(profile.s)

    failures: list[str] = []
    if k_min < -1.0 - k_allowance or k_max > 0.5 + k_allowance:
        failures.append(f"curvature range [{k_min:.6g}, {k_max:.6g}] outside [-1, 1/2]")
    if abs(s0_root - params.s0) > 1e-10:
        failures.append(f"s0 closed form {params.s0!r} differs from root {s0_root!r}")
    if params.sb > 7.0 / (4.0 * params.r_c):
        failures.append(f"s_b={params.sb:.6g} exceeds 7/(4 r_c)")
    if not 2.0 * math.pi < bulb < 10.0 * math.pi:
        failures.append(f"bulb volume {bulb:.6g} outside (2π, 10π)")
    if abs(disc_radius - disc_expected) > 1e-12:
        failures.append(f"disc radius {disc_radius!r} != sqrt(1 + r_c^2)")
    if c1_mismatch > 1e-10:
        failures.append(f"C1 mismatch {c1_mismatch:.3e} at a junction")
    if ratio > grid.MAX_SPACING_RATIO + 1e-9:
        failures.append(f"grid spacing ratio {ratio:.4f} exceeds {grid.MAX_SPACING_RATIO}")

    return PropertyReport(
        params=params,
        k_min=k_min,
        k_max=k_max,
        piece_errors=piece_errors,
        bulb_volume=bulb,
        bulb_volume_exact=bulb_volume_exact(params),
        bulb_volume_estimate=volume_estimate,
        sb_bound=7.0 / (4.0 * params.r_c),
        sb_estimate=sb_estimate,
        disc_radius=disc_radius,
        disc_radius_expected=disc_expected,
        s0_root=s0_root,
        c1_mismatch=c1_mismatch,
        spacing_ratio=ratio,
        tolerance=tolerance,
        failures=failures,
    )
