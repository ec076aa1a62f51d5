"""Rotationally symmetric conformal metrics e^{2u}(ds² + dθ²) on a radial grid.

The grid runs from the plane side (small s) to the tip side (large s). Past the
last node the surface may continue as an analytic cap, one of the closed-form
families, which is evaluated at its own t = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from . import exact
from .exact import BarrierFn

CAP_VALUE_TOL = 1e-8
CAP_SLOPE_TOL = 1e-3


class ProfileError(ValueError):
    """Raised for malformed profiles or queries outside the represented domain."""


def _frozen(values: object) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if array.flags.writeable:
        array = array.copy()
        array.flags.writeable = False
    return array


@dataclass(frozen=True, slots=True, eq=False)
class RadialProfile:
    """Conformal factor u sampled on strictly increasing nodes s."""

    s: np.ndarray
    u: np.ndarray
    cap: BarrierFn | None = None

    def __post_init__(self) -> None:
        s = _frozen(self.s)
        u = _frozen(self.u)
        if s.ndim != 1 or s.shape != u.shape:
            raise ProfileError("s and u must be one-dimensional and of equal length")
        if s.size < 3:
            raise ProfileError(f"grid too small: {s.size} node(s), need at least 3")
        if np.any(np.diff(s) <= 0.0):
            raise ProfileError("grid coordinates must be strictly increasing")
        if not np.all(np.isfinite(u)):
            raise ProfileError("conformal factor must be finite at every node")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "u", u)
        if self.cap is not None:
            self._check_cap()

    def _check_cap(self) -> None:
        assert self.cap is not None
        end = float(self.s[-1])
        try:
            cap_value = float(exact.evaluate(self.cap, 0.0, end))
            cap_slope = float(exact.slope(self.cap, 0.0, end))
        except exact.DomainError as exc:
            raise ProfileError(f"tip cap not defined at s_max={end}: {exc}") from exc
        grid_slope = float(np.gradient(self.u[-3:], self.s[-3:], edge_order=2)[-1])
        if abs(cap_value - self.u[-1]) > CAP_VALUE_TOL * max(1.0, abs(cap_value)):
            raise ProfileError(f"tip cap value {cap_value} does not match u(s_max)={self.u[-1]}")
        if abs(cap_slope - grid_slope) > CAP_SLOPE_TOL:
            raise ProfileError(f"tip cap slope {cap_slope} does not match grid slope {grid_slope}")

    @property
    def s_max(self) -> float:
        return float(self.s[-1])

    @property
    def s_min(self) -> float:
        return float(self.s[0])

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.s)

    def __len__(self) -> int:
        return int(self.s.size)

    def truncated(self, count: int, cap: BarrierFn | None) -> RadialProfile:
        """Keep the first `count` nodes and continue with `cap`."""

        return RadialProfile(self.s[:count], self.u[:count], cap)


@dataclass(frozen=True, slots=True)
class GeodesicBall:
    """Coordinate ball {s ≥ coordinate_radius} around the tip."""

    center_side: str
    coordinate_radius: float
    area: float
    boundary_length: float

    def __post_init__(self) -> None:
        if not self.area > 0.0:
            raise ProfileError(f"ball area must be positive, got {self.area}")
        if not self.boundary_length > 0.0:
            raise ProfileError(f"ball boundary must be positive, got {self.boundary_length}")


@dataclass(frozen=True, slots=True, eq=False)
class CurvatureSample:
    """K at every node; `one_sided` marks the lower-accuracy end values."""

    s: np.ndarray
    k: np.ndarray
    one_sided: np.ndarray

    @property
    def interior(self) -> np.ndarray:
        return self.k[~self.one_sided]


def second_derivative(s: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Three-point second difference on a nonuniform grid; ends copy their neighbour."""

    h_left = s[1:-1] - s[:-2]
    h_right = s[2:] - s[1:-1]
    inner = 2.0 * (
        u[:-2] / (h_left * (h_left + h_right))
        - u[1:-1] / (h_left * h_right)
        + u[2:] / (h_right * (h_left + h_right))
    )
    return np.concatenate(([inner[0]], inner, [inner[-1]]))


def slope(profile: RadialProfile) -> np.ndarray:
    """u_s at every node, second order including the ends."""

    return np.gradient(profile.u, profile.s, edge_order=2)


def curvature(profile: RadialProfile) -> CurvatureSample:
    """Gauss curvature K = −e^{−2u} u_ss at every node."""

    if len(profile) < 3:
        raise ProfileError("grid too small for a second difference")
    k = -np.exp(-2.0 * profile.u) * second_derivative(profile.s, profile.u)
    one_sided = np.zeros(k.shape, dtype=bool)
    one_sided[[0, -1]] = True
    return CurvatureSample(profile.s, k, one_sided)


def interpolate(profile: RadialProfile, s: float) -> float:
    """u(s) by linear interpolation; past s_max the cap is evaluated."""

    if s < profile.s_min:
        raise ProfileError(f"s={s} lies left of the grid start {profile.s_min}")
    if s <= profile.s_max:
        return float(np.interp(s, profile.s, profile.u))
    if profile.cap is None:
        raise ProfileError(f"s={s} lies past s_max={profile.s_max} and no tip cap is attached")
    return float(exact.evaluate(profile.cap, 0.0, s))


def _grid_area(profile: RadialProfile, lo: float, hi: float) -> float:
    inside = (profile.s > lo) & (profile.s < hi)
    xs = np.concatenate(([lo], profile.s[inside], [hi]))
    us = np.interp(xs, profile.s, profile.u)
    return 2.0 * math.pi * float(integrate.trapezoid(np.exp(2.0 * us), xs))


def volume(profile: RadialProfile, s_a: float, s_b: float) -> float:
    """Area 2π∫ e^{2u} ds over s_a < s < s_b (s_b may be +∞ when a cap is attached)."""

    if not s_a < s_b:
        raise ProfileError(f"empty range [{s_a}, {s_b}]")
    if s_a < profile.s_min - 1e-12:
        raise ProfileError(f"s_a={s_a} lies left of the grid start {profile.s_min}")
    if s_b > profile.s_max and profile.cap is None:
        raise ProfileError(f"s_b={s_b} lies past s_max={profile.s_max} and no tip cap is attached")
    total = 0.0
    hi = min(s_b, profile.s_max)
    if s_a < hi:
        total += _grid_area(profile, max(s_a, profile.s_min), hi)
    if s_b > profile.s_max:
        assert profile.cap is not None
        total += exact.area(profile.cap, 0.0, max(s_a, profile.s_max), s_b)
    return total


def total_area(profile: RadialProfile) -> float:
    """Area of everything represented: grid plus cap."""

    end = math.inf if profile.cap is not None else profile.s_max
    return volume(profile, profile.s_min, end)


def circle_length(profile: RadialProfile, s: float) -> float:
    """Length 2π e^{u(s)} of the circle at coordinate s."""

    return 2.0 * math.pi * math.exp(interpolate(profile, s))


def width(profile: RadialProfile, s_range: tuple[float, float]) -> float:
    """Longest grid circle with s_range[0] ≤ s ≤ s_range[1]."""

    lo, hi = s_range
    mask = (profile.s >= lo) & (profile.s <= hi)
    if not np.any(mask):
        raise ProfileError(f"no grid nodes in [{lo}, {hi}]")
    return 2.0 * math.pi * float(np.exp(np.max(profile.u[mask])))


def curvature_bounds(profile: RadialProfile, s_from: float | None = None) -> tuple[float, float]:
    """(inf K, sup K) over interior nodes with s ≥ s_from, the cap included."""

    sample = curvature(profile)
    mask = ~sample.one_sided
    if s_from is not None:
        mask &= profile.s >= s_from
    values = list(sample.k[mask])
    if s_from is not None and profile.s_min < s_from < profile.s_max:
        values.append(float(np.interp(s_from, profile.s[1:-1], sample.k[1:-1])))
    if profile.cap is not None:
        low, high = exact.curvature_range(profile.cap, 0.0, profile.s_max)
        values.extend((low, high))
    if not values:
        raise ProfileError("no curvature samples in range")
    return float(min(values)), float(max(values))


def ball_of_area(profile: RadialProfile, target_area: float) -> GeodesicBall:
    """Largest ball {s ≥ ρ} around the tip whose area does not exceed target_area."""

    end = math.inf if profile.cap is not None else profile.s_max
    available = volume(profile, profile.s_min, end)
    if not 0.0 < target_area < available:
        raise ProfileError(f"target area {target_area} outside (0, {available}) on the tip side")

    def excess(x: float) -> float:
        return volume(profile, x, end) - target_area

    cap_share = volume(profile, profile.s_max, end) if profile.cap is not None else 0.0
    if profile.cap is not None and target_area <= cap_share:
        lo, hi = profile.s_max, profile.s_max + 1.0
        while excess(hi) > 0.0:
            lo, hi = hi, hi + 2.0 * (hi - profile.s_max)
        radius = float(optimize.brentq(excess, lo, hi, xtol=1e-12))
    else:
        cells = 2.0 * math.pi * integrate.cumulative_trapezoid(np.exp(2.0 * profile.u), profile.s)
        tails = cap_share + (cells[-1] - np.concatenate(([0.0], cells)))
        index = int(np.searchsorted(-tails, -target_area))
        lo = float(profile.s[max(index - 1, 0)])
        hi = float(profile.s[min(index, len(profile) - 1)])
        if excess(hi) > 0.0:
            radius = hi
        elif excess(lo) < 0.0:
            radius = lo
        else:
            radius = float(optimize.brentq(excess, lo, hi, xtol=1e-12))
    return GeodesicBall(
        center_side="tip",
        coordinate_radius=radius,
        area=volume(profile, radius, end),
        boundary_length=circle_length(profile, radius),
    )
