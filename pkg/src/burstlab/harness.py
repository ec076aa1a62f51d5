"""Nodewise verification of barriers and a priori estimates against a FlowSeries.

Every check scans recorded frames only. A sample violates a check when its
excess over the bound is larger than the local tolerance, which is the base
tolerance plus a discretization allowance proportional to h²|u_ss| at the node.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import exact
from .builder import CBParams
from .checks import find_check, list_checks
from .exact import BarrierFn
from .noose import NooseSummary
from .profile import (
    GeodesicBall,
    ProfileError,
    RadialProfile,
    ball_of_area,
    curvature,
    curvature_bounds,
    interpolate,
    second_derivative,
    volume,
)
from .solver import CoverageError, FlowSeries, curvature_upper_envelope

__all__ = [
    "BarrierCheck",
    "CheckReport",
    "CoverageError",
    "DomainRect",
    "HarnessReport",
    "HarnessSettings",
    "HypothesisError",
    "T1DetectionError",
    "barrier_checks",
    "bol_curvature_floor",
    "check_barrier",
    "check_bol",
    "check_burst_decay",
    "check_claim_floor",
    "check_cusp_domination",
    "check_extinction_time",
    "check_pseudolocality",
    "detect_t1",
    "run_checks",
    "sample_balls",
]

logger = logging.getLogger("burstlab.harness")

T1_WINDOW = (0.75, 2.5)
CUSP_NECK_CONSTANT = 15.0
CUSP_LATE_CONSTANT = 16.0
CUSP_LATE_TIME = 3.5
PLANE_CEILING_TIME = 3.75


class T1DetectionError(RuntimeError):
    """Raised when the maximum of u on the cylinder side never drops to the cylinder scale."""


class HypothesisError(ValueError):
    """Raised when the initial data does not satisfy a check's hypotheses."""


@dataclass(frozen=True, slots=True)
class DomainRect:
    """t_lo ≤ t ≤ t_hi and s_lo ≤ s ≤ s_hi; t_lo == t_hi selects the nearest frame."""

    t_lo: float
    t_hi: float
    s_lo: float = -math.inf
    s_hi: float = math.inf


@dataclass(frozen=True, slots=True)
class BarrierCheck:
    name: str
    barrier: BarrierFn
    direction: str
    domain: tuple[DomainRect, ...]
    tolerance: float = 1e-6
    activation: float | None = None
    discretization: float = 5.0

    def __post_init__(self) -> None:
        if self.direction not in ("upper", "lower"):
            raise ValueError(f"direction must be 'upper' or 'lower', got '{self.direction}'")
        if not self.domain:
            raise ValueError(f"{self.name}: empty check domain")


def _finite(value: float | None) -> float | None:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


@dataclass(frozen=True, slots=True)
class CheckReport:
    """Outcome of one check; passed iff worst_excess ≤ tolerance at the witness."""

    name: str
    passed: bool
    samples: int
    worst_excess: float = -math.inf
    worst_t: float | None = None
    worst_s: float | None = None
    worst_value: float | None = None
    worst_bound: float | None = None
    tolerance: float = 0.0
    required: bool = True
    skipped: str | None = None
    details: Mapping[str, object] = field(default_factory=dict)

    def witness(self) -> str:
        if self.skipped:
            if self.required:
                return f"{self.name}: FAILED, no samples ({self.skipped})"
            return f"{self.name}: skipped ({self.skipped})"
        status = "ok" if self.passed else "FAILED"
        return (
            f"{self.name}: {status} t={self.worst_t} s={self.worst_s} "
            f"value={self.worst_value} bound={self.worst_bound} "
            f"excess={self.worst_excess:.3e} tol={self.tolerance:.3e}"
        )

    def to_dict(self) -> dict[str, object]:
        return {
            "name": self.name,
            "passed": self.passed,
            "required": self.required,
            "skipped": self.skipped,
            "samples": self.samples,
            "worst_excess": _finite(self.worst_excess),
            "worst_t": _finite(self.worst_t),
            "worst_s": _finite(self.worst_s),
            "worst_value": _finite(self.worst_value),
            "worst_bound": _finite(self.worst_bound),
            "tolerance": self.tolerance,
            "details": {
                key: _finite(value) if isinstance(value, float) else value
                for key, value in self.details.items()
            },
        }


class _Worst:
    """Running witness of the largest excess over the local tolerance."""

    def __init__(self) -> None:
        self.samples = 0
        self.margin = -math.inf
        self.excess = -math.inf
        self.t: float | None = None
        self.s: float | None = None
        self.value: float | None = None
        self.bound: float | None = None
        self.tolerance = 0.0

    def update(
        self,
        t: float,
        s: np.ndarray,
        values: np.ndarray,
        bounds: np.ndarray,
        tolerance: np.ndarray | float,
        direction: str,
    ) -> None:
        if values.size == 0:
            return
        excess = values - bounds if direction == "upper" else bounds - values
        local = np.broadcast_to(np.asarray(tolerance, dtype=float), excess.shape)
        margin = excess - local
        index = int(np.argmax(margin))
        self.samples += int(values.size)
        if margin[index] > self.margin:
            self.margin = float(margin[index])
            self.excess = float(excess[index])
            self.t = float(t)
            self.s = float(s[index])
            self.value = float(values[index])
            self.bound = float(bounds[index])
            self.tolerance = float(local[index])

    def report(self, name: str, **details: object) -> CheckReport:
        if self.samples == 0:
            raise CoverageError(f"{name}: no samples in the check domain")
        rule = find_check(name)
        return CheckReport(
            name=name,
            passed=self.margin <= 0.0,
            samples=self.samples,
            worst_excess=self.excess,
            worst_t=self.t,
            worst_s=self.s,
            worst_value=self.value,
            worst_bound=self.bound,
            tolerance=self.tolerance,
            required=rule.required if rule else True,
            details=details,
        )


def _allowance(profile: RadialProfile, base: float, factor: float) -> np.ndarray:
    """base + factor·h²|u_ss| with h the larger neighbouring spacing."""

    h = np.diff(profile.s)
    local_h = np.maximum(np.concatenate(([h[0]], h)), np.concatenate((h, [h[-1]])))
    return base + factor * local_h**2 * np.abs(second_derivative(profile.s, profile.u))


def _frames(series: FlowSeries, rect: DomainRect, activation: float | None) -> list[int]:
    if rect.t_lo == rect.t_hi:
        indices = [series.frame_index(rect.t_lo)]
    else:
        if math.isfinite(rect.t_hi) and rect.t_hi > series.horizon + 0.5 * series.cadence:
            raise CoverageError(f"series ends at {series.horizon}, check needs t up to {rect.t_hi}")
        indices = series.frames_between(rect.t_lo, rect.t_hi)
    if activation is not None:
        indices = [i for i in indices if series.times[i] >= activation - 1e-12]
    return indices


def check_barrier(series: FlowSeries, check: BarrierCheck) -> CheckReport:
    """Compare the barrier with u at every recorded (t, node) inside the check domain."""

    worst = _Worst()
    for rect in check.domain:
        for index in _frames(series, rect, check.activation):
            t = series.times[index]
            profile = series.profiles[index]
            mask = (profile.s >= rect.s_lo) & (profile.s <= rect.s_hi)
            mask &= exact.in_domain(check.barrier, t, profile.s)
            if not np.any(mask):
                continue
            bounds = np.asarray(exact.evaluate(check.barrier, t, profile.s[mask]))
            tolerance = _allowance(profile, check.tolerance, check.discretization)[mask]
            worst.update(t, profile.s[mask], profile.u[mask], bounds, tolerance, check.direction)
    return worst.report(check.name, barrier=check.barrier.family, direction=check.direction)


def detect_t1(
    series: FlowSeries,
    r_c: float,
    *,
    s_from: float | None = None,
    window: tuple[float, float] = T1_WINDOW,
) -> float:
    """First recorded t > 0 with max_{s ≥ s_from} u(t, s) ≤ log r_c + ½log 8."""

    level = math.log(r_c) + 0.5 * math.log(8.0)
    for t, profile in zip(series.times, series.profiles):
        if t <= 0.0 or t > window[1] + 1e-12:
            continue
        mask = profile.s >= (profile.s_min if s_from is None else s_from)
        if np.any(mask) and float(np.max(profile.u[mask])) <= level:
            if not window[0] < t < window[1]:
                warnings.warn(f"t1={t:.6g} outside the expected window {window}", RuntimeWarning, stacklevel=2)
            logger.debug("t1 detected at %.6f", t)
            return float(t)
    raise T1DetectionError(
        f"max u never dropped to log r_c + ½log 8 = {level:.6g} on (0, {window[1]}]"
        f" (series ends at {series.horizon})"
    )


def check_claim_floor(
    series: FlowSeries, t1: float, r_c: float, *, s_from: float | None = None, tolerance: float = 1e-6
) -> CheckReport:
    """Two-piece floor at t₁: log r_c left of s₁, s₁ − s + log r_c to the right."""

    index = series.frame_index(t1)
    profile = series.profiles[index]
    start = profile.s_min if s_from is None else s_from
    candidates = np.nonzero(profile.s >= start)[0]
    if candidates.size == 0:
        raise CoverageError(f"no nodes at s ≥ {start}")
    s1 = float(profile.s[candidates[int(np.argmax(profile.u[candidates]))]])
    floor = math.log(r_c) + np.where(profile.s <= s1, 0.0, s1 - profile.s)
    worst = _Worst()
    worst.update(series.times[index], profile.s, profile.u, floor, tolerance, "lower")
    return worst.report("claim_floor", s1=s1)


def _merge(name: str, reports: Sequence[CheckReport]) -> CheckReport:
    failing = [r for r in reports if not r.passed]
    chosen = failing[0] if failing else max(reports, key=lambda r: r.worst_excess - r.tolerance)
    return CheckReport(
        name=name,
        passed=not failing,
        samples=sum(r.samples for r in reports),
        worst_excess=chosen.worst_excess,
        worst_t=chosen.worst_t,
        worst_s=chosen.worst_s,
        worst_value=chosen.worst_value,
        worst_bound=chosen.worst_bound,
        tolerance=chosen.tolerance,
        required=chosen.required,
        details={**chosen.details, "parts": len(reports)},
    )


def check_cusp_domination(
    series: FlowSeries,
    params: CBParams,
    t1: float,
    *,
    evaluations: Sequence[tuple[float, float]] | None = None,
    tolerance: float = 1e-6,
) -> CheckReport:
    """u(t, s) ≤ −log(s − s_e) + log C at each (t, C) of evaluations, s > s_e."""

    if evaluations is None:
        evaluations = ((t1 + 1.0, CUSP_NECK_CONSTANT), (CUSP_LATE_TIME, CUSP_LATE_CONSTANT))
    reports = []
    for t_eval, constant in evaluations:
        check = BarrierCheck(
            name="cusp_domination",
            barrier=exact.cusp(params.se, constant),
            direction="upper",
            domain=(DomainRect(t_eval, t_eval),),
            tolerance=tolerance,
        )
        reports.append(check_barrier(series, check))
    return _merge("cusp_domination", reports)


def check_cusp_envelope(
    series: FlowSeries, params: CBParams, t1: float, *, tolerance: float = 1e-6, discretization: float = 5.0
) -> CheckReport:
    """u(t, s) ≤ −log(s − s_e) + ½log(2(t − t₁) + 225) for recorded t ≥ t₁ + 1."""

    worst = _Worst()
    for index in series.frames_between(t1 + 1.0, math.inf):
        t = series.times[index]
        profile = series.profiles[index]
        barrier = exact.cusp(params.se, math.sqrt(2.0 * (t - t1) + 225.0))
        mask = exact.in_domain(barrier, t, profile.s)
        bounds = np.asarray(exact.evaluate(barrier, t, profile.s[mask]))
        local = _allowance(profile, tolerance, discretization)[mask]
        worst.update(t, profile.s[mask], profile.u[mask], bounds, local, "upper")
    return worst.report("cusp_envelope")


def check_cylinder_cap(series: FlowSeries, params: CBParams, *, tolerance: float = 1e-6) -> CheckReport:
    """u(t, −l_c/r_c) ≤ log r_c + ½log(2t + 1) at every recorded t."""

    worst = _Worst()
    point = np.array([params.cylinder_start])
    for t, profile in zip(series.times, series.profiles):
        if not profile.s_min <= params.cylinder_start <= profile.s_max:
            continue
        value = np.array([interpolate(profile, params.cylinder_start)])
        bound = np.array([params.log_rc + 0.5 * math.log(2.0 * t + 1.0)])
        worst.update(t, point, value, bound, tolerance, "upper")
    return worst.report("cylinder_cap")


def check_chen(
    series: FlowSeries, *, tolerance: float = 1e-3, discretization: float = 5.0
) -> CheckReport:
    """K ≥ −1/(2t + 1) at interior nodes; the allowance scales with h²|K|."""

    worst = _Worst()
    for t, profile in zip(series.times, series.profiles):
        sample = curvature(profile)
        interior = ~sample.one_sided
        h = np.diff(profile.s)
        local_h = np.maximum(h[:-1], h[1:])
        k = sample.k[interior]
        bound = np.full(k.shape, -1.0 / (2.0 * t + 1.0))
        local = tolerance + discretization * local_h**2 * np.abs(k)
        worst.update(t, profile.s[interior], k, bound, local, "lower")
    return worst.report("chen")


def _running_min_check(
    name: str,
    times: Sequence[float],
    columns: Iterable[tuple[np.ndarray, np.ndarray, np.ndarray]],
) -> CheckReport:
    """v(t₂) ≤ min_{t₁<t₂} v(t₁) + tol nodewise, columns aligned on a shrinking prefix."""

    worst = _Worst()
    running: np.ndarray | None = None
    for t, (s, v, tolerance) in zip(times, columns):
        if running is not None:
            count = min(running.size, v.size)
            worst.update(t, s[:count], v[:count], running[:count], tolerance[:count], "upper")
            running = np.minimum(running[:count], v[:count])
        else:
            running = v.copy()
    return worst.report(name)


def check_chen_growth(
    series: FlowSeries, *, tolerance: float = 1e-4, discretization: float = 5.0
) -> CheckReport:
    """u(t₂) − u(t₁) ≤ ½log((2t₂+1)/(2t₁+1)) for every recorded pair, nodewise."""

    columns = (
        (p.s, p.u - 0.5 * math.log(2.0 * t + 1.0), _allowance(p, tolerance, discretization))
        for t, p in zip(series.times, series.profiles)
    )
    return _running_min_check("chen_growth", series.times, columns)


def check_curvature_envelope(
    series: FlowSeries, *, tolerance: float = 1e-2, t_limit: float = 0.9
) -> CheckReport:
    curve = curvature_upper_envelope(series, tolerance=tolerance, t_limit=t_limit)
    worst = _Worst()
    alive = curve.times <= t_limit + 1e-12
    for t, k, b in zip(curve.times[alive], curve.sup_k[alive], curve.bound[alive]):
        worst.update(t, np.array([math.nan]), np.array([k]), np.array([b]), tolerance, "upper")
    return worst.report("curvature_envelope", violations=len(curve.violations))


def check_burst_area_window(
    series: FlowSeries, params: CBParams, t1: float, *, tolerance: float = 1e-6
) -> CheckReport:
    """Area of s ≥ −l_c/r_c stays ≥ 2πr_c on [t₁, t₁ + r_c(l_c − 1)/2]."""

    t_end = t1 + 0.5 * params.r_c * (params.l_c - 1.0)
    floor = 2.0 * math.pi * params.r_c
    worst = _Worst()
    indices = series.frames_between(t1, t_end) or [series.frame_index(t1)]
    for index in indices:
        profile = series.profiles[index]
        end = math.inf if profile.cap is not None else profile.s_max
        area = volume(profile, max(params.cylinder_start, profile.s_min), end)
        worst.update(
            series.times[index], np.array([params.cylinder_start]), np.array([area]),
            np.array([floor]), tolerance * floor, "lower",
        )
    return worst.report("burst_area_window", window_end=t_end)


def bol_curvature_floor(length: float, area: float) -> float:
    """Lower bound 4π/A − L²/A² on sup K implied by Bol's inequality."""

    return 4.0 * math.pi / area - length**2 / area**2


def check_bol(
    profile: RadialProfile,
    balls: Sequence[GeodesicBall],
    *,
    t: float = 0.0,
    tolerance: float = 1e-6,
) -> CheckReport:
    """L² ≥ 4πA − A² sup_Ω K for each tip ball, tolerance relative to max(L², 4πA)."""

    worst = _Worst()
    for ball in balls:
        _, sup_k = curvature_bounds(profile, s_from=ball.coordinate_radius)
        length_sq = ball.boundary_length**2
        rhs = 4.0 * math.pi * ball.area - ball.area**2 * sup_k
        scale = max(length_sq, 4.0 * math.pi * ball.area)
        worst.update(
            t, np.array([ball.coordinate_radius]), np.array([length_sq]),
            np.array([rhs]), tolerance * scale, "lower",
        )
    return worst.report("bol", balls=len(balls))


def sample_balls(
    profile: RadialProfile, count: int = 100, *, seed: int = 0, max_fraction: float = 0.5
) -> list[GeodesicBall]:
    """count tip balls with areas drawn uniformly from (0, max_fraction·tip-side area)."""

    end = math.inf if profile.cap is not None else profile.s_max
    available = volume(profile, profile.s_min, end)
    rng = np.random.default_rng(seed)
    areas = rng.uniform(1e-3 * available, max_fraction * available, size=count)
    return [ball_of_area(profile, float(a)) for a in np.sort(areas)]


def check_pseudolocality(
    series: FlowSeries, region: tuple[float, float], r0: float, v0: float
) -> CheckReport:
    """Largest t* with |K| ≤ 2r₀^{−2} on the middle half of region; B_emp = r₀²/t*."""

    lo, hi = region
    first = series.profiles[0]
    mask = (first.s >= lo) & (first.s <= hi)
    if not np.any(mask):
        raise CoverageError(f"no nodes in region {region}")
    k0 = np.abs(curvature(first).k[mask])
    area = volume(first, lo, hi)
    if float(np.max(k0)) > r0**-2 or area < v0 * r0**2:
        raise HypothesisError(
            f"region {region}: max|K(0)|={float(np.max(k0)):.4g} vs {r0**-2:.4g}, "
            f"area {area:.4g} vs {v0 * r0**2:.4g}"
        )
    quarter = 0.25 * (hi - lo)
    inner = (lo + quarter, hi - quarter)
    limit = 2.0 * r0**-2
    t_star = series.times[0]
    worst = _Worst()
    for t, profile in zip(series.times, series.profiles):
        sample = curvature(profile)
        inside = (profile.s >= inner[0]) & (profile.s <= inner[1]) & ~sample.one_sided
        if not np.any(inside):
            raise CoverageError(f"frame at t={t} no longer covers {inner}")
        magnitude = np.abs(sample.k[inside])
        worst.update(t, profile.s[inside], magnitude, np.full(magnitude.shape, limit), 0.0, "upper")
        if float(np.max(magnitude)) > limit:
            break
        t_star = t
    whole = t_star >= series.horizon
    b_emp = r0**2 / t_star if t_star > 0.0 else math.inf
    report = worst.report("pseudolocality", t_star=t_star, b_emp=b_emp, whole_horizon=whole, r0=r0)
    return CheckReport(
        name=report.name,
        passed=t_star > 0.0,
        samples=report.samples,
        worst_excess=report.worst_excess,
        worst_t=report.worst_t,
        worst_s=report.worst_s,
        worst_value=report.worst_value,
        worst_bound=report.worst_bound,
        tolerance=report.tolerance,
        required=False,
        details=report.details,
    )


def check_area_law(noose: NooseSummary, *, tolerance: float = 0.01) -> CheckReport:
    """|A(t) − (A(0) − 4πt)| ≤ tolerance·A(0) on the recorded frames."""

    worst = _Worst()
    predicted = noose.area0 - 4.0 * math.pi * noose.times
    for t, rho, area, bound in zip(noose.times, noose.rhos, noose.areas, predicted):
        worst.update(t, np.array([rho]), np.array([abs(area - bound)]), np.array([0.0]), tolerance * noose.area0, "upper")
    return worst.report("area_law", t_pred=noose.t_pred, t_emp=noose.t_emp)


def check_extinction_time(
    noose: NooseSummary, *, tolerance: float = 0.05, t_limit: float = 2.5
) -> CheckReport:
    """|T − A(0)/4π| ≤ tolerance·T and T ≤ t_limit for the measured extinction time T."""

    if noose.t_emp is None:
        raise CoverageError("loop did not go extinct")
    t = noose.t_emp
    rho = np.array([noose.rhos[-1] if noose.rhos.size else noose.rho0])
    worst = _Worst()
    worst.update(t, rho, np.array([abs(t - noose.t_pred)]), np.array([0.0]), tolerance * t, "upper")
    worst.update(t, rho, np.array([t]), np.array([t_limit]), 0.0, "upper")
    return worst.report("extinction_time", t_pred=noose.t_pred, t_emp=t)


def check_burst_decay(
    series: FlowSeries,
    r_c: float,
    *,
    tolerance: float = 0.01,
    level: float | None = None,
    t_from: float = 0.0,
) -> CheckReport:
    """sup K(t₂) ≤ min_{t₁<t₂} sup K(t₁) up to a relative tolerance.

    Only frames after the last run above level and at or after t_from count.
    """

    level = 1.0 / r_c if level is None else level
    sup_k = np.array([d.sup_k for d in series.diagnostics])
    above = np.nonzero(sup_k >= level)[0]
    if above.size == 0:
        raise CoverageError(f"sup K never reaches {level:.4g}")
    first = int(above[-1]) + 1
    first = max(first, next((i for i, t in enumerate(series.times) if t >= t_from - 1e-12), len(series)))
    if first >= len(series):
        raise CoverageError(f"no frames after the burst and t >= {t_from:g}")
    frames = range(first, len(series))
    columns = []
    for index in frames:
        sample = curvature(series.profiles[index])
        value = float(sup_k[index])
        columns.append(
            (
                np.array([sample.s[int(np.argmax(sample.k))]]),
                np.array([value]),
                np.array([tolerance * max(abs(value), 1.0)]),
            )
        )
    report = _running_min_check("burst_decay", [series.times[i] for i in frames], columns)
    return replace(report, details={"level": level, "from": series.times[first]})


def check_noose_length(noose: NooseSummary, *, tolerance: float = 1e-3) -> CheckReport:
    """L(t₂) ≤ √((2t₂+1)/(2t₁+1))·L(t₁) along the loop, compared in log form."""

    columns = (
        (np.array([rho]), np.array([math.log(length) - 0.5 * math.log(2.0 * t + 1.0)]), np.array([tolerance]))
        for t, rho, length in zip(noose.times, noose.rhos, noose.lengths)
    )
    return _running_min_check("noose_length", list(noose.times), columns)


def check_width(
    series: FlowSeries, noose: NooseSummary, params: CBParams, *, tolerance: float = 1e-3
) -> CheckReport:
    """u(T, s) ≤ log r_c + ½log(2T + 1) for s ≥ −l_c/r_c at the extinction time T."""

    if noose.t_emp is None:
        raise CoverageError("loop did not go extinct")
    index = series.frame_index(noose.t_emp)
    profile = series.profiles[index]
    mask = profile.s >= params.cylinder_start
    bound = np.full(int(np.sum(mask)), params.log_rc + 0.5 * math.log(2.0 * noose.t_emp + 1.0))
    worst = _Worst()
    worst.update(series.times[index], profile.s[mask], profile.u[mask], bound, tolerance, "upper")
    return worst.report("width", t_emp=noose.t_emp)


def barrier_checks(
    params: CBParams, horizon: float, t1: float | None = None, *, tolerance: float = 1e-6
) -> dict[str, BarrierCheck]:
    """The comparison barriers of the CB flow, keyed by check name."""

    cylinder = params.cylinder_start
    checks = {
        "plane_floor": BarrierCheck(
            "plane_floor", exact.plane(params.se), "lower", (DomainRect(0.0, horizon),), tolerance
        ),
        "sphere_barrier": BarrierCheck(
            "sphere_barrier", exact.sphere_barrier(params.sb), "lower",
            (DomainRect(0.0, min(horizon, 1.0)),), tolerance,
        ),
        "coarse_cigar": BarrierCheck(
            "coarse_cigar", exact.cigar(0.125, params.sb), "upper",
            (DomainRect(0.0, min(horizon, 1.0 / params.r_c), cylinder),), tolerance,
        ),
        "plane_ceiling": BarrierCheck(
            "plane_ceiling", exact.plane(params.se, math.sqrt(68.0)), "upper",
            (DomainRect(PLANE_CEILING_TIME, PLANE_CEILING_TIME, -math.inf, params.se + math.log(2.0)),),
            tolerance,
        ),
    }
    if t1 is not None:
        checks["refined_upper"] = BarrierCheck(
            "refined_upper", exact.cigar((4.0 * params.r_c) ** -2, 2.0 / params.r_c, t1), "upper",
            (DomainRect(t1, min(horizon, t1 + 1.0), cylinder),), tolerance,
        )
        checks["refined_lower"] = BarrierCheck(
            "refined_lower", exact.cigar(params.r_c**-2, 0.0, t1), "lower",
            (DomainRect(t1, horizon),), tolerance,
        )
    return checks


@dataclass(frozen=True, slots=True)
class HarnessSettings:
    u_tolerance: float = 1e-6
    discretization: float = 5.0
    chen_tolerance: float = 1e-3
    growth_tolerance: float = 1e-4
    envelope_tolerance: float = 1e-2
    envelope_limit: float = 0.9
    area_law_tolerance: float = 0.01
    extinction_tolerance: float = 0.05
    decay_tolerance: float = 0.01
    decay_from: float = 4.0
    width_tolerance: float = 1e-3
    length_tolerance: float = 1e-3
    bol_tolerance: float = 5e-3
    bol_balls: int = 100
    bol_frames: int = 5
    seed: int = 0
    jobs: int = 1

    def to_dict(self) -> dict[str, object]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass(frozen=True, slots=True)
class HarnessReport:
    checks: list[CheckReport]
    t1: float | None

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.checks if r.required)

    @property
    def failures(self) -> list[CheckReport]:
        return [r for r in self.checks if r.required and not r.passed]

    def get(self, name: str) -> CheckReport | None:
        for report in self.checks:
            if report.name == name:
                return report
        return None

    def to_dict(self) -> dict[str, object]:
        return {
            "passed": self.passed,
            "t1": self.t1,
            "checks": [r.to_dict() for r in self.checks],
        }


def _skipped(name: str, reason: str) -> CheckReport:
    """A check that saw no samples; it only passes when it is informational."""

    rule = find_check(name)
    required = rule.required if rule else True
    return CheckReport(name=name, passed=not required, samples=0, required=required, skipped=reason)


def _bol_frames(series: FlowSeries, settings: HarnessSettings) -> CheckReport:
    stride = max(1, len(series) // max(settings.bol_frames, 1))
    reports = []
    for offset, index in enumerate(range(0, len(series), stride)):
        profile = series.profiles[index]
        balls = sample_balls(profile, settings.bol_balls, seed=settings.seed + offset)
        reports.append(check_bol(profile, balls, t=series.times[index], tolerance=settings.bol_tolerance))
    return _merge("bol", reports)


def _pseudolocality(series: FlowSeries, params: CBParams) -> CheckReport:
    length = params.l_c / params.r_c
    centre = params.cylinder_start + 0.5 * length
    r0 = 0.25 * length * params.r_c
    region = (centre - 0.25 * length, centre + 0.25 * length)
    return check_pseudolocality(series, region, r0, 0.5 * math.pi)


def run_checks(
    series: FlowSeries,
    params: CBParams,
    *,
    names: Sequence[str] | None = None,
    noose: NooseSummary | None = None,
    settings: HarnessSettings | None = None,
) -> HarnessReport:
    """Run the named checks (all registered ones by default) in registry order."""

    settings = settings or HarnessSettings()
    wanted = [rule.name for rule in list_checks() if names is None or rule.name in names]
    t1: float | None = None
    t1_error: str | None = None
    if any(find_check(name).needs == "t1" for name in wanted):  # type: ignore[union-attr]
        try:
            t1 = detect_t1(series, params.r_c, s_from=params.cylinder_start)
        except T1DetectionError as exc:
            t1_error = str(exc)
    barriers = barrier_checks(params, series.horizon, t1, tolerance=settings.u_tolerance)
    tol, disc = settings.u_tolerance, settings.discretization

    runners: dict[str, Callable[[], CheckReport]] = {
        "curvature_envelope": lambda: check_curvature_envelope(
            series, tolerance=settings.envelope_tolerance, t_limit=settings.envelope_limit
        ),
        "chen": lambda: check_chen(series, tolerance=settings.chen_tolerance, discretization=disc),
        "chen_growth": lambda: check_chen_growth(series, tolerance=settings.growth_tolerance, discretization=disc),
        "cylinder_cap": lambda: check_cylinder_cap(series, params, tolerance=tol),
        "burst_decay": lambda: check_burst_decay(
            series, params.r_c, tolerance=settings.decay_tolerance, t_from=settings.decay_from
        ),
        "bol": lambda: _bol_frames(series, settings),
        "pseudolocality": lambda: _pseudolocality(series, params),
    }
    for name, check in barriers.items():
        runners[name] = lambda check=check: check_barrier(series, check)  # type: ignore[misc]
    if t1 is not None:
        t1_value = t1
        runners["claim_floor"] = lambda: check_claim_floor(
            series, t1_value, params.r_c, s_from=params.cylinder_start, tolerance=tol
        )
        runners["burst_area_window"] = lambda: check_burst_area_window(series, params, t1_value, tolerance=tol)
        runners["cusp_domination"] = lambda: check_cusp_domination(series, params, t1_value, tolerance=tol)
        runners["cusp_envelope"] = lambda: check_cusp_envelope(
            series, params, t1_value, tolerance=tol, discretization=disc
        )
    if noose is not None:
        summary = noose
        runners["area_law"] = lambda: check_area_law(summary, tolerance=settings.area_law_tolerance)
        runners["extinction_time"] = lambda: check_extinction_time(
            summary, tolerance=settings.extinction_tolerance
        )
        runners["noose_length"] = lambda: check_noose_length(summary, tolerance=settings.length_tolerance)
        runners["width"] = lambda: check_width(series, summary, params, tolerance=settings.width_tolerance)

    def evaluate(name: str) -> CheckReport:
        rule = find_check(name)
        assert rule is not None
        if name not in runners:
            if rule.needs == "t1":
                return CheckReport(name=name, passed=False, samples=0, required=rule.required,
                                   details={"error": t1_error or "t1 not detected"})
            return _skipped(name, "no coupled loop")
        try:
            return runners[name]()
        except (CoverageError, ProfileError, HypothesisError, exact.DomainError) as exc:
            return _skipped(name, str(exc))

    if settings.jobs > 1:
        with ThreadPoolExecutor(max_workers=settings.jobs) as pool:
            reports = list(pool.map(evaluate, wanted))
    else:
        reports = [evaluate(name) for name in wanted]
    for report in reports:
        if not report.passed and report.required:
            logger.debug("check failed: %s", report.witness())
    return HarnessReport(checks=reports, t1=t1)
