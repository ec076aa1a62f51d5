"""Rotationally symmetric Ricci flow u_t = e^{−2u} u_ss on a truncated s-domain.

The equation is integrated in conservative form ½(e^{2u})_t = u_ss with finite
volumes centred on the grid nodes. Each implicit step solves a symmetric
positive definite tridiagonal Newton system, and the grid area changes by
exactly 4π·dt·(g_R − g_L) where g_L, g_R are the imposed boundary slopes.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np
from scipy import linalg

from . import exact
from .exact import BarrierFn
from .grid import uniform_segment
from .profile import ProfileError, RadialProfile, circle_length, curvature_bounds
from .profile import slope as profile_slope
from .profile import total_area, volume, width

logger = logging.getLogger("burstlab.solver")

ProgressCallback = Callable[[int, float, float, bool], None]

STEPPERS = ("implicit", "explicit")
RIGHT_BOUNDARIES = ("cap", "neumann")
TRIM_BATCH = 8


class SolverError(RuntimeError):
    """Raised when a flow step cannot be completed."""


class NewtonDivergence(SolverError):
    """Raised when Newton iteration fails to reach newton_tol; retry with a smaller dt."""


class CoverageError(ValueError):
    """Raised when a series has no recorded frame where one is required."""


@dataclass(frozen=True, slots=True)
class SolverConfig:
    dt_init: float = 1e-4
    dt_max: float = 5e-3
    dt_min: float = 1e-12
    max_du: float = 0.05
    growth: float = 1.2
    newton_tol: float = 1e-10
    newton_max_iter: int = 30
    time_stepper: str = "implicit"
    cfl_safety: float = 0.4
    left_slope: float = -1.0
    right_boundary: str = "cap"
    right_slope: float = -1.0
    cadence: float = 5e-3
    cone_depth: float = 8.0
    min_nodes: int = 16
    trim: bool = True
    max_steps: int = 5_000_000

    def __post_init__(self) -> None:
        if not self.dt_init > 0.0:
            raise ValueError(f"dt_init must be positive, got {self.dt_init}")
        if not 0.0 < self.dt_min <= self.dt_max:
            raise ValueError(f"need 0 < dt_min <= dt_max, got {self.dt_min}, {self.dt_max}")
        if not (self.newton_tol > 0.0 and self.max_du > 0.0 and self.cadence > 0.0):
            raise ValueError("tolerances and cadence must be positive")
        if self.growth < 1.0:
            raise ValueError(f"growth factor must be at least 1, got {self.growth}")
        if self.time_stepper not in STEPPERS:
            raise ValueError(f"Unknown time stepper '{self.time_stepper}'")
        if self.right_boundary not in RIGHT_BOUNDARIES:
            raise ValueError(f"Unknown right boundary '{self.right_boundary}'")
        if self.min_nodes < 3:
            raise ValueError("min_nodes must be at least 3")

    def to_dict(self) -> dict[str, object]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass(frozen=True, slots=True)
class DiagnosticRegions:
    """Where the bulb volume and the width are measured."""

    bulb_from: float = 0.0
    width_from: float | None = None


@dataclass(frozen=True, slots=True)
class Diagnostics:
    t: float
    sup_k: float
    inf_k: float
    vol_total: float
    vol_bulb: float
    width: float
    noose_rho: float | None = None
    noose_len: float | None = None
    noose_area: float | None = None

    def row(self) -> dict[str, float | None]:
        return {
            "t": self.t,
            "supK": self.sup_k,
            "infK": self.inf_k,
            "vol_total": self.vol_total,
            "vol_bulb": self.vol_bulb,
            "width": self.width,
            "noose_rho": self.noose_rho,
            "noose_len": self.noose_len,
            "noose_area": self.noose_area,
        }


def measure(profile: RadialProfile, t: float, regions: DiagnosticRegions) -> Diagnostics:
    inf_k, sup_k = curvature_bounds(profile)
    end = math.inf if profile.cap is not None else profile.s_max
    bulb_from = max(regions.bulb_from, profile.s_min)
    if bulb_from < end:
        vol_bulb = volume(profile, bulb_from, end)
    else:
        vol_bulb = 0.0
    width_from = profile.s_min if regions.width_from is None else max(regions.width_from, profile.s_min)
    if width_from <= profile.s_max:
        measured_width = width(profile, (width_from, profile.s_max))
    else:
        measured_width = circle_length(profile, width_from)
    return Diagnostics(
        t=t,
        sup_k=sup_k,
        inf_k=inf_k,
        vol_total=total_area(profile),
        vol_bulb=vol_bulb,
        width=measured_width,
    )


@dataclass(slots=True, eq=False)
class FlowSeries:
    """Recorded frames of one flow; frames only ever lose nodes on the right."""

    times: list[float] = field(default_factory=list)
    profiles: list[RadialProfile] = field(default_factory=list)
    diagnostics: list[Diagnostics] = field(default_factory=list)
    regions: DiagnosticRegions = field(default_factory=DiagnosticRegions)
    cadence: float = 5e-3
    complete: bool = True
    failure: str | None = None

    def __post_init__(self) -> None:
        if not (len(self.times) == len(self.profiles) == len(self.diagnostics)):
            raise ValueError("times, profiles and diagnostics must have equal length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("frame times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    def append(self, t: float, profile: RadialProfile, diagnostics: Diagnostics) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError(f"frame time {t} not after {self.times[-1]}")
        self.times.append(t)
        self.profiles.append(profile)
        self.diagnostics.append(diagnostics)

    @property
    def horizon(self) -> float:
        return self.times[-1] if self.times else 0.0

    def frame_index(self, t: float) -> int:
        """Index of the frame nearest t, which must lie within half a cadence."""

        if not self.times:
            raise CoverageError("series has no frames")
        times = np.asarray(self.times)
        index = int(np.argmin(np.abs(times - t)))
        if abs(times[index] - t) > 0.5 * self.cadence + 1e-12:
            raise CoverageError(f"no frame within {0.5 * self.cadence} of t={t}")
        return index

    def frames_between(self, t_lo: float, t_hi: float) -> list[int]:
        return [i for i, t in enumerate(self.times) if t_lo - 1e-12 <= t <= t_hi + 1e-12]

    def set_noose(self, index: int, fields: Mapping[str, float | None]) -> None:
        self.diagnostics[index] = replace(self.diagnostics[index], **fields)


@dataclass(frozen=True, slots=True, eq=False)
class StepEvent:
    step: int
    t_old: float
    t_new: float
    before: RadialProfile
    after: RadialProfile


class StepObserver(Protocol):
    def on_step(self, event: StepEvent) -> None: ...

    def on_record(self, t: float, profile: RadialProfile) -> Mapping[str, float | None]: ...


def _control_volumes(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h = np.diff(s)
    omega = np.empty_like(s)
    omega[0] = 0.5 * h[0]
    omega[-1] = 0.5 * h[-1]
    omega[1:-1] = 0.5 * (h[:-1] + h[1:])
    return h, omega


def _fluxes(u: np.ndarray, h: np.ndarray, left: float, right: float) -> np.ndarray:
    return np.concatenate(([left], np.diff(u) / h, [right]))


def _residual(
    u: np.ndarray, w_old: np.ndarray, omega: np.ndarray, h: np.ndarray, dt: float,
    left: float, right: float,
) -> np.ndarray:
    flux = _fluxes(u, h, left, right)
    return 0.5 * omega * (np.exp(2.0 * u) - w_old) - dt * np.diff(flux)


def _jacobian_banded(u: np.ndarray, omega: np.ndarray, h: np.ndarray, dt: float) -> np.ndarray:
    conductance = dt / h
    ab = np.zeros((2, u.size))
    ab[0, 1:] = -conductance
    ab[1, :] = omega * np.exp(2.0 * u)
    ab[1, :-1] += conductance
    ab[1, 1:] += conductance
    return ab


def _implicit_step(
    u_old: np.ndarray, s: np.ndarray, dt: float, config: SolverConfig, left: float, right: float
) -> tuple[np.ndarray, int]:
    h, omega = _control_volumes(s)
    w_old = np.exp(2.0 * u_old)
    u = u_old.copy()
    residual = _residual(u, w_old, omega, h, dt, left, right)
    norm = float(np.max(np.abs(residual)))
    for iteration in range(1, config.newton_max_iter + 1):
        delta = linalg.solveh_banded(_jacobian_banded(u, omega, h, dt), -residual)
        if not np.all(np.isfinite(delta)):
            raise NewtonDivergence(f"non-finite Newton update at iteration {iteration}")
        damping = 1.0
        for _ in range(12):
            trial = u + damping * delta
            trial_residual = _residual(trial, w_old, omega, h, dt, left, right)
            trial_norm = float(np.max(np.abs(trial_residual)))
            if np.isfinite(trial_norm) and (trial_norm < norm or damping * np.max(np.abs(delta)) <= config.newton_tol):
                break
            damping *= 0.5
        else:
            raise NewtonDivergence(f"line search failed at iteration {iteration}")
        u, residual, norm = trial, trial_residual, trial_norm
        if damping == 1.0 and float(np.max(np.abs(delta))) <= config.newton_tol:
            return u, iteration
    raise NewtonDivergence(f"no convergence in {config.newton_max_iter} Newton iterations")


def explicit_bound(profile: RadialProfile, config: SolverConfig) -> float:
    """Largest stable forward-Euler step for the current profile."""

    h, omega = _control_volumes(profile.s)
    inverse = np.zeros_like(omega)
    inverse[:-1] += 1.0 / h
    inverse[1:] += 1.0 / h
    return config.cfl_safety * float(np.min(omega * np.exp(2.0 * profile.u) / inverse))


def _explicit_step(
    u_old: np.ndarray, s: np.ndarray, dt: float, config: SolverConfig, left: float, right: float
) -> tuple[np.ndarray, int]:
    h, omega = _control_volumes(s)
    u = u_old
    elapsed = 0.0
    substeps = 0
    while elapsed < dt * (1.0 - 1e-12):
        inverse = np.zeros_like(omega)
        inverse[:-1] += 1.0 / h
        inverse[1:] += 1.0 / h
        bound = config.cfl_safety * float(np.min(omega * np.exp(2.0 * u) / inverse))
        tau = min(bound, dt - elapsed)
        w = np.exp(2.0 * u) + 2.0 * tau * np.diff(_fluxes(u, h, left, right)) / omega
        if not np.all(w > 0.0):
            raise SolverError("explicit step produced a non-positive conformal weight")
        u = 0.5 * np.log(w)
        elapsed += tau
        substeps += 1
    return u, substeps


def boundary_slopes(profile: RadialProfile, config: SolverConfig) -> tuple[float, float]:
    """(g_L, g_R) imposed on a step that is not given explicit fluxes."""

    if config.right_boundary == "cap" and profile.cap is not None:
        right = float(exact.slope(profile.cap, 0.0, profile.s_max))
    else:
        right = config.right_slope
    return config.left_slope, right


def attach_cap(s: np.ndarray, u: np.ndarray) -> BarrierFn | None:
    """Fit a tip cap to the last nodes; None when no family matches the end slope."""

    k = -math.exp(-2.0 * u[-2]) * 2.0 * (
        (u[-1] - u[-2]) / (s[-1] - s[-2]) - (u[-2] - u[-3]) / (s[-2] - s[-3])
    ) / (s[-1] - s[-3])
    end_slope = float(np.gradient(u[-3:], s[-3:], edge_order=2)[-1])
    try:
        return exact.fit_cap(float(s[-1]), float(u[-1]), min(end_slope, -1e-9), curvature_hint=k)
    except exact.DomainError:
        return None


def _with_cap(s: np.ndarray, u: np.ndarray, config: SolverConfig) -> RadialProfile:
    if config.right_boundary != "cap":
        return RadialProfile(s, u)
    cap = attach_cap(s, u)
    try:
        return RadialProfile(s, u, cap)
    except ProfileError as exc:
        logger.debug("dropping tip cap: %s", exc)
        return RadialProfile(s, u)


def step(
    profile: RadialProfile,
    dt: float,
    config: SolverConfig | None = None,
    *,
    left_flux: float | None = None,
    right_flux: float | None = None,
) -> RadialProfile:
    """Advance the profile by one step of the configured scheme."""

    config = config or SolverConfig()
    if not 0.0 < dt <= config.dt_max * (1.0 + 1e-12):
        raise ValueError(f"dt={dt} outside (0, dt_max={config.dt_max}]")
    default_left, default_right = boundary_slopes(profile, config)
    left = default_left if left_flux is None else left_flux
    right = default_right if right_flux is None else right_flux
    if config.time_stepper == "implicit":
        u, iterations = _implicit_step(profile.u, profile.s, dt, config, left, right)
        logger.debug("implicit step dt=%.3e converged in %d Newton iterations", dt, iterations)
    else:
        u, iterations = _explicit_step(profile.u, profile.s, dt, config, left, right)
        logger.debug("explicit step dt=%.3e in %d substeps", dt, iterations)
    if not np.all(np.isfinite(u)):
        raise SolverError("conformal factor became non-finite")
    return _with_cap(profile.s, u, config)


def _trim(profile: RadialProfile, config: SolverConfig) -> tuple[RadialProfile, float] | None:
    slopes = profile_slope(profile)
    steep = np.nonzero(slopes >= -0.5)[0]
    centre = float(profile.s[steep[-1]]) if steep.size else profile.s_min
    keep = int(np.searchsorted(profile.s, centre + config.cone_depth, side="right"))
    keep = min(max(keep, config.min_nodes), len(profile))
    if len(profile) - keep < TRIM_BATCH:
        return None
    s, u = profile.s, profile.u
    centred = (u[keep] - u[keep - 2]) / (s[keep] - s[keep - 2])
    flux = float(np.clip(centred, -1.0, -1e-9))
    trimmed = _with_cap(s[:keep], u[:keep], config)
    logger.debug("trimmed right boundary to s_max=%.4f (%d nodes), g_R=%.6f", trimmed.s_max, keep, flux)
    return trimmed, flux


def run(
    initial: RadialProfile,
    t_end: float,
    config: SolverConfig | None = None,
    *,
    observers: Sequence[StepObserver] = (),
    progress_callback: ProgressCallback | None = None,
    regions: DiagnosticRegions | None = None,
) -> FlowSeries:
    """Adaptive stepping from t = 0 to t_end, recording a frame every cadence."""

    config = config or SolverConfig()
    if not t_end > 0.0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    regions = regions or DiagnosticRegions()
    series = FlowSeries(regions=regions, cadence=config.cadence)

    def record(t: float, profile: RadialProfile) -> None:
        diagnostics = measure(profile, t, regions)
        extra: dict[str, float | None] = {}
        for observer in observers:
            extra.update(observer.on_record(t, profile))
        if extra:
            diagnostics = replace(diagnostics, **extra)
        series.append(t, profile, diagnostics)

    profile = initial
    left, right = boundary_slopes(profile, config)
    record(0.0, profile)

    t = 0.0
    dt = config.dt_init
    record_index = 1
    steps = 0
    while t < t_end - 1e-12:
        if steps >= config.max_steps:
            _stop(series, f"step limit {config.max_steps} reached at t={t:.6g}")
            break
        target = min(record_index * config.cadence, t_end)
        dt_try = min(dt, config.dt_max, target - t)
        try:
            after = step(profile, dt_try, config, left_flux=left, right_flux=right)
            change = float(np.max(np.abs(after.u - profile.u)))
            if change > config.max_du:
                raise NewtonDivergence(f"step changed u by {change:.3g} > {config.max_du}")
        except NewtonDivergence as exc:
            if progress_callback:
                progress_callback(steps, t, dt_try, False)
            logger.debug("rejected dt=%.3e at t=%.6f: %s", dt_try, t, exc)
            dt = 0.5 * dt_try
            if dt < config.dt_min:
                _stop(series, f"dt fell below dt_min={config.dt_min} at t={t:.6g}: {exc}")
                break
            continue
        except SolverError as exc:
            _stop(series, f"solver failure at t={t:.6g}: {exc}")
            break

        t_new = target if target - (t + dt_try) <= 1e-12 else t + dt_try
        steps += 1
        if progress_callback:
            progress_callback(steps, t_new, dt_try, True)
        event = StepEvent(steps, t, t_new, profile, after)
        for observer in observers:
            observer.on_step(event)
        t, profile = t_new, after

        if config.trim and config.right_boundary == "cap":
            trimmed = _trim(profile, config)
            if trimmed is not None:
                profile, right = trimmed
        if t >= record_index * config.cadence - 1e-12 or t >= t_end - 1e-12:
            record(t, profile)
            while record_index * config.cadence <= t + 1e-12:
                record_index += 1
        if change < 0.5 * config.max_du:
            dt = min(dt * config.growth, config.dt_max)
    return series


def _stop(series: FlowSeries, message: str) -> None:
    series.complete = False
    series.failure = message
    warnings.warn(f"flow incomplete: {message}", RuntimeWarning, stacklevel=3)


@dataclass(frozen=True, slots=True)
class EnvelopeCurve:
    times: np.ndarray
    sup_k: np.ndarray
    bound: np.ndarray
    violations: list[tuple[float, float, float]]
    tolerance: float

    @property
    def passed(self) -> bool:
        return not self.violations


def curvature_upper_envelope(
    series: FlowSeries, *, tolerance: float = 1e-2, t_limit: float = 1.0
) -> EnvelopeCurve:
    """sup K per frame next to 1/(2(1 − t)); violations are collected for t < t_limit."""

    times = np.asarray(series.times)
    sup_k = np.array([d.sup_k for d in series.diagnostics])
    bound = np.full_like(times, np.nan)
    alive = times < 1.0
    bound[alive] = 1.0 / (2.0 * (1.0 - times[alive]))
    violations = [
        (float(t), float(k), float(b))
        for t, k, b in zip(times, sup_k, bound)
        if t < min(t_limit, 1.0) and k > b + tolerance
    ]
    return EnvelopeCurve(times, sup_k, bound, violations, tolerance)


def exact_series(
    barrier: BarrierFn,
    nodes: np.ndarray | Sequence[float],
    times: Sequence[float],
    *,
    regions: DiagnosticRegions | None = None,
    with_cap: bool = False,
    cadence: float | None = None,
) -> FlowSeries:
    """A FlowSeries sampled from a closed-form solution."""

    s = np.array(nodes, dtype=float)
    s.flags.writeable = False
    regions = regions or DiagnosticRegions()
    steps = np.diff(np.asarray(times, dtype=float))
    series = FlowSeries(
        regions=regions,
        cadence=cadence if cadence is not None else (float(np.min(steps)) if steps.size else 1.0),
    )
    for t in times:
        u = np.asarray(exact.evaluate(barrier, t, s))
        cap = exact.frozen_at(barrier, t) if with_cap else None
        profile = RadialProfile(s, u, cap)
        series.append(float(t), profile, measure(profile, float(t), regions))
    return series


@dataclass(frozen=True, slots=True)
class Oracle:
    name: str
    barrier: BarrierFn
    s_range: tuple[float, float]
    left_slope: float
    right_slope: float


def oracle(name: str) -> Oracle:
    """Closed-form test flows with their truncated domains and exact boundary slopes."""

    if name == "cigar":
        return Oracle("cigar", exact.cigar(1.0), (-15.0, 8.0), 0.0, -1.0)
    if name == "sphere":
        edge = math.tanh(8.0)
        return Oracle("sphere", exact.sphere(2.0), (-8.0, 8.0), edge, -edge)
    raise ValueError(f"Unknown oracle '{name}'")


def oracle_run(
    name: str, h: float, t_end: float, config: SolverConfig | None = None
) -> tuple[FlowSeries, float]:
    """Evolve an oracle and return the series with the max-norm error at t_end."""

    spec = oracle(name)
    s = uniform_segment(*spec.s_range, h)
    s.flags.writeable = False
    initial = RadialProfile(s, np.asarray(exact.evaluate(spec.barrier, 0.0, s)))
    base = config or SolverConfig(dt_max=5e-4, cadence=max(t_end / 10.0, 5e-4))
    solver_config = replace(
        base,
        right_boundary="neumann",
        left_slope=spec.left_slope,
        right_slope=spec.right_slope,
        trim=False,
    )
    series = run(initial, t_end, solver_config)
    final = series.profiles[-1]
    error = float(np.max(np.abs(final.u - np.asarray(exact.evaluate(spec.barrier, series.times[-1], s)))))
    return series, error


@dataclass(frozen=True, slots=True)
class ConvergenceRow:
    h: float
    dt: float
    error: float


@dataclass(frozen=True, slots=True)
class ConvergenceReport:
    oracle: str
    t_end: float
    rows: list[ConvergenceRow]

    @property
    def orders(self) -> list[float]:
        return [
            math.log(a.error / b.error) / math.log(a.h / b.h)
            for a, b in zip(self.rows, self.rows[1:])
            if a.error > 0.0 and b.error > 0.0
        ]

    def to_dict(self) -> dict[str, object]:
        return {
            "oracle": self.oracle,
            "t_end": self.t_end,
            "rows": [{"h": r.h, "dt": r.dt, "error": r.error} for r in self.rows],
            "orders": self.orders,
        }


def convergence_study(
    name: str = "cigar",
    *,
    t_end: float = 1.0,
    h_list: Sequence[float] = (0.1, 0.05),
    dt_per_h2: float = 0.05,
) -> ConvergenceReport:
    """Refine h with dt ∝ h² and measure the max-norm error against the closed form."""

    rows: list[ConvergenceRow] = []
    for h in h_list:
        dt = dt_per_h2 * h * h
        config = SolverConfig(dt_init=dt, dt_max=dt, cadence=t_end, max_du=1.0)
        _, error = oracle_run(name, h, t_end, config)
        rows.append(ConvergenceRow(h=h, dt=dt, error=error))
    return ConvergenceReport(oracle=name, t_end=t_end, rows=rows)


@dataclass(frozen=True, slots=True)
class TruncationReport:
    margins: tuple[float, float]
    t_end: float
    max_difference: float
    s_from: float

    def to_dict(self) -> dict[str, object]:
        return {
            "margins": list(self.margins),
            "t_end": self.t_end,
            "max_difference": self.max_difference,
            "s_from": self.s_from,
        }


def truncation_study(
    make_profile: Callable[[float], RadialProfile],
    t_end: float,
    *,
    margin: float = 10.0,
    s_from: float = 0.0,
    config: SolverConfig | None = None,
) -> TruncationReport:
    """Compare runs whose left margin differs by a factor two on s ≥ s_from."""

    short = run(make_profile(margin), t_end, config)
    long = run(make_profile(2.0 * margin), t_end, config)
    a, b = short.profiles[-1], long.profiles[-1]
    lo = max(s_from, a.s_min, b.s_min)
    hi = min(a.s_max, b.s_max)
    nodes = a.s[(a.s >= lo) & (a.s <= hi)]
    if nodes.size == 0:
        raise CoverageError(f"no common nodes on [{lo}, {hi}]")
    difference = np.abs(np.interp(nodes, a.s, a.u) - np.interp(nodes, b.s, b.u))
    return TruncationReport((margin, 2.0 * margin), t_end, float(np.max(difference)), lo)
