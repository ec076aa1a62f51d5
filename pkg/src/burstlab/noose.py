"""A symmetric loop {s = ρ} moved by double-speed curve shortening on the evolving metric.

The loop encloses the tip side {s > ρ}. With the normal pointing away from that
region the coordinate velocity is dρ/dt = −2e^{−2u}u_s, and the enclosed area
then drops at exactly 4π per unit time.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import exact
from .profile import RadialProfile, circle_length, volume
from .solver import (
    CoverageError,
    DiagnosticRegions,
    FlowSeries,
    ProgressCallback,
    SolverConfig,
    StepEvent,
    run,
)

logger = logging.getLogger("burstlab.noose")

AREA_CELLS = 10.0
TIP_CELLS = 2


class NooseError(RuntimeError):
    """Raised when the loop leaves the grid on the plane side or starts outside it."""


@dataclass(frozen=True, slots=True)
class NooseState:
    rho: float
    length: float
    enclosed_area: float
    alive: bool = True


def _slopes(s: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.gradient(u, s)


def _check_inside(s: np.ndarray, rho: float) -> None:
    if not s[0] < rho < s[-1]:
        raise NooseError(f"loop at s={rho} outside the grid interior ({s[0]}, {s[-1]})")


def noose_velocity(profile: RadialProfile, rho: float) -> float:
    """dρ/dt = −2e^{−2u(ρ)}u_s(ρ); positive values move the loop toward the tip."""

    _check_inside(profile.s, rho)
    u = float(np.interp(rho, profile.s, profile.u))
    u_s = float(np.interp(rho, profile.s, _slopes(profile.s, profile.u)))
    return -2.0 * math.exp(-2.0 * u) * u_s


def enclosed_area(profile: RadialProfile, rho: float) -> float:
    end = math.inf if profile.cap is not None else profile.s_max
    return volume(profile, rho, end)


def state_of(profile: RadialProfile, rho: float) -> NooseState:
    return NooseState(
        rho=rho,
        length=circle_length(profile, rho),
        enclosed_area=enclosed_area(profile, rho),
    )


def _cap_area(profile: RadialProfile) -> float:
    if profile.cap is None:
        return 0.0
    return exact.area(profile.cap, 0.0, profile.s_max, math.inf)


class _Frame:
    """u, u_s, u_ss and tail areas of one profile, ready for linear blending in time."""

    def __init__(self, profile: RadialProfile) -> None:
        self.u = profile.u
        self.u_s = _slopes(profile.s, profile.u)
        self.u_ss = np.gradient(self.u_s, profile.s)
        self.cap_area = _cap_area(profile)


class NooseCoupler:
    """Step observer that carries the loop along with the flow."""

    def __init__(self, initial: RadialProfile, rho0: float) -> None:
        _check_inside(initial.s, rho0)
        start = state_of(initial, rho0)
        self.rho0 = rho0
        self.area0 = start.enclosed_area
        self.state = start
        self.extinction_time: float | None = None
        self.extinct_by: str | None = None
        self.history: list[tuple[float, float, float, float]] = []

    @property
    def alive(self) -> bool:
        return self.state.alive

    def _blend(self, a: _Frame, b: _Frame, theta: float, s: np.ndarray, rho: float) -> tuple[float, float, float]:
        u = (1.0 - theta) * float(np.interp(rho, s, a.u)) + theta * float(np.interp(rho, s, b.u))
        u_s = (1.0 - theta) * float(np.interp(rho, s, a.u_s)) + theta * float(np.interp(rho, s, b.u_s))
        u_ss = (1.0 - theta) * float(np.interp(rho, s, a.u_ss)) + theta * float(np.interp(rho, s, b.u_ss))
        return u, u_s, u_ss

    def _tail(self, a: _Frame, b: _Frame, theta: float, s: np.ndarray, rho: float) -> tuple[float, float]:
        """(area beyond ρ, area of the cell holding ρ) at the blended time."""

        u = (1.0 - theta) * a.u + theta * b.u
        weight = np.exp(2.0 * u)
        index = int(np.searchsorted(s, rho, side="right"))
        w_rho = float(np.interp(rho, s, weight))
        partial = 0.5 * (w_rho + weight[index]) * (s[index] - rho)
        rest = float(np.sum(0.5 * (weight[index:-1] + weight[index + 1:]) * np.diff(s[index:])))
        cap = (1.0 - theta) * a.cap_area + theta * b.cap_area
        cell = 2.0 * math.pi * w_rho * (s[index] - s[index - 1])
        return 2.0 * math.pi * (partial + rest) + cap, cell

    def on_step(self, event: StepEvent) -> None:
        if not self.alive:
            return
        s = event.after.s
        if self.state.rho >= s[-1 - TIP_CELLS]:
            self._extinguish(event.t_old, float(s[-1 - TIP_CELLS]), "tip")
            return
        before, after = _Frame(event.before), _Frame(event.after)
        duration = event.t_new - event.t_old
        rho = self.state.rho
        elapsed = 0.0
        substeps = 0
        while elapsed < duration * (1.0 - 1e-12):
            theta = elapsed / duration
            u, u_s, u_ss = self._blend(before, after, theta, s, rho)
            damping = math.exp(-2.0 * u)
            velocity = -2.0 * damping * u_s
            stiffness = abs(4.0 * damping * u_s * u_s - 2.0 * damping * u_ss)
            index = min(max(int(np.searchsorted(s, rho)), 1), s.size - 1)
            cell = s[index] - s[index - 1]
            tau = duration - elapsed
            if stiffness > 0.0:
                tau = min(tau, 0.5 / stiffness)
            if velocity != 0.0:
                tau = min(tau, 0.5 * cell / abs(velocity))
            half = min(max(rho + 0.5 * tau * velocity, s[0]), s[-1])
            mid_u, mid_slope, _ = self._blend(before, after, (elapsed + 0.5 * tau) / duration, s, half)
            rho -= 2.0 * tau * math.exp(-2.0 * mid_u) * mid_slope
            elapsed += tau
            substeps += 1
            if rho <= s[1]:
                raise NooseError(f"loop reached the plane-side boundary at t={event.t_old + elapsed:.6g}")
            t_now = event.t_old + elapsed
            if rho >= s[-1 - TIP_CELLS]:
                self._extinguish(t_now, min(rho, float(s[-1 - TIP_CELLS])), "tip")
                break
            area, cell_area = self._tail(before, after, elapsed / duration, s, rho)
            if area < AREA_CELLS * cell_area:
                self._extinguish(t_now, rho, "area")
                break
        else:
            self.state = NooseState(rho, self.state.length, self.state.enclosed_area)
        logger.debug("loop at ρ=%.6f after %d substeps", rho, substeps)

    def _extinguish(self, t: float, rho: float, reason: str) -> None:
        self.state = NooseState(rho, self.state.length, 0.0, alive=False)
        self.extinction_time = t
        self.extinct_by = reason
        logger.debug("loop extinct at t=%.6f (%s)", t, reason)
        if reason == "tip":
            warnings.warn(
                f"loop reached the tip end of the grid at t={t:.6g}; extinction time taken there",
                RuntimeWarning,
                stacklevel=2,
            )

    def on_record(self, t: float, profile: RadialProfile) -> Mapping[str, float | None]:
        if not self.alive:
            return {"noose_rho": None, "noose_len": None, "noose_area": None}
        if self.state.rho >= profile.s[-1 - TIP_CELLS]:
            self._extinguish(t, float(profile.s[-1 - TIP_CELLS]), "tip")
            return {"noose_rho": None, "noose_len": None, "noose_area": None}
        self.state = state_of(profile, self.state.rho)
        self.history.append((t, self.state.rho, self.state.length, self.state.enclosed_area))
        return {
            "noose_rho": self.state.rho,
            "noose_len": self.state.length,
            "noose_area": self.state.enclosed_area,
        }

    def summary(self) -> NooseSummary:
        rows = np.array(self.history, dtype=float).reshape(-1, 4)
        return NooseSummary(
            rho0=self.rho0,
            area0=self.area0,
            t_emp=self.extinction_time,
            extinct_by=self.extinct_by,
            times=rows[:, 0],
            rhos=rows[:, 1],
            lengths=rows[:, 2],
            areas=rows[:, 3],
        )


@dataclass(frozen=True, slots=True, eq=False)
class NooseSummary:
    rho0: float
    area0: float
    t_emp: float | None
    extinct_by: str | None
    times: np.ndarray = field(repr=False)
    rhos: np.ndarray = field(repr=False)
    lengths: np.ndarray = field(repr=False)
    areas: np.ndarray = field(repr=False)

    @property
    def t_pred(self) -> float:
        """Extinction time A(0)/4π from the area law."""

        return self.area0 / (4.0 * math.pi)

    @property
    def extinct(self) -> bool:
        return self.t_emp is not None

    @property
    def extinction_error(self) -> float | None:
        if self.t_emp is None:
            return None
        return abs(self.t_emp - self.t_pred) / self.t_emp

    def area_law_deviation(self) -> float:
        """max |A(t) − (A(0) − 4πt)| over the recorded frames, relative to A(0)."""

        if self.times.size == 0:
            return 0.0
        predicted = self.area0 - 4.0 * math.pi * self.times
        return float(np.max(np.abs(self.areas - predicted))) / self.area0

    def area_rates(self) -> np.ndarray:
        """dA/dt between consecutive recorded frames."""

        if self.times.size < 2:
            return np.empty(0)
        return np.diff(self.areas) / np.diff(self.times)

    def to_dict(self) -> dict[str, object]:
        return {
            "rho0": self.rho0,
            "area0": self.area0,
            "t_pred": self.t_pred,
            "t_emp": self.t_emp,
            "extinct_by": self.extinct_by,
            "extinction_error": self.extinction_error,
            "area_law_deviation": self.area_law_deviation(),
            "frames": int(self.times.size),
        }


def summary_from_series(
    series: FlowSeries, *, t_emp: float | None = None, extinct_by: str | None = None
) -> NooseSummary:
    """Rebuild a loop summary from the noose columns of a stored series.

    Without an explicit t_emp the first frame whose loop columns are empty after
    the loop was seen is taken as the extinction frame.
    """

    rows = [
        (d.t, d.noose_rho, d.noose_len, d.noose_area)
        for d in series.diagnostics
        if d.noose_rho is not None and d.noose_len is not None and d.noose_area is not None
    ]
    if not rows:
        raise CoverageError("series carries no loop columns")
    data = np.array(rows, dtype=float)
    if t_emp is None:
        later = [d.t for d in series.diagnostics if d.t > data[-1, 0] and d.noose_rho is None]
        if later:
            t_emp = later[0]
            extinct_by = extinct_by or "recorded"
    return NooseSummary(
        rho0=float(data[0, 1]),
        area0=float(data[0, 3]),
        t_emp=t_emp,
        extinct_by=extinct_by,
        times=data[:, 0],
        rhos=data[:, 1],
        lengths=data[:, 2],
        areas=data[:, 3],
    )


@dataclass(frozen=True, slots=True, eq=False)
class CoupledRun:
    series: FlowSeries
    noose: NooseSummary


def run_coupled(
    initial: RadialProfile,
    t_end: float,
    *,
    rho0: float = 0.0,
    config: SolverConfig | None = None,
    regions: DiagnosticRegions | None = None,
    progress_callback: ProgressCallback | None = None,
) -> CoupledRun:
    """Flow the profile to t_end with a loop starting at s = rho0."""

    coupler = NooseCoupler(initial, rho0)
    series = run(
        initial,
        t_end,
        config,
        observers=[coupler],
        progress_callback=progress_callback,
        regions=regions,
    )
    summary = coupler.summary()
    if summary.extinct:
        logger.info(
            "loop extinct at t=%.6f, area law predicts %.6f", summary.t_emp, summary.t_pred
        )
    return CoupledRun(series=series, noose=summary)


@dataclass(frozen=True, slots=True)
class GrowthReport:
    t1: float
    t2: float
    bound_ratio: float
    worst_ratio: float
    worst_s: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.worst_ratio <= self.bound_ratio + self.tolerance

    def to_dict(self) -> dict[str, object]:
        return {
            "t1": self.t1,
            "t2": self.t2,
            "bound_ratio": self.bound_ratio,
            "worst_ratio": self.worst_ratio,
            "worst_s": self.worst_s,
            "passed": self.passed,
        }


def tracked_circle_growth(
    series: FlowSeries,
    t1: float,
    t2: float,
    *,
    s_range: tuple[float, float] | None = None,
    tolerance: float = 1e-4,
) -> GrowthReport:
    """Largest L(t2, s)/L(t1, s) over grid circles against √((2t₂+1)/(2t₁+1))."""

    if t2 < t1:
        raise ValueError(f"need t1 <= t2, got {t1}, {t2}")
    first = series.profiles[series.frame_index(t1)]
    second = series.profiles[series.frame_index(t2)]
    count = min(len(first), len(second))
    s = first.s[:count]
    mask = np.ones(count, dtype=bool)
    if s_range is not None:
        mask = (s >= s_range[0]) & (s <= s_range[1])
    if not np.any(mask):
        raise CoverageError(f"no grid circles in {s_range}")
    log_ratio = second.u[:count][mask] - first.u[:count][mask]
    worst = int(np.argmax(log_ratio))
    return GrowthReport(
        t1=t1,
        t2=t2,
        bound_ratio=math.sqrt((2.0 * t2 + 1.0) / (2.0 * t1 + 1.0)),
        worst_ratio=math.exp(float(log_ratio[worst])),
        worst_s=float(s[mask][worst]),
        tolerance=tolerance,
    )
