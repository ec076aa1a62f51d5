"""Cylinder-with-bulb scenarios: bounded, burst and recovered curvature phases.

A scenario builds the CB surface, flows it with a loop started on the bulb
boundary, runs the verification harness and splits [0, horizon] into phases by
thresholding sup K against 1/r_c. Sweeps repeat this over r_c in a process pool.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Sequence

import numpy as np

from .builder import CBParams, GridSpec, build_cb_profile, cb_property_report, solve_junctions
from .harness import (
    CheckReport,
    HarnessReport,
    HarnessSettings,
    T1DetectionError,
    bol_curvature_floor,
    detect_t1,
    run_checks,
)
from .noose import NooseSummary, run_coupled
from .profile import ProfileError, ball_of_area
from .solver import DiagnosticRegions, FlowSeries, ProgressCallback, SolverConfig

logger = logging.getLogger("burstlab.experiment")

BURST_WINDOW = (0.75, 8.0 / 3.0 + 0.01)
MIN_BURST_LENGTH = 0.01
RECOVERY_THRESHOLD = 10.0
RECOVERY_FROM = 4.0
DESK_SCALE = 25.6


class ScenarioError(RuntimeError):
    """Raised when a scenario cannot reach phase detection; carries what was measured."""

    def __init__(self, message: str, report: HarnessReport | None = None) -> None:
        super().__init__(message)
        self.report = report


class ChecksFailedError(ScenarioError):
    """Raised when a required harness check fails; the report names the witnesses."""


@dataclass(frozen=True, slots=True)
class PhaseThresholds:
    burst: float | None = None
    recovery: float = RECOVERY_THRESHOLD
    recovery_from: float = RECOVERY_FROM

    def burst_level(self, r_c: float) -> float:
        return self.burst if self.burst is not None else 1.0 / r_c


@dataclass(frozen=True, slots=True)
class Phase:
    name: str
    start: float
    end: float

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True, slots=True)
class PhaseDecomposition:
    phases: list[Phase]
    burst_runs: list[tuple[float, float]]
    peak_sup_k: float
    peak_time: float
    recovery_time: float | None

    @property
    def ambiguous(self) -> bool:
        return len(self.burst_runs) > 1

    @property
    def burst_interval(self) -> tuple[float, float] | None:
        if not self.burst_runs:
            return None
        return max(self.burst_runs, key=lambda run: run[1] - run[0])

    def names(self) -> list[str]:
        return [phase.name for phase in self.phases]


def _runs(times: np.ndarray, above: np.ndarray) -> list[tuple[float, float]]:
    runs: list[tuple[float, float]] = []
    start: float | None = None
    for t, flag in zip(times, above):
        if flag and start is None:
            start = float(t)
        if not flag and start is not None:
            runs.append((start, float(previous)))
            start = None
        previous = t
    if start is not None:
        runs.append((start, float(times[-1])))
    return runs


def detect_phases(
    series: FlowSeries, r_c: float, thresholds: PhaseThresholds | None = None
) -> PhaseDecomposition:
    """Split [0, horizon] into bounded, burst and recovered phases."""

    thresholds = thresholds or PhaseThresholds()
    times = np.asarray(series.times)
    sup_k = np.array([d.sup_k for d in series.diagnostics])
    if times.size == 0:
        raise ValueError("series has no frames")
    level = thresholds.burst_level(r_c)
    runs = _runs(times, sup_k >= level)
    peak = int(np.argmax(sup_k))
    horizon = float(times[-1])
    if len(runs) > 1:
        warnings.warn(
            f"sup K crosses {level:.4g} {len(runs)} times; burst phase is ambiguous",
            RuntimeWarning,
            stacklevel=2,
        )

    if not runs:
        return PhaseDecomposition(
            phases=[Phase("bounded", 0.0, horizon)],
            burst_runs=[],
            peak_sup_k=float(sup_k[peak]),
            peak_time=float(times[peak]),
            recovery_time=None,
        )

    burst_start, burst_end = runs[0][0], runs[-1][1]
    phases = [Phase("bounded", 0.0, burst_start)] if burst_start > 0.0 else []
    phases.append(Phase("burst", burst_start, burst_end))
    recovery_time: float | None = None
    later = np.nonzero((times > burst_end) & (sup_k <= thresholds.recovery))[0]
    if later.size:
        recovery_time = float(times[later[0]])
        if recovery_time > burst_end:
            phases.append(Phase("transition", burst_end, recovery_time))
        phases.append(Phase("recovered", recovery_time, horizon))
    elif burst_end < horizon:
        phases.append(Phase("transition", burst_end, horizon))
    return PhaseDecomposition(
        phases=phases,
        burst_runs=runs,
        peak_sup_k=float(sup_k[peak]),
        peak_time=float(times[peak]),
        recovery_time=recovery_time,
    )


@dataclass(frozen=True, slots=True)
class BurstBall:
    """Tip ball of area 2πr_c at one frame and the curvature floor Bol's inequality gives."""

    t: float
    radius: float
    length: float
    area: float
    bol_floor: float
    sup_k: float


def burst_balls(series: FlowSeries, r_c: float, interval: tuple[float, float]) -> list[BurstBall]:
    balls = []
    for index in series.frames_between(*interval):
        profile = series.profiles[index]
        try:
            ball = ball_of_area(profile, 2.0 * math.pi * r_c)
        except ProfileError as exc:
            logger.debug("no burst ball at t=%.4f: %s", series.times[index], exc)
            continue
        balls.append(
            BurstBall(
                t=series.times[index],
                radius=ball.coordinate_radius,
                length=ball.boundary_length,
                area=ball.area,
                bol_floor=bol_curvature_floor(ball.boundary_length, ball.area),
                sup_k=series.diagnostics[index].sup_k,
            )
        )
    return balls


def _window_overlap(interval: tuple[float, float] | None) -> float:
    if interval is None:
        return 0.0
    return max(0.0, min(interval[1], BURST_WINDOW[1]) - max(interval[0], BURST_WINDOW[0]))


@dataclass(frozen=True, slots=True, eq=False)
class BurstReport:
    params: CBParams
    horizon: float
    t1: float
    phases: PhaseDecomposition
    harness: HarnessReport
    noose: NooseSummary
    early_bounded: bool
    recovered: bool | None
    plane_ceiling_constant: float | None
    evidence: list[BurstBall] = field(default_factory=list)
    series: FlowSeries | None = field(default=None, repr=False)

    @property
    def r_c(self) -> float:
        return self.params.r_c

    @property
    def burst_detected(self) -> bool:
        return self.phases.burst_interval is not None

    @property
    def burst_in_window(self) -> bool:
        return _window_overlap(self.phases.burst_interval) >= MIN_BURST_LENGTH

    @property
    def passed(self) -> bool:
        return (
            self.harness.passed
            and self.early_bounded
            and self.burst_in_window
            and self.recovered is not False
        )

    def row(self) -> dict[str, float | None]:
        interval = self.phases.burst_interval
        return {
            "r_c": self.params.r_c,
            "t1": self.t1,
            "burst_start": interval[0] if interval else None,
            "burst_end": interval[1] if interval else None,
            "peakK": self.phases.peak_sup_k,
            "recovery_time": self.phases.recovery_time,
        }

    def to_dict(self) -> dict[str, object]:
        interval = self.phases.burst_interval
        return {
            "params": self.params.to_dict(),
            "horizon": self.horizon,
            "t1": self.t1,
            "burst_interval": list(interval) if interval else None,
            "burst_runs": [list(run) for run in self.phases.burst_runs],
            "ambiguous": self.phases.ambiguous,
            "peak_sup_k": self.phases.peak_sup_k,
            "peak_time": self.phases.peak_time,
            "recovery_time": self.phases.recovery_time,
            "phases": [
                {"name": p.name, "start": p.start, "end": p.end} for p in self.phases.phases
            ],
            "early_bounded": self.early_bounded,
            "burst_in_window": self.burst_in_window,
            "recovered": self.recovered,
            "plane_ceiling_constant": self.plane_ceiling_constant,
            "noose": self.noose.to_dict(),
            "evidence": [
                {
                    "t": ball.t,
                    "radius": ball.radius,
                    "length": ball.length,
                    "area": ball.area,
                    "bol_floor": ball.bol_floor,
                    "sup_k": ball.sup_k,
                }
                for ball in self.evidence
            ],
            "harness": self.harness.to_dict(),
            "passed": self.passed,
        }


def _plane_ceiling(series: FlowSeries, params: CBParams, t_from: float) -> float | None:
    """Largest u + s − s_e on the plane side over frames with t ≥ t_from."""

    values = []
    for index in series.frames_between(t_from, math.inf):
        profile = series.profiles[index]
        mask = profile.s <= params.cylinder_start
        if np.any(mask):
            values.append(float(np.max(profile.u[mask] + profile.s[mask] - params.se)))
    return max(values) if values else None


def _check_scenario(r_c: float, l_c: float, horizon: float) -> None:
    if not 0.0 < r_c <= 0.1:
        raise ValueError(f"r_c must lie in (0, 1/10], got {r_c}")
    if l_c < 0.125 / r_c - 1e-12:
        raise ValueError(f"l_c must be at least 1/(8 r_c) = {0.125 / r_c}, got {l_c}")
    if not horizon > 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")


def run_cb_scenario(
    r_c: float,
    l_c: float,
    horizon: float = 4.5,
    config: SolverConfig | None = None,
    *,
    grid: GridSpec | None = None,
    checks: Sequence[str] | None = None,
    settings: HarnessSettings | None = None,
    thresholds: PhaseThresholds | None = None,
    progress_callback: ProgressCallback | None = None,
    keep_series: bool = True,
) -> BurstReport:
    """Build, flow with the loop, verify and split into phases."""

    _check_scenario(r_c, l_c, horizon)
    thresholds = thresholds or PhaseThresholds()
    params = solve_junctions(r_c, l_c)
    profile = build_cb_profile(params, grid)
    construction = cb_property_report(profile, params)
    if not construction.passed:
        raise ScenarioError("construction checks failed: " + "; ".join(construction.failures))

    regions = DiagnosticRegions(bulb_from=0.0, width_from=params.cylinder_start)
    coupled = run_coupled(
        profile,
        horizon,
        rho0=0.0,
        config=config,
        regions=regions,
        progress_callback=progress_callback,
    )
    series = coupled.series
    harness = run_checks(series, params, names=checks, noose=coupled.noose, settings=settings)
    if not series.complete:
        raise ScenarioError(f"flow incomplete: {series.failure}", harness)
    if harness.failures:
        names = ", ".join(r.name for r in harness.failures)
        raise ChecksFailedError(f"harness checks failed: {names}", harness)
    try:
        t1 = detect_t1(series, r_c, s_from=params.cylinder_start)
    except T1DetectionError as exc:
        raise ScenarioError(str(exc), harness) from exc

    phases = detect_phases(series, r_c, thresholds)
    early = harness.get("curvature_envelope")
    early_bounded = early is None or early.passed
    recovered: bool | None = None
    if horizon >= thresholds.recovery_from:
        late = [
            d.sup_k for d in series.diagnostics if d.t >= thresholds.recovery_from - 1e-12
        ]
        recovered = bool(late) and max(late) <= thresholds.recovery
    evidence = burst_balls(series, r_c, phases.burst_interval) if phases.burst_interval else []
    report = BurstReport(
        params=params,
        horizon=horizon,
        t1=t1,
        phases=phases,
        harness=harness,
        noose=coupled.noose,
        early_bounded=early_bounded,
        recovered=recovered,
        plane_ceiling_constant=_plane_ceiling(series, params, thresholds.recovery_from),
        evidence=evidence,
        series=series if keep_series else None,
    )
    logger.info(
        "r_c=%.4g: t1=%.4f peak sup K=%.4g at t=%.4f", r_c, t1, phases.peak_sup_k, phases.peak_time
    )
    return report


def rc_from_j(j: int, *, scale: float = DESK_SCALE) -> float:
    """r_c = scale/(256 j); the default scale maps j = 1, 2, 4, 8 to 1/10 … 1/80."""

    if j < 1:
        raise ValueError(f"j must be a positive integer, got {j}")
    return scale / (256.0 * j)


@dataclass(frozen=True, slots=True)
class SweepRow:
    r_c: float
    report: BurstReport | None = None
    error: str | None = None
    harness: HarnessReport | None = None

    @property
    def failures(self) -> list[CheckReport]:
        return self.harness.failures if self.harness is not None else []

    def row(self) -> dict[str, float | None]:
        if self.report is not None:
            return self.report.row()
        return {
            "r_c": self.r_c,
            "t1": None,
            "burst_start": None,
            "burst_end": None,
            "peakK": None,
            "recovery_time": None,
        }


@dataclass(frozen=True, slots=True)
class SweepTable:
    rows: list[SweepRow]

    def _completed(self) -> list[SweepRow]:
        return [row for row in self.rows if row.report is not None]

    @property
    def peaks(self) -> list[tuple[float, float]]:
        return [(row.r_c, row.report.phases.peak_sup_k) for row in self._completed()]  # type: ignore[union-attr]

    @property
    def exponent(self) -> float | None:
        """Slope of log(peak sup K) against log(1/r_c)."""

        peaks = self.peaks
        if len(peaks) < 2:
            return None
        x = np.log([1.0 / r for r, _ in peaks])
        y = np.log([k for _, k in peaks])
        return float(np.polyfit(x, y, 1)[0])

    @property
    def increasing(self) -> bool:
        ordered = sorted(self.peaks, key=lambda item: item[0], reverse=True)
        return all(b[1] > a[1] for a, b in zip(ordered, ordered[1:]))

    @property
    def above_floor(self) -> bool:
        return all(k >= 1.0 / r for r, k in self.peaks)

    def to_dict(self) -> dict[str, object]:
        return {
            "rows": [row.row() | {"error": row.error} for row in self.rows],
            "exponent": self.exponent,
            "increasing": self.increasing,
            "above_floor": self.above_floor,
        }


def _sweep_member(
    args: tuple[float, float, float, SolverConfig | None, GridSpec | None, HarnessSettings | None],
) -> SweepRow:
    r_c, l_c, horizon, config, grid, settings = args
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = run_cb_scenario(
                r_c, l_c, horizon, config, grid=grid, settings=settings, keep_series=False
            )
    except ChecksFailedError as exc:
        return SweepRow(r_c=r_c, error=f"ChecksFailedError: {exc}", harness=exc.report)
    except (ScenarioError, ValueError, RuntimeError) as exc:
        return SweepRow(r_c=r_c, error=f"{type(exc).__name__}: {exc}")
    return SweepRow(r_c=r_c, report=report)


def sweep_rc(
    r_list: Sequence[float],
    *,
    l_c_factor: float = 0.125,
    horizon: float = 4.5,
    config: SolverConfig | None = None,
    grid: GridSpec | None = None,
    settings: HarnessSettings | None = None,
    jobs: int = 1,
) -> SweepTable:
    """One scenario per r_c with l_c = l_c_factor/r_c; failures are recorded, not raised."""

    tasks = [(r_c, l_c_factor / r_c, horizon, config, grid, settings) for r_c in r_list]
    if jobs > 1:
        with Pool(jobs) as pool:
            rows = pool.map(_sweep_member, tasks)
    else:
        rows = [_sweep_member(task) for task in tasks]
    for row in rows:
        if row.error:
            warnings.warn(f"sweep member r_c={row.r_c:g} failed: {row.error}", RuntimeWarning, stacklevel=2)
    return SweepTable(rows=list(rows))
