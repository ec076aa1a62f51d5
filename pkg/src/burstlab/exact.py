"""Closed-form comparison solutions and the barriers built from them.

A `BarrierFn` names one of the families in `burstlab.families` together with its
scale and space-time shifts. The helpers below evaluate it on scalars or arrays,
check the domain first, and never extrapolate past a family's domain (a sphere
past extinction, a cusp left of its asymptote).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.special import logit

from .families import FAMILY_NAMES, Family, load_family

ArrayLike = float | np.ndarray
Residual = Callable[[ArrayLike, ArrayLike], np.ndarray]


class DomainError(ValueError):
    """Raised when a closed form is evaluated outside its space-time domain."""


@dataclass(frozen=True, slots=True)
class BarrierFn:
    """A member of one closed-form family."""

    family: str
    scale: float = 1.0
    s_shift: float = 0.0
    t_shift: float = 0.0
    extra: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.family not in FAMILY_NAMES:
            raise ValueError(f"Unknown barrier family '{self.family}'")
        if not (math.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError(f"{self.family}: scale must be positive, got {self.scale}")

    @property
    def impl(self) -> Family:
        return load_family(self.family)

    def to_dict(self) -> dict[str, object]:
        return {
            "family": self.family,
            "scale": self.scale,
            "s_shift": self.s_shift,
            "t_shift": self.t_shift,
            "extra": dict(self.extra),
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, object]) -> BarrierFn:
        extra = payload.get("extra") or {}
        return cls(
            family=str(payload["family"]),
            scale=float(payload.get("scale", 1.0)),  # type: ignore[arg-type]
            s_shift=float(payload.get("s_shift", 0.0)),  # type: ignore[arg-type]
            t_shift=float(payload.get("t_shift", 0.0)),  # type: ignore[arg-type]
            extra={str(k): float(v) for k, v in dict(extra).items()},  # type: ignore[call-overload]
        )


def cigar(scale: float = 1.0, s_shift: float = 0.0, t_shift: float = 0.0) -> BarrierFn:
    return BarrierFn("cigar", scale, s_shift, t_shift)


def sphere(radius: float, s_shift: float = 0.0, t_shift: float = 0.0) -> BarrierFn:
    return BarrierFn("sphere", radius, s_shift, t_shift)


def cusp(s_e: float, constant: float = 1.0) -> BarrierFn:
    return BarrierFn("cusp", constant, s_e, 0.0, {"s_e": s_e})


def plane(s_e: float, factor: float = 1.0) -> BarrierFn:
    return BarrierFn("plane", factor, s_e)


def cylinder(radius: float) -> BarrierFn:
    return BarrierFn("cylinder", radius)


def sphere_barrier(s_b: float) -> BarrierFn:
    """Round sphere of radius √2 centred at s_b, extinct at t = 1."""

    return sphere(math.sqrt(2.0), s_b)


def extinction_time(b: BarrierFn) -> float:
    """Extinction time of a sphere; +∞ for every other family."""

    if b.family != "sphere":
        return math.inf
    return b.t_shift + 0.5 * b.scale**2


def frozen_at(b: BarrierFn, t: float) -> BarrierFn:
    """The same metric as b at time t, re-parameterised so that it sits at t = 0."""

    if b.family == "sphere":
        radius_sq = b.scale**2 - 2.0 * (t - b.t_shift)
        if radius_sq <= 0.0:
            raise DomainError(f"sphere evaluated at t={t} past extinction {extinction_time(b)}")
        return sphere(math.sqrt(radius_sq), b.s_shift)
    if b.family == "cigar":
        return cigar(b.scale, b.s_shift - 2.0 * b.scale * (t - b.t_shift))
    return BarrierFn(b.family, b.scale, b.s_shift, 0.0, dict(b.extra))


def in_domain(b: BarrierFn, t: float, s: ArrayLike) -> np.ndarray:
    return np.asarray(b.impl.in_domain(b, float(t), np.asarray(s, dtype=float)), dtype=bool)


def _apply(name: str, b: BarrierFn, t: float, s: ArrayLike) -> ArrayLike:
    points = np.asarray(s, dtype=float)
    if not np.all(in_domain(b, t, points)):
        if b.family == "sphere":
            raise DomainError(f"sphere evaluated at t={t} past extinction {extinction_time(b)}")
        raise DomainError(f"{b.family} evaluated outside its domain at t={t}")
    result = getattr(b.impl, name)(b, float(t), points)
    if np.ndim(s) == 0:
        return float(result)
    return np.asarray(result, dtype=float)


def evaluate(b: BarrierFn, t: float, s: ArrayLike) -> ArrayLike:
    """Conformal factor u(t, s) of the barrier."""

    return _apply("value", b, t, s)


def slope(b: BarrierFn, t: float, s: ArrayLike) -> ArrayLike:
    return _apply("slope", b, t, s)


def second_derivative(b: BarrierFn, t: float, s: ArrayLike) -> ArrayLike:
    return _apply("second", b, t, s)


def time_derivative(b: BarrierFn, t: float, s: ArrayLike) -> ArrayLike:
    return _apply("rate", b, t, s)


def curvature(b: BarrierFn, t: float, s: ArrayLike) -> ArrayLike:
    """Gauss curvature −e^{−2u} u_ss in closed form."""

    return _apply("curvature", b, t, s)


def tail_area(b: BarrierFn, t: float, s: ArrayLike) -> ArrayLike:
    """Area of the region beyond s, i.e. 2π∫_s^∞ e^{2u}."""

    return _apply("tail_area", b, t, s)


def area(b: BarrierFn, t: float, s_a: float, s_b: float) -> float:
    """Area of the annulus s_a < s < s_b; s_a may be −∞ for families with a finite total."""

    if not s_a < s_b:
        raise DomainError(f"empty range [{s_a}, {s_b}]")
    upper = 0.0 if math.isinf(s_b) else float(tail_area(b, t, s_b))
    if math.isinf(s_a):
        if b.family != "sphere":
            raise DomainError(f"{b.family} has infinite area toward s = −∞")
        return 4.0 * math.pi * (b.scale**2 - 2.0 * (t - b.t_shift)) - upper
    return float(tail_area(b, t, s_a)) - upper


def curvature_range(b: BarrierFn, t: float, s_from: float) -> tuple[float, float]:
    """Infimum and supremum of K over s ≥ s_from."""

    _apply("value", b, t, s_from)
    return b.impl.curvature_range(b, float(t), float(s_from))


@dataclass(frozen=True, slots=True)
class EnvelopeReport:
    """Outcome of the two-sided cigar estimates and the sphere domination."""

    samples: int
    lower_ok: bool
    upper_ok: bool
    sphere_ok: bool
    worst_margin: float
    worst_s: float

    @property
    def passed(self) -> bool:
        return self.lower_ok and self.upper_ok and self.sphere_ok


def cigar_envelope_checks(lam: float, s_grid: ArrayLike, *, tol: float = 1e-12) -> EnvelopeReport:
    """Check −½log2 − s⁺ ≤ C_λ + ½log λ ≤ −s⁺ and −log cosh s ≤ C_{1/4}(s) on s_grid."""

    s = np.atleast_1d(np.asarray(s_grid, dtype=float))
    shift = 0.5 * math.log(lam)
    c = np.asarray(evaluate(cigar(lam), 0.0, s)) + shift
    positive = np.maximum(s, 0.0)
    lower_margin = c - (-0.5 * math.log(2.0) - positive)
    upper_margin = -positive - c
    log_cosh = np.logaddexp(s, -s) - math.log(2.0)
    sphere_margin = np.asarray(evaluate(cigar(0.25), 0.0, s)) + log_cosh

    margins = np.minimum(np.minimum(lower_margin, upper_margin), sphere_margin)
    worst = int(np.argmin(margins))
    return EnvelopeReport(
        samples=int(s.size),
        lower_ok=bool(np.all(lower_margin >= -tol)),
        upper_ok=bool(np.all(upper_margin >= -tol)),
        sphere_ok=bool(np.all(sphere_margin >= -tol)),
        worst_margin=float(margins[worst]),
        worst_s=float(s[worst]),
    )


@dataclass(frozen=True, slots=True)
class TailArea:
    exact: float
    bound: float

    @property
    def ordered(self) -> bool:
        return self.exact >= self.bound


def cigar_tail_area(lam: float, t: float, s: float) -> TailArea:
    """Area of the cigar beyond s and its linear lower bound −2πλ^{−1}(2λt + s)."""

    phase = 2.0 * lam * t + s
    if phase >= 0.0:
        raise DomainError(f"tail-area bound needs 2λt + s < 0, got {phase}")
    exact = float(tail_area(cigar(lam), t, s))
    return TailArea(exact=exact, bound=-2.0 * math.pi * phase / lam)


def is_exact_flow(b: BarrierFn) -> Residual:
    """Return (t, s) ↦ u_t − e^{−2u}u_ss for a family that solves the flow."""

    if not b.impl.is_flow:
        raise DomainError(f"{b.family} is static but not a Ricci flow")

    def residual(t: ArrayLike, s: ArrayLike) -> np.ndarray:
        times = np.atleast_1d(np.asarray(t, dtype=float))
        points = np.atleast_1d(np.asarray(s, dtype=float))
        times, points = np.broadcast_arrays(times, points)
        out = np.empty(points.shape, dtype=float)
        for index, (tt, ss) in enumerate(zip(times.ravel(), points.ravel())):
            u = float(evaluate(b, tt, ss))
            diffusion = math.exp(-2.0 * u) * float(second_derivative(b, tt, ss))
            out.flat[index] = float(time_derivative(b, tt, ss)) - diffusion
        return out

    return residual


def fit_cap(
    s_max: float,
    value: float,
    slope_at_end: float,
    *,
    curvature_hint: float | None = None,
) -> BarrierFn:
    """Fit a tip cap through (s_max, value) with the given slope.

    Slopes at or below −1 give a flat-plane cap; otherwise a sphere and a cigar
    are both matched and the one whose curvature at s_max is closer to
    `curvature_hint` wins (sphere when no hint is given).
    """

    if slope_at_end >= 0.0:
        raise DomainError(f"cap slope must be negative, got {slope_at_end}")
    if slope_at_end <= -1.0 + 1e-12:
        return plane(s_max, math.exp(value))

    y = math.atanh(-slope_at_end)
    log_cosh = float(np.logaddexp(y, -y)) - math.log(2.0)
    sphere_cap = sphere(math.exp(value + log_cosh), s_max - y)

    x = 0.5 * float(logit(-slope_at_end))
    base = -0.5 * float(np.logaddexp(2.0 * x, 0.0))
    cigar_cap = cigar(math.exp(-2.0 * (value - base)), s_max - x)

    if curvature_hint is None:
        return sphere_cap
    sphere_gap = abs(float(curvature(sphere_cap, 0.0, s_max)) - curvature_hint)
    cigar_gap = abs(float(curvature(cigar_cap, 0.0, s_max)) - curvature_hint)
    return cigar_cap if cigar_gap < sphere_gap else sphere_cap
