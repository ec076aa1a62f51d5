"""Shrinking round sphere of radius r at t_shift, extinct at t_shift + r²/2."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit


def _log_cosh(y: np.ndarray) -> np.ndarray:
    return np.logaddexp(y, -y) - math.log(2.0)


def _radius_squared(b, t: float) -> float:
    return b.scale**2 - 2.0 * (t - b.t_shift)


class Family:
    """u = −log cosh(s − s_shift) + ½log(r² − 2(t − t_shift))."""

    name = "sphere"
    is_flow = True

    def extinction_time(self, b) -> float:
        return b.t_shift + 0.5 * b.scale**2

    def value(self, b, t, s):
        return -_log_cosh(s - b.s_shift) + 0.5 * math.log(_radius_squared(b, t))

    def slope(self, b, t, s):
        return -np.tanh(s - b.s_shift)

    def second(self, b, t, s):
        return -np.exp(-2.0 * _log_cosh(s - b.s_shift))

    def rate(self, b, t, s):
        return np.full_like(np.asarray(s, dtype=float), -1.0 / _radius_squared(b, t))

    def curvature(self, b, t, s):
        return np.full_like(np.asarray(s, dtype=float), 1.0 / _radius_squared(b, t))

    def tail_area(self, b, t, s):
        # 2π R² (1 − tanh y) with 1 − tanh y = 2·expit(−2y)
        return 4.0 * math.pi * _radius_squared(b, t) * expit(-2.0 * (s - b.s_shift))

    def in_domain(self, b, t, s):
        alive = _radius_squared(b, t) > 0.0
        return np.full_like(np.asarray(s, dtype=float), alive, dtype=bool)

    def curvature_range(self, b, t, s_from):
        k = 1.0 / _radius_squared(b, t)
        return k, k
