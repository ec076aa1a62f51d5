"""Hyperbolic cusp C²(ds² + dθ²)/(s − s_e)²; static, not a Ricci flow."""

from __future__ import annotations

import math

import numpy as np


def _offset(b, s: np.ndarray) -> np.ndarray:
    return s - b.extra.get("s_e", b.s_shift)


class Family:
    """u = log C − log(s − s_e) on s > s_e."""

    name = "cusp"
    is_flow = False

    def value(self, b, t, s):
        return math.log(b.scale) - np.log(_offset(b, s))

    def slope(self, b, t, s):
        return -1.0 / _offset(b, s)

    def second(self, b, t, s):
        return 1.0 / _offset(b, s) ** 2

    def rate(self, b, t, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def curvature(self, b, t, s):
        return np.full_like(np.asarray(s, dtype=float), -1.0 / b.scale**2)

    def tail_area(self, b, t, s):
        return 2.0 * math.pi * b.scale**2 / _offset(b, s)

    def in_domain(self, b, t, s):
        return _offset(b, np.asarray(s, dtype=float)) > 0.0

    def curvature_range(self, b, t, s_from):
        k = -1.0 / b.scale**2
        return k, k
