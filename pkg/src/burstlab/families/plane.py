"""Static flat plane a²|dz|² in the chart z = e^{−s + s_shift + iθ}."""

from __future__ import annotations

import math

import numpy as np


class Family:
    """u = log a − (s − s_shift)."""

    name = "plane"
    is_flow = True

    def value(self, b, t, s):
        return math.log(b.scale) - (s - b.s_shift)

    def slope(self, b, t, s):
        return np.full_like(np.asarray(s, dtype=float), -1.0)

    def second(self, b, t, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def rate(self, b, t, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def curvature(self, b, t, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def tail_area(self, b, t, s):
        return math.pi * np.exp(2.0 * self.value(b, t, s))

    def in_domain(self, b, t, s):
        return np.ones_like(np.asarray(s, dtype=float), dtype=bool)

    def curvature_range(self, b, t, s_from):
        return 0.0, 0.0
