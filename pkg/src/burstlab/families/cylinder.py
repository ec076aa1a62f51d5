"""Static flat cylinder of radius r."""

from __future__ import annotations

import math

import numpy as np


class Family:
    name = "cylinder"
    is_flow = True

    def value(self, b, t, s):
        return np.full_like(np.asarray(s, dtype=float), math.log(b.scale))

    def slope(self, b, t, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def second(self, b, t, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def rate(self, b, t, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def curvature(self, b, t, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def tail_area(self, b, t, s):
        return np.full_like(np.asarray(s, dtype=float), math.inf)

    def in_domain(self, b, t, s):
        return np.ones_like(np.asarray(s, dtype=float), dtype=bool)

    def curvature_range(self, b, t, s_from):
        return 0.0, 0.0
