"""Hamilton's cigar soliton C_λ(t, s) = C(2λt + s) − ½log λ."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit


def _phase(b, t: float, s: np.ndarray) -> np.ndarray:
    return 2.0 * b.scale * (t - b.t_shift) + (s - b.s_shift)


class Family:
    """Steady soliton translating toward s = −∞ at speed 2λ."""

    name = "cigar"
    is_flow = True

    def value(self, b, t, s):
        # C(x) = −½log(e^{2x} + 1), evaluated without overflow
        x = _phase(b, t, s)
        return -0.5 * np.logaddexp(2.0 * x, 0.0) - 0.5 * math.log(b.scale)

    def slope(self, b, t, s):
        return -expit(2.0 * _phase(b, t, s))

    def second(self, b, t, s):
        x = _phase(b, t, s)
        return -2.0 * expit(2.0 * x) * expit(-2.0 * x)

    def rate(self, b, t, s):
        return 2.0 * b.scale * self.slope(b, t, s)

    def curvature(self, b, t, s):
        return 2.0 * b.scale * expit(2.0 * _phase(b, t, s))

    def tail_area(self, b, t, s):
        return (math.pi / b.scale) * np.logaddexp(-2.0 * _phase(b, t, s), 0.0)

    def in_domain(self, b, t, s):
        return np.ones_like(np.asarray(s, dtype=float), dtype=bool)

    def curvature_range(self, b, t, s_from):
        low = float(self.curvature(b, t, np.asarray(s_from, dtype=float)))
        return low, 2.0 * b.scale
