"""Closed-form Ricci flows and static comparison metrics, loaded by name."""

from __future__ import annotations

from importlib import import_module
from typing import TYPE_CHECKING, Any, Protocol

import numpy as np

if TYPE_CHECKING:
    from ..exact import BarrierFn
else:
    BarrierFn = Any

FAMILY_NAMES = ("cigar", "sphere", "cusp", "plane", "cylinder")


class Family(Protocol):
    """Analytic conformal factor u(t, s) together with its derivatives."""

    name: str
    is_flow: bool

    def value(self, b: BarrierFn, t: float, s: np.ndarray) -> np.ndarray: ...

    def slope(self, b: BarrierFn, t: float, s: np.ndarray) -> np.ndarray: ...

    def second(self, b: BarrierFn, t: float, s: np.ndarray) -> np.ndarray: ...

    def rate(self, b: BarrierFn, t: float, s: np.ndarray) -> np.ndarray: ...

    def curvature(self, b: BarrierFn, t: float, s: np.ndarray) -> np.ndarray: ...

    def tail_area(self, b: BarrierFn, t: float, s: np.ndarray) -> np.ndarray: ...

    def in_domain(self, b: BarrierFn, t: float, s: np.ndarray) -> np.ndarray: ...

    def curvature_range(self, b: BarrierFn, t: float, s_from: float) -> tuple[float, float]: ...


_CACHE: dict[str, Family] = {}


def load_family(name: str) -> Family:
    """Instantiate the family implementation from its module name."""

    if name in _CACHE:
        return _CACHE[name]
    if name not in FAMILY_NAMES:
        raise ImportError(f"Unknown barrier family '{name}'")
    module = import_module(f"{__name__}.{name}")
    family_cls = getattr(module, "Family", None)
    if family_cls is None:
        raise ImportError(f"Family module '{name}' missing Family class")
    family = family_cls()
    _CACHE[name] = family
    return family
