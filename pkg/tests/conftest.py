"""Test configuration that ensures src/ is importable."""

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
SRC = ROOT / "src"

sys.path.insert(0, str(SRC))

from burstlab import exact  # noqa: E402
from burstlab.profile import RadialProfile  # noqa: E402


@pytest.fixture
def sphere_profile() -> RadialProfile:
    """Round sphere of radius √2 on [−3, 3] with its analytic cap."""

    s = np.linspace(-3.0, 3.0, 601)
    barrier = exact.sphere_barrier(0.0)
    return RadialProfile(s, np.asarray(exact.evaluate(barrier, 0.0, s)), barrier)


@pytest.fixture
def cylinder_profile() -> RadialProfile:
    s = np.linspace(0.0, 2.0, 41)
    return RadialProfile(s, np.full(s.shape, np.log(0.5)))
