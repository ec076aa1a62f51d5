"""Registry of the named verification checks.

Each registry entry defines:
1. A short name used on the command line and in reports.
2. A display name and optional documentation.
3. What the check needs (a plain flow, detected t₁, or the coupled loop) and
   whether a failure makes a run fail.

The harness looks entries up by name; the CLI prints them for --list-checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

NEEDS = ("flow", "t1", "noose")


@dataclass(frozen=True, slots=True)
class CheckRule:
    """Metadata for one check."""

    name: str
    full_name: str
    needs: str = "flow"
    required: bool = True
    documentation: str | None = None


def find_check(name: str) -> CheckRule | None:
    """Return the rule registered under name, if any."""

    for rule in _iter_rules():
        if rule.name == name:
            return rule
    return None


def list_checks() -> list[CheckRule]:
    """Return all checks in evaluation order."""

    return list(_iter_rules())


def unknown_checks(names: Sequence[str]) -> list[str]:
    known = {rule.name for rule in _iter_rules()}
    return [name for name in names if name not in known]


def _iter_rules() -> Iterable[CheckRule]:
    """Yield all checks in evaluation order."""

    return (
        CheckRule(
            name="curvature_envelope",
            full_name="Early curvature envelope",
            documentation="sup K ≤ 1/(2(1−t)) + 1e−2 for recorded t ≤ 0.9.",
        ),
        CheckRule(
            name="chen",
            full_name="Curvature lower bound",
            documentation="K ≥ −1/(2t+1) at every interior node of every frame.",
        ),
        CheckRule(
            name="chen_growth",
            full_name="Conformal factor growth bound",
            documentation="u(t₂) − u(t₁) ≤ ½log((2t₂+1)/(2t₁+1)) nodewise for all t₁ < t₂.",
        ),
        CheckRule(
            name="plane_floor",
            full_name="Static plane floor",
            documentation="u(t, s) ≥ −s + s_e at every node.",
        ),
        CheckRule(
            name="sphere_barrier",
            full_name="Shrinking sphere floor",
            documentation="u(t, s) ≥ −log cosh(s − s_b) + ½log 2(1−t) for t < 1.",
        ),
        CheckRule(
            name="coarse_cigar",
            full_name="Coarse cigar ceiling",
            documentation="u ≤ C_{1/8}(t, s − s_b) for t ≤ min(horizon, 1/r_c), s ≥ −l_c/r_c.",
        ),
        CheckRule(
            name="cylinder_cap",
            full_name="Cylinder end ceiling",
            documentation="u(t, −l_c/r_c) ≤ log r_c + ½log(2t+1) at every recorded t.",
        ),
        CheckRule(
            name="claim_floor",
            full_name="Two-piece floor at t₁",
            needs="t1",
            documentation="u(t₁, s) ≥ log r_c left of the maximum s₁ and ≥ s₁ − s + log r_c beyond.",
        ),
        CheckRule(
            name="refined_upper",
            full_name="Refined cigar ceiling",
            needs="t1",
            documentation="u ≤ C_{(4r_c)^{−2}}(t − t₁, s − 2/r_c) on [t₁, t₁+1], s ≥ −l_c/r_c.",
        ),
        CheckRule(
            name="refined_lower",
            full_name="Refined cigar floor",
            needs="t1",
            documentation="u ≥ C_{r_c^{−2}}(t − t₁, s) for t ≥ t₁.",
        ),
        CheckRule(
            name="burst_area_window",
            full_name="Cylinder and bulb area window",
            needs="t1",
            documentation="Area of s ≥ −l_c/r_c is ≥ 2πr_c on [t₁, t₁ + r_c(l_c−1)/2].",
        ),
        CheckRule(
            name="cusp_domination",
            full_name="Hyperbolic cusp ceiling",
            needs="t1",
            documentation="u ≤ −log(s − s_e) + log 15 at t₁+1 and + log 16 at t = 7/2.",
        ),
        CheckRule(
            name="cusp_envelope",
            full_name="Cusp envelope after t₁+1",
            needs="t1",
            documentation="u ≤ −log(s − s_e) + ½log(2(t − t₁) + 225) for t ≥ t₁+1.",
        ),
        CheckRule(
            name="plane_ceiling",
            full_name="Plane ceiling at t = 15/4",
            documentation="u ≤ −s + s_e + ½log 68 for s ≤ s_e + log 2.",
        ),
        CheckRule(
            name="burst_decay",
            full_name="Curvature decay after the burst",
            documentation="sup K is non-increasing, within 1%, after the last run above 1/r_c and from t = 4.",
        ),
        CheckRule(
            name="bol",
            full_name="Bol isoperimetric inequality",
            documentation="L² ≥ 4πA − A² sup K on seeded tip balls of every sampled frame.",
        ),
        CheckRule(
            name="pseudolocality",
            full_name="Pseudolocality time on the cylinder",
            required=False,
            documentation="Largest t* with |K| ≤ 2r₀^{−2} on the half region; reports r₀²/t*.",
        ),
        CheckRule(
            name="area_law",
            full_name="Loop area law",
            needs="noose",
            documentation="Enclosed area A(t) = A(0) − 4πt within 1% of A(0).",
        ),
        CheckRule(
            name="extinction_time",
            full_name="Loop extinction time",
            needs="noose",
            documentation="|T − A(0)/4π| ≤ 5% of T and T < 5/2 for the loop started on the bulb boundary.",
        ),
        CheckRule(
            name="noose_length",
            full_name="Moving loop length",
            needs="noose",
            documentation="L(t₂) ≤ √((2t₂+1)/(2t₁+1)) L(t₁) along the loop.",
        ),
        CheckRule(
            name="width",
            full_name="Width at extinction",
            needs="noose",
            documentation="u(T, s) ≤ log r_c + ½log(2T+1) for s ≥ −l_c/r_c at the loop's extinction.",
        ),
    )
