"""Sampling plans over (center, radius) families and the shared machinery
for supremum-style condition checks with divergence detection.

"for all x and R > 0" conditions are realized by a documented plan of
support-driven centers and log-spaced radii; verdicts come with a log-log
divergence slope and a stability figure under plan refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .measures import Measure

__all__ = ["SamplingPlan", "ConditionReport", "sup_condition_report"]


@dataclass(frozen=True)
class SamplingPlan:
    """Centers and log-spaced radii realizing a 'for all balls' quantifier."""

    centers: tuple  # tuple of n-vectors (as tuples, for immutability)
    r_min: float
    r_max: float
    per_decade: int = 8

    def __post_init__(self):
        if not (0 < self.r_min < self.r_max):
            raise ValueError("need 0 < r_min < r_max")
        if self.per_decade < 2:
            raise ValueError("per_decade must be at least 2")
        if len(self.centers) == 0:
            raise ValueError("plan needs at least one center")

    @property
    def radii(self) -> np.ndarray:
        decades = math.log10(self.r_max / self.r_min)
        count = max(int(math.ceil(decades * self.per_decade)), 2)
        return np.geomspace(self.r_min, self.r_max, count + 1)

    def center_array(self) -> np.ndarray:
        return np.asarray(self.centers, dtype=float)

    def refined(self, factor: int = 2) -> "SamplingPlan":
        """Plan with the radii density multiplied by the given factor."""
        return SamplingPlan(self.centers, self.r_min, self.r_max,
                            self.per_decade * factor)

    def with_r_min(self, r_min: float) -> "SamplingPlan":
        return SamplingPlan(self.centers, r_min, self.r_max, self.per_decade)

    @property
    def samples(self) -> int:
        return len(self.centers) * len(self.radii)

    @classmethod
    def for_measure(cls, mu: Measure, r_min: float | None = None,
                    r_max: float | None = None, per_decade: int = 8,
                    extra_centers=(), max_centers: int = 48) -> "SamplingPlan":
        """Support-driven centers plus a coarse lattice over the support box."""
        pts = [np.asarray(c, dtype=float) for c in extra_centers]
        sup = mu.support_points()
        for row in sup[:max_centers]:
            pts.append(np.asarray(row, dtype=float))
        sb = mu.support_ball()
        if sb is not None:
            pts.append(sb.center)
            scale = max(sb.radius, 1e-6)
            # a small deterministic lattice around the support
            n = mu.dim
            for frac in (-0.5, 0.5):
                for axis in range(n):
                    v = sb.center.copy()
                    v[axis] += frac * scale
                    pts.append(v)
        else:
            scale = 1.0
            pts.append(np.zeros(mu.dim))
        uniq = []
        seen = set()
        for v in pts:
            key = tuple(np.round(v, 12))
            if key not in seen:
                seen.add(key)
                uniq.append(key)
            if len(uniq) >= max_centers:
                break
        r_min = r_min if r_min is not None else scale * 1e-3
        r_max = r_max if r_max is not None else scale * 1e2
        return cls(tuple(uniq), r_min, r_max, per_decade)


@dataclass
class ConditionReport:
    """Outcome of a supremum-style growth check over a sampling plan."""

    criterion: str
    sup_constant: float
    achieving_center: tuple | None
    achieving_radius: float | None
    samples: int
    verdict: str  # "finite" or "divergent"
    divergence_exponent: float | None = None
    stability: float | None = None
    notes: dict = field(default_factory=dict)

    @property
    def finite(self) -> bool:
        return self.verdict == "finite"


def _edge_slope(radii: np.ndarray, values: np.ndarray, lower_edge: bool,
                points: int = 5) -> float | None:
    mask = values > 0
    if mask.sum() < 3:
        return None
    r = radii[mask]
    v = values[mask]
    if lower_edge:
        r, v = r[:points], v[:points]
    else:
        r, v = r[-points:], v[-points:]
    if len(r) < 3:
        return None
    coef = np.polyfit(np.log(r), np.log(v), 1)
    return float(coef[0])


def sup_condition_report(criterion: str, ratio_fn, plan: SamplingPlan,
                         stability_check: bool = True,
                         slope_threshold: float = 0.05) -> ConditionReport:
    """Supremum of ratio_fn(center, radii) over the plan with divergence logic.

    ratio_fn maps (center vector, radii array) to an array of nonnegative
    ratios (np.inf allowed).  The verdict is divergent when an infinity is
    seen, when the sup sits at the radius boundary with a nonzero log-log
    slope, or when refining the plan moves the sup by more than 10%.
    """

    def scan(p: SamplingPlan):
        radii = p.radii
        best = (0.0, None, None)
        profile = np.zeros(len(radii))
        inf_seen = False
        for c in p.center_array():
            vals = np.asarray(ratio_fn(c, radii), dtype=float)
            if np.any(np.isinf(vals)):
                inf_seen = True
                vals = np.where(np.isinf(vals), np.nan, vals)
            vmax = np.nanmax(vals) if np.any(np.isfinite(vals)) else 0.0
            profile = np.fmax(profile, np.nan_to_num(vals, nan=0.0))
            if vmax > best[0]:
                k = int(np.nanargmax(vals))
                best = (float(vmax), tuple(c), float(radii[k]))
        return best, profile, inf_seen

    (sup, ac, ar), profile, inf_seen = scan(plan)
    radii = plan.radii

    divergence_exponent = None
    verdict = "finite"
    if inf_seen:
        verdict = "divergent"
    elif sup > 0:
        idx = int(np.argmax(profile))
        if idx <= 1:
            slope = _edge_slope(radii, profile, lower_edge=True)
            if slope is not None and slope < -slope_threshold:
                verdict = "divergent"
                divergence_exponent = slope
        elif idx >= len(radii) - 2:
            slope = _edge_slope(radii, profile, lower_edge=False)
            if slope is not None and slope > slope_threshold:
                verdict = "divergent"
                divergence_exponent = slope

    stability = None
    if stability_check and verdict == "finite" and sup > 0:
        (sup2, _, _), _, inf2 = scan(plan.refined())
        stability = abs(sup2 - sup) / max(sup, sup2)
        if inf2 or stability > 0.10:
            verdict = "divergent"
        sup = max(sup, sup2)
    if verdict == "divergent" and divergence_exponent is None and sup > 0:
        divergence_exponent = _edge_slope(radii, profile, lower_edge=True)

    return ConditionReport(criterion, sup if verdict == "finite" else sup,
                           ac, ar, plan.samples, verdict,
                           divergence_exponent, stability)
