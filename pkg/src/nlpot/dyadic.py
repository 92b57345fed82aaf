"""Dyadic cube machinery: dyadic and modified dyadic Wolff potentials,
Carleson sums over truncated cube families, the finite intersection count
for tripled cubes, and the measure-pairing inequality check that compares
integral (W_p mu)^(p-1) d sigma against integral (W_p sigma) d mu.

Cubes are half-open, 2^k * [m, m+1)^n; containment is decided in integer
arithmetic on lattice indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import SpaceParams
from .measures import Measure
from .potentials import QuadratureConfig, DEFAULT_CFG, wolff

__all__ = [
    "DyadicCube",
    "DyadicFamily",
    "DyadicSumResult",
    "dyadic_wolff",
    "modified_dyadic_wolff",
    "carleson_sum",
    "carleson_constant",
    "CarlesonReport",
    "finite_intersection_count",
    "wolff_pairing_check",
    "WolffPairingResult",
]


@dataclass(frozen=True)
class DyadicCube:
    """Half-open dyadic cube 2^level * [index, index+1)^n."""

    level: int
    index: tuple

    @property
    def dim(self) -> int:
        return len(self.index)

    @property
    def side(self) -> float:
        return 2.0 ** self.level

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        m = np.asarray(self.index, dtype=float)
        side = self.side
        return m * side, (m + 1.0) * side

    def center(self) -> np.ndarray:
        lo, hi = self.bounds()
        return 0.5 * (lo + hi)

    def tripled_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Bounds of the concentric cube with three times the side length."""
        m = np.asarray(self.index, dtype=float)
        side = self.side
        return (m - 1.0) * side, (m + 2.0) * side

    def contains_point(self, x) -> bool:
        lo, hi = self.bounds()
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= lo) and np.all(x < hi))

    def tripled_contains(self, x) -> bool:
        lo, hi = self.tripled_bounds()
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= lo) and np.all(x < hi))

    def contains_cube(self, other: "DyadicCube") -> bool:
        """Exact integer test for other being a subcube of self."""
        if other.level > self.level:
            return False
        shift = self.level - other.level
        # python's >> is an arithmetic shift, i.e. floor division by 2^shift
        return all((m >> shift) == mm for m, mm in zip(other.index, self.index))

    def children(self) -> list["DyadicCube"]:
        n = self.dim
        kids = []
        for bits in range(2 ** n):
            idx = tuple(2 * m + ((bits >> i) & 1) for i, m in enumerate(self.index))
            kids.append(DyadicCube(self.level - 1, idx))
        return kids

    @staticmethod
    def containing(x, level: int) -> "DyadicCube":
        x = np.asarray(x, dtype=float)
        side = 2.0 ** level
        idx = tuple(int(math.floor(v / side)) for v in x)
        return DyadicCube(level, idx)


@dataclass(frozen=True)
class DyadicFamily:
    """Dyadic cubes at levels k_min..k_max whose closure meets a bounding box."""

    k_min: int
    k_max: int
    region_lo: tuple
    region_hi: tuple

    def __post_init__(self):
        if self.k_min > self.k_max:
            raise ValueError("need k_min <= k_max")
        lo = np.asarray(self.region_lo, dtype=float)
        hi = np.asarray(self.region_hi, dtype=float)
        if np.any(hi <= lo):
            raise ValueError("region needs lo < hi componentwise")

    @property
    def dim(self) -> int:
        return len(self.region_lo)

    @classmethod
    def around(cls, mu: Measure, k_min: int, k_max: int, pad: float = 0.0
               ) -> "DyadicFamily":
        sb = mu.support_ball()
        if sb is None:
            raise ValueError("a bounded support is needed to derive the region")
        lo = sb.center - sb.radius - pad
        hi = sb.center + sb.radius + pad
        return cls(k_min, k_max, tuple(lo), tuple(hi))

    def levels(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def contains_level(self, k: int) -> bool:
        return self.k_min <= k <= self.k_max

    def cubes_at_level(self, k: int):
        """All level-k cubes intersecting the region (half-open boxes)."""
        side = 2.0 ** k
        lo = np.asarray(self.region_lo, dtype=float)
        hi = np.asarray(self.region_hi, dtype=float)
        los = [int(math.floor(l / side)) for l in lo]
        his = [int(math.ceil(h / side)) for h in hi]
        ranges = [range(a, max(b, a + 1)) for a, b in zip(los, his)]
        import itertools
        for idx in itertools.product(*ranges):
            yield DyadicCube(k, idx)

    def cube_containing(self, x, k: int) -> DyadicCube:
        if not self.contains_level(k):
            raise ValueError("level outside the family truncation")
        return DyadicCube.containing(x, k)


@dataclass
class DyadicSumResult:
    """Truncated dyadic sum with per-level terms and divergence diagnostics."""

    value: float
    per_level: dict  # level -> contribution
    divergent: bool
    growth_rate: float | None = None
    truncation_estimate: float | None = None

    def __float__(self):
        return self.value


def _bottom_growth(per_level: dict) -> tuple[bool, float | None]:
    """Detect per-level terms increasing geometrically toward small cubes."""
    levels = sorted(per_level)
    vals = [per_level[k] for k in levels]
    nz = [(k, v) for k, v in zip(levels, vals) if v > 0]
    if len(nz) < 3:
        return False, None
    bottom = nz[:4]
    ratios = [bottom[i][1] / bottom[i + 1][1] for i in range(len(bottom) - 1)
              if bottom[i + 1][1] > 0]
    if len(ratios) >= 2 and all(r > 1.05 for r in ratios):
        rate = float(np.mean([math.log2(r) for r in ratios]))
        return True, rate
    return False, None


def _term(mass: float, side: float, sp: SpaceParams) -> float:
    if mass <= 0:
        return 0.0
    return (mass / side ** (sp.n - sp.p)) ** (1.0 / (sp.p - 1.0))


def dyadic_wolff(mu: Measure, x, sp: SpaceParams, fam: DyadicFamily,
                 tol: float = 1e-9) -> DyadicSumResult:
    """Sum over family cubes containing x of (mu(Q)/side^(n-p))^(1/(p-1))."""
    per_level = {}
    for k in fam.levels():
        q = fam.cube_containing(x, k)
        lo, hi = q.bounds()
        per_level[k] = _term(mu.cube_mass(lo, hi, tol), q.side, sp)
    divergent, rate = _bottom_growth(per_level)
    return DyadicSumResult(float(sum(per_level.values())), per_level, divergent, rate)


def modified_dyadic_wolff(mu: Measure, x, sp: SpaceParams, fam: DyadicFamily,
                          tol: float = 1e-9) -> DyadicSumResult:
    """As dyadic_wolff but each cube mass is taken over the tripled cube."""
    per_level = {}
    for k in fam.levels():
        q = fam.cube_containing(x, k)
        lo, hi = q.tripled_bounds()
        per_level[k] = _term(mu.cube_mass(lo, hi, tol), q.side, sp)
    divergent, rate = _bottom_growth(per_level)
    return DyadicSumResult(float(sum(per_level.values())), per_level, divergent, rate)


def carleson_sum(sigma: Measure, P: DyadicCube, sp: SpaceParams,
                 fam: DyadicFamily, tol: float = 1e-9,
                 max_cubes: int = 3_000_000) -> DyadicSumResult:
    """Sum over family cubes Q inside P of sigma(Q)^p' / side(Q)^((n-p)/(p-1)).

    Zero-mass subtrees are pruned; positive measures vanish on children of a
    zero-mass cube.
    """
    pp = sp.p_prime
    expo = (sp.n - sp.p) / (sp.p - 1.0)
    per_level: dict[int, float] = {k: 0.0 for k in fam.levels() if k <= P.level}
    visited = 0
    stack = [P]
    while stack:
        q = stack.pop()
        visited += 1
        if visited > max_cubes:
            raise RuntimeError("carleson_sum exceeded the cube budget; "
                               "raise max_cubes or shrink the family depth")
        lo, hi = q.bounds()
        m = sigma.cube_mass(lo, hi, tol)
        if m <= 0.0:
            continue
        if fam.contains_level(q.level):
            per_level[q.level] += m ** pp / q.side ** expo
        if q.level > fam.k_min:
            stack.extend(q.children())
    divergent, rate = _bottom_growth(per_level)
    trunc = None
    levels = sorted(per_level)
    if len(levels) >= 2 and not divergent:
        t0, t1 = per_level[levels[0]], per_level[levels[1]]
        if t1 > 0 and t0 < t1:
            r = t0 / t1
            trunc = t0 * r / (1.0 - r)
        elif t0 == 0.0:
            trunc = 0.0
    return DyadicSumResult(float(sum(per_level.values())), per_level,
                           divergent, rate, trunc)


@dataclass
class CarlesonReport:
    constant: float
    achieving: DyadicCube | None
    divergent: bool
    growth_rate: float | None
    candidates: int


def carleson_constant(sigma: Measure, sp: SpaceParams, fam: DyadicFamily,
                      tol: float = 1e-9, top_levels: int = 3) -> CarlesonReport:
    """sup over cubes P with sigma(P) > 0 of carleson_sum(P) / sigma(P).

    P ranges over the top family levels plus the chains of cubes containing
    each support point, which is where divergence (if any) concentrates.
    """
    candidates: list[DyadicCube] = []
    seen = set()
    for k in range(fam.k_max, max(fam.k_max - top_levels, fam.k_min) - 1, -1):
        for q in fam.cubes_at_level(k):
            key = (q.level, q.index)
            if key not in seen:
                seen.add(key)
                candidates.append(q)
    for pt in sigma.support_points():
        for k in fam.levels():
            q = DyadicCube.containing(pt, k)
            key = (q.level, q.index)
            if key not in seen:
                seen.add(key)
                candidates.append(q)

    best = 0.0
    best_cube = None
    chain_vals: dict[tuple, float] = {}
    divergent = False
    rate = None
    count = 0
    for q in candidates:
        lo, hi = q.bounds()
        m = sigma.cube_mass(lo, hi, tol)
        if m <= 0.0:
            continue
        count += 1
        res = carleson_sum(sigma, q, sp, fam, tol)
        val = res.value / m
        if res.divergent:
            divergent = True
            rate = res.growth_rate
        if val > best:
            best = val
            best_cube = q
        chain_vals[(q.level, q.index)] = val
    if count == 0:
        return CarlesonReport(0.0, None, False, None, 0)
    return CarlesonReport(best, best_cube, divergent, rate, count)


def finite_intersection_count(x, k: int) -> int:
    """Number of level-k cubes whose tripled cube contains x (half-open)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    side = 2.0 ** k
    count = 1
    for v in x:
        t = v / side
        cnt = 0
        m0 = int(math.floor(t))
        for m in range(m0 - 3, m0 + 4):
            if (m - 1) <= t < (m + 2):
                cnt += 1
        count *= cnt
    return count


@dataclass
class WolffPairingResult:
    """Comparison of integral (W_p mu)^(p-1) d sigma with the capacity-weighted
    integral (W_p sigma) d mu."""

    lhs: float
    rhs: float
    c_ball: float
    ratio: float
    diverged: bool

    def as_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "c_ball": self.c_ball,
                "ratio": self.ratio, "diverged": self.diverged}


def wolff_pairing_check(sigma: Measure, mu: Measure, sp: SpaceParams,
                        cfg: QuadratureConfig = DEFAULT_CFG,
                        per_dim: int = 5) -> WolffPairingResult:
    """Evaluate both sides of the pairing inequality and their ratio.

    The capacity constant is estimated over balls only, so the ratio is
    reported without any pass/fail claim about the unknown comparison
    constant.
    """
    if not sp.p > 2:
        raise ValueError("the pairing check requires p > 2")
    if not (math.isfinite(sigma.total_mass()) and math.isfinite(mu.total_mass())):
        raise ValueError("both measures need finite total mass")
    from .capacity import capacity_condition_const

    if sigma.is_zero():
        return WolffPairingResult(0.0, 0.0, 0.0, 0.0, False)

    spts, sw = sigma.nodes(per_dim)
    wpmu = np.array([wolff(mu, pt, sp, cfg).value for pt in spts])
    finite = np.isfinite(wpmu)
    lhs = float(np.dot(sw[finite], wpmu[finite] ** (sp.p - 1.0)))
    diverged = bool(np.any(~finite))

    mpts, mw = mu.nodes(per_dim)
    wps = np.array([wolff(sigma, pt, sp, cfg).value for pt in mpts])
    finite_m = np.isfinite(wps)
    rhs = float(np.dot(mw[finite_m], wps[finite_m]))
    diverged = diverged or bool(np.any(~finite_m))

    cap_report = capacity_condition_const(sigma, sp)
    c_ball = cap_report.c_est
    denom = c_ball ** ((sp.p - 2.0) / (sp.p - 1.0)) * rhs
    ratio = lhs / denom if denom > 0 else (0.0 if lhs == 0.0 else math.inf)
    if cap_report.divergent:
        diverged = True
    return WolffPairingResult(lhs, rhs, c_ball, ratio, diverged)
