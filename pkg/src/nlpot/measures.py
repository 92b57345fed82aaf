"""Computable positive Radon measures: Dirac sums, radial power densities,
uniform ball clouds, uniform boxes, and lazy restriction/scaling wrappers.

Every variant answers ball-mass queries either exactly (atoms, centered
radial balls, ball/ball overlaps via closed-form caps) or by 1-D quadrature
of closed-form cap areas.  Measures are immutable; wrappers are lazy views.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    Ball,
    ball_intersection_volume,
    ball_volume,
    cap_area,
    two_cap_area,
    unit_sphere_area,
)
from .quadrature import adaptive_simpson_panels, gauss_panel_rule

__all__ = [
    "Measure",
    "DiracSum",
    "RadialDensity",
    "BallCloud",
    "BoxUniform",
    "Restricted",
    "Scaled",
    "MeasureSum",
    "RadialProfile",
    "UnsupportedMeasureError",
    "zero_measure",
    "lebesgue_ball",
    "ball_mass",
    "restrict",
    "scale",
    "mollify",
    "total_mass",
    "dilate",
    "integrate",
    "radial_profile",
]


class UnsupportedMeasureError(ValueError):
    """Raised when an operation is not defined for the given measure variant."""


def _as_point(x, dim):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dim,):
        raise ValueError(f"expected a {dim}-vector, got shape {x.shape}")
    return x


def _power_integral(e: float, lo: float, hi: float) -> float:
    """integral_lo^hi s^e ds with the logarithmic case e = -1."""
    if hi <= lo:
        return 0.0
    if abs(e + 1.0) < 1e-13:
        return math.log(hi / lo) if lo > 0 else math.inf
    if math.isinf(hi):
        if e < -1.0:
            return -(lo ** (e + 1.0)) / (e + 1.0)
        return math.inf
    lo_term = lo ** (e + 1.0) if lo > 0 else (0.0 if e > -1.0 else math.inf)
    if math.isinf(lo_term):
        return math.inf
    return (hi ** (e + 1.0) - lo_term) / (e + 1.0)


class Measure:
    """Base class; subclasses are immutable value objects."""

    dim: int

    # -- mass queries ----------------------------------------------------

    def ball_mass(self, ball: Ball, tol: float = 1e-9) -> float:
        raise NotImplementedError

    def ball_masses(self, x, radii, tol: float = 1e-9) -> np.ndarray:
        x = _as_point(x, self.dim)
        return np.array([self.ball_mass(Ball(x, float(r)), tol) for r in radii])

    def mass_in_balls(self, balls, tol: float = 1e-9) -> float:
        """Mass of the intersection of the given closed balls."""
        balls = _reduce_ball_constraints(self, balls)
        if balls is None:
            return 0.0
        if len(balls) == 0:
            return self.total_mass()
        if len(balls) == 1:
            return self.ball_mass(balls[0], tol)
        return self._mass_two_balls(balls[0], balls[1], tol)

    def _mass_two_balls(self, b1: Ball, b2: Ball, tol: float) -> float:
        raise UnsupportedMeasureError(
            f"{type(self).__name__} does not support intersections of "
            "two general-position balls")

    def cube_mass(self, lo, hi, tol: float = 1e-9) -> float:
        """Mass of the half-open axis box [lo, hi)."""
        raise NotImplementedError

    def total_mass(self) -> float:
        raise NotImplementedError

    # -- constructions ---------------------------------------------------

    def restricted(self, ball: Ball) -> "Measure":
        return restrict(self, ball)

    def scaled(self, t: float) -> "Measure":
        return scale(self, t)

    def mollified(self, k: int) -> "Measure":
        raise UnsupportedMeasureError(
            f"mollification is not supported for {type(self).__name__}")

    def dilated(self, lam: float) -> "Measure":
        raise NotImplementedError

    def translated(self, v) -> "Measure":
        raise UnsupportedMeasureError(
            f"translation is not supported for {type(self).__name__}")

    # -- support geometry -------------------------------------------------

    def support_ball(self) -> Ball | None:
        """A ball containing the support, or None if the support is unbounded."""
        raise NotImplementedError

    def distance_to_support(self, x) -> float:
        raise NotImplementedError

    def saturation_radius(self, x) -> float:
        """Radius beyond which ball masses around x equal the total mass."""
        sb = self.support_ball()
        if sb is None:
            return math.inf
        x = _as_point(x, self.dim)
        return float(np.linalg.norm(x - sb.center)) + sb.radius

    def mass_breakpoints(self, x) -> np.ndarray:
        """Radii where rho -> mass(B(x, rho)) may be non-smooth."""
        return np.array([])

    def local_mass_power(self, x) -> tuple[float, float]:
        """(c, beta) with mass(B(x, rho)) ~ c rho^beta as rho -> 0.

        Returns (0, inf) when x lies outside the support.
        """
        raise NotImplementedError

    def has_atom_at(self, x) -> bool:
        pts, w = self.atom_list()
        if len(w) == 0:
            return False
        x = _as_point(x, self.dim)
        return bool(np.any(np.linalg.norm(pts - x, axis=1) <= 1e-14 * (1.0 + np.linalg.norm(x))))

    def atom_list(self) -> tuple[np.ndarray, np.ndarray]:
        """Points and weights of the purely atomic part."""
        return np.zeros((0, self.dim)), np.zeros(0)

    def is_purely_atomic(self) -> bool:
        return False

    def is_zero(self) -> bool:
        return self.total_mass() == 0.0

    # -- integration ------------------------------------------------------

    def density_at(self, points) -> np.ndarray:
        raise UnsupportedMeasureError(
            f"{type(self).__name__} has no pointwise density")

    def nodes(self, per_dim: int = 6) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes (points, weights) with exact total weight."""
        raise NotImplementedError

    def support_points(self) -> np.ndarray:
        """Representative points of the support, for sampling plans."""
        raise NotImplementedError


# ---------------------------------------------------------------------------
# ball-constraint reduction shared by mass_in_balls


def _reduce_ball_constraints(mu: Measure, balls):
    """Drop redundant constraint balls; return None when the mass is zero."""
    balls = list(balls)
    sb = mu.support_ball()
    kept: list[Ball] = []
    for b in balls:
        if b.dim != mu.dim:
            raise ValueError("ball dimension mismatch")
        if sb is not None:
            d = float(np.linalg.norm(b.center - sb.center))
            if d >= b.radius + sb.radius:
                return None
            if d + sb.radius <= b.radius:
                continue  # the ball contains the whole support
        kept.append(b)
    # drop balls containing another kept ball
    out: list[Ball] = []
    for i, b in enumerate(kept):
        redundant = False
        for j, other in enumerate(kept):
            if i == j:
                continue
            if b.contains_ball(other) and not (other.contains_ball(b) and j < i):
                redundant = True
                break
        if not redundant:
            out.append(b)
    for i in range(len(out)):
        for j in range(i + 1, len(out)):
            if out[i].disjoint_from(out[j]):
                return None
    return out


# ---------------------------------------------------------------------------
# shared radial-shell integration against ball caps


def _cap_angle(s, d, R):
    """Angular radius of {u in S^(n-1): |s u - d e| <= R} as seen from the origin."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (s * s + d * d - R * R) / (2.0 * s * d)
    return np.arccos(np.clip(c, -1.0, 1.0))


def _shell_mass_with_caps(n, shell_density, s_panels, caps, tol):
    """integral shell_density(s) * area_fraction(s) ds over the given panels.

    shell_density(s) must already include the omega * s^(n-1) factor for a
    full shell.  caps is a list of (d_i, R_i, axis_i) constraints with d_i > 0.
    """
    omega = unit_sphere_area(n)
    if len(caps) == 0:
        def frac(s):
            return np.ones_like(np.asarray(s, dtype=float))
    elif len(caps) == 1:
        d1, r1, _ = caps[0]

        def frac(s):
            return cap_area(n, _cap_angle(s, d1, r1)) / omega
    elif len(caps) == 2:
        d1, r1, a1 = caps[0]
        d2, r2, a2 = caps[1]
        beta = math.acos(float(np.clip(np.dot(a1, a2), -1.0, 1.0)))

        def frac(s):
            s = np.atleast_1d(np.asarray(s, dtype=float))
            th1 = _cap_angle(s, d1, r1)
            th2 = _cap_angle(s, d2, r2)
            vals = np.array([two_cap_area(n, float(u), float(v), beta)
                             for u, v in zip(th1, th2)])
            return vals / omega
    else:
        raise UnsupportedMeasureError(
            "at most two general-position ball constraints are supported")

    def integrand(s):
        return shell_density(s) * frac(s)

    value, _ = adaptive_simpson_panels(lambda s: float(integrand(np.array([s]))[0]),
                                       s_panels, tol)
    return value


# ---------------------------------------------------------------------------
# box-slicing integration (uniform boxes, ball/box overlaps, cube masses)


def _interval_caps(lo, hi, center, radius2):
    """Intersection of [lo, hi] with the chord |t - center| <= sqrt(radius2)."""
    if radius2 <= 0.0:
        return None
    half = math.sqrt(radius2)
    a = max(lo, center - half)
    b = min(hi, center + half)
    if b <= a:
        return None
    return a, b


def _region_integral(axis_density, lo, hi, balls, tol):
    """Integral over the box [lo, hi] intersected with closed balls.

    axis_density is either None (indicator integrand) or a scalar function of
    the full coordinate vector, integrated along the innermost axis by
    adaptive Simpson.  Recursion depth equals the dimension.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.shape[0]

    def recurse(prefix, lo_rest, hi_rest, ball_rest, tol):
        if len(lo_rest) == 1:
            a, b = lo_rest[0], hi_rest[0]
            for c, r2 in ball_rest:
                seg = _interval_caps(a, b, c[0], r2)
                if seg is None:
                    return 0.0
                a, b = seg
            if axis_density is None:
                return b - a
            def f(t):
                return axis_density(np.array(prefix + [t]))
            breaks = [0.0] if a < 0.0 < b else []
            val, _ = adaptive_simpson_panels(f, [a] + breaks + [b], tol)
            return val

        a, b = lo_rest[0], hi_rest[0]
        edges = {a, b}
        for c, r2 in ball_rest:
            seg = _interval_caps(a, b, c[0], r2)
            if seg is None:
                return 0.0
            a, b = seg
            edges.update((a, b))
        if b <= a:
            return 0.0
        if a < 0.0 < b:
            edges.add(0.0)
        edges = sorted(e for e in edges if a <= e <= b)

        def g(t):
            reduced = []
            for c, r2 in ball_rest:
                rr = r2 - (t - c[0]) ** 2
                if rr <= 0.0:
                    return 0.0
                reduced.append((c[1:], rr))
            return recurse(prefix + [t], lo_rest[1:], hi_rest[1:], reduced, tol)

        val, _ = adaptive_simpson_panels(g, edges, tol)
        return val

    ball_data = [(np.asarray(b.center, float), b.radius ** 2) for b in balls]
    return recurse([], list(lo), list(hi), ball_data, tol)


# ---------------------------------------------------------------------------
# Dirac sums


class DiracSum(Measure):
    """Finite sum of point masses."""

    def __init__(self, points, weights=None, dim=None):
        if weights is None and points:
            # allow construction from [(point, weight), ...]
            try:
                points, weights = zip(*points)
            except TypeError:
                pass
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            if dim is None:
                raise ValueError("empty DiracSum needs an explicit dim")
            pts = np.zeros((0, dim))
        pts = np.atleast_2d(pts)
        w = np.asarray(weights if weights is not None else [], dtype=float)
        if pts.shape[0] != w.shape[0]:
            raise ValueError("points and weights length mismatch")
        if np.any(w <= 0):
            raise ValueError("atom weights must be strictly positive")
        self.points = pts
        self.weights = w
        self.dim = pts.shape[1] if dim is None else int(dim)

    def ball_mass(self, ball: Ball, tol: float = 1e-9) -> float:
        if len(self.weights) == 0:
            return 0.0
        d = np.linalg.norm(self.points - ball.center, axis=1)
        return float(self.weights[d <= ball.radius].sum())

    def ball_masses(self, x, radii, tol: float = 1e-9) -> np.ndarray:
        x = _as_point(x, self.dim)
        radii = np.asarray(radii, dtype=float)
        if len(self.weights) == 0:
            return np.zeros_like(radii)
        d = np.sort(np.linalg.norm(self.points - x, axis=1))
        order = np.argsort(np.linalg.norm(self.points - x, axis=1))
        cum = np.concatenate([[0.0], np.cumsum(self.weights[order])])
        idx = np.searchsorted(d, radii, side="right")
        return cum[idx]

    def mass_in_balls(self, balls, tol: float = 1e-9) -> float:
        if len(self.weights) == 0:
            return 0.0
        mask = np.ones(len(self.weights), dtype=bool)
        for b in balls:
            mask &= np.linalg.norm(self.points - b.center, axis=1) <= b.radius
        return float(self.weights[mask].sum())

    def cube_mass(self, lo, hi, tol: float = 1e-9) -> float:
        if len(self.weights) == 0:
            return 0.0
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        mask = np.all((self.points >= lo) & (self.points < hi), axis=1)
        return float(self.weights[mask].sum())

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def mollified(self, k: int) -> Measure:
        if len(self.weights) == 0:
            return self
        return BallCloud(self.points, np.full(len(self.weights), 1.0 / k), self.weights)

    def dilated(self, lam: float) -> Measure:
        return DiracSum(self.points * lam, self.weights, dim=self.dim)

    def translated(self, v) -> Measure:
        v = _as_point(v, self.dim)
        return DiracSum(self.points + v, self.weights, dim=self.dim)

    def support_ball(self) -> Ball | None:
        if len(self.weights) == 0:
            return Ball(np.zeros(self.dim), 1e-300)
        center = self.points.mean(axis=0)
        rad = float(np.max(np.linalg.norm(self.points - center, axis=1)))
        return Ball(center, max(rad, 1e-300))

    def distance_to_support(self, x) -> float:
        if len(self.weights) == 0:
            return math.inf
        x = _as_point(x, self.dim)
        return float(np.min(np.linalg.norm(self.points - x, axis=1)))

    def mass_breakpoints(self, x) -> np.ndarray:
        if len(self.weights) == 0:
            return np.array([])
        x = _as_point(x, self.dim)
        return np.unique(np.linalg.norm(self.points - x, axis=1))

    def local_mass_power(self, x) -> tuple[float, float]:
        if len(self.weights) == 0:
            return 0.0, math.inf
        x = _as_point(x, self.dim)
        d = np.linalg.norm(self.points - x, axis=1)
        at = d <= 1e-14 * (1.0 + np.linalg.norm(x))
        if np.any(at):
            return float(self.weights[at].sum()), 0.0
        return 0.0, math.inf

    def atom_list(self) -> tuple[np.ndarray, np.ndarray]:
        return self.points, self.weights

    def is_purely_atomic(self) -> bool:
        return True

    def nodes(self, per_dim: int = 6) -> tuple[np.ndarray, np.ndarray]:
        return self.points.copy(), self.weights.copy()

    def support_points(self) -> np.ndarray:
        return self.points.copy()

    def __repr__(self):
        return f"DiracSum({len(self.weights)} atoms, total={self.total_mass():g})"


def zero_measure(dim: int) -> DiracSum:
    """The zero measure on R^dim."""
    return DiracSum([], [], dim=dim)


# ---------------------------------------------------------------------------
# radial piecewise power densities


class RadialDensity(Measure):
    """Density a * |x|^gamma on radial annuli [r_lo, r_hi), centered at the origin.

    Pieces must be disjoint; pieces touching zero need gamma > -n so the
    measure is locally finite.
    """

    def __init__(self, pieces, dim: int):
        self.dim = int(dim)
        rows = []
        for a, gamma, lo, hi in pieces:
            a, gamma, lo = float(a), float(gamma), float(lo)
            hi = math.inf if hi in (None, math.inf) else float(hi)
            if a <= 0:
                raise ValueError("piece coefficient must be positive")
            if lo < 0 or hi <= lo:
                raise ValueError("piece interval must satisfy 0 <= r_lo < r_hi")
            if lo == 0.0 and gamma <= -self.dim:
                raise ValueError("piece touching 0 needs gamma > -n for local finiteness")
            rows.append((a, gamma, lo, hi))
        rows.sort(key=lambda r: r[2])
        for (_, _, _, h1), (_, _, l2, _) in zip(rows[:-1], rows[1:]):
            if l2 < h1:
                raise ValueError("piece intervals must be disjoint")
        self.pieces = tuple(rows)

    # closed-form centered masses ---------------------------------------

    def centered_mass(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        omega = unit_sphere_area(self.dim)
        out = np.zeros_like(r)
        for a, gamma, lo, hi in self.pieces:
            e = self.dim - 1 + gamma
            top = np.minimum(r, hi)
            valid = top > lo
            if abs(e + 1.0) < 1e-13:
                with np.errstate(divide="ignore", invalid="ignore"):
                    seg = np.where(valid, np.log(np.maximum(top, lo) / lo), 0.0)
            else:
                seg = np.where(valid,
                               (np.maximum(top, lo) ** (e + 1.0) - lo ** (e + 1.0)) / (e + 1.0),
                               0.0)
            out = out + a * omega * seg
        return out

    def density(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for a, gamma, lo, hi in self.pieces:
            sel = (s >= lo) & (s < hi)
            with np.errstate(divide="ignore"):
                out = np.where(sel, a * np.where(sel, s, 1.0) ** gamma, out)
        return out

    def shell_density(self, s) -> np.ndarray:
        """Mass per unit radius of the full shell at radius s."""
        s = np.asarray(s, dtype=float)
        return self.density(s) * unit_sphere_area(self.dim) * s ** (self.dim - 1)

    def piece_edges(self) -> np.ndarray:
        edges = set()
        for _, _, lo, hi in self.pieces:
            edges.add(lo)
            if math.isfinite(hi):
                edges.add(hi)
        return np.array(sorted(edges))

    def outer_radius(self) -> float:
        return max(hi for _, _, _, hi in self.pieces)

    # mass queries --------------------------------------------------------

    def ball_mass(self, ball: Ball, tol: float = 1e-9) -> float:
        d = float(np.linalg.norm(ball.center))
        R = ball.radius
        if d <= 1e-14 * max(1.0, R):
            return float(self.centered_mass(R))
        return float(self._band_masses(d, np.array([R]))[0])

    def _band_masses(self, d: float, radii: np.ndarray) -> np.ndarray:
        """Off-center ball masses via density x cap-area shell integrals.

        Fixed-order Gauss on panels split at the piece edges and graded toward
        the band endpoints, where the cap angle is only Hoelder continuous.
        """
        from .quadrature import _leggauss

        xg, wg = _leggauss(10)
        edges_all = self.piece_edges()
        out = np.zeros(len(radii))
        grade = np.array([0.0, 0.04, 0.2, 0.5, 0.8, 0.96, 1.0])
        for i, R in enumerate(radii):
            if R <= 0:
                continue
            full = float(self.centered_mass(max(R - d, 0.0)))
            blo, bhi = abs(R - d), R + d
            edges = [blo, bhi] + [e for e in edges_all if blo < e < bhi]
            edges = np.array(sorted(edges))
            # graded subpanels inside each panel
            a = edges[:-1][:, None]
            b = edges[1:][:, None]
            sub = a + (b - a) * grade[None, :]
            lo = sub[:, :-1].ravel()
            hi = sub[:, 1:].ravel()
            half = 0.5 * (hi - lo)
            mid = 0.5 * (hi + lo)
            s = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
            w = (half[:, None] * wg[None, :]).ravel()
            theta = _cap_angle(s, d, R)
            vals = self.shell_density(s) * cap_area(self.dim, theta) / unit_sphere_area(self.dim)
            out[i] = full + float(np.dot(w, vals))
        return out

    def ball_masses(self, x, radii, tol: float = 1e-9) -> np.ndarray:
        x = _as_point(x, self.dim)
        radii = np.asarray(radii, dtype=float)
        d = float(np.linalg.norm(x))
        if d <= 1e-14:
            return np.asarray(self.centered_mass(radii), dtype=float)
        return self._band_masses(d, radii)

    def _mass_two_balls(self, b1: Ball, b2: Ball, tol: float) -> float:
        d1 = float(np.linalg.norm(b1.center))
        d2 = float(np.linalg.norm(b2.center))
        # origin-centered constraints clip the radial range instead
        clip = math.inf
        caps = []
        for d, b in ((d1, b1), (d2, b2)):
            if d <= 1e-14 * max(1.0, b.radius):
                clip = min(clip, b.radius)
            else:
                caps.append((d, b.radius, b.center / d))
        if not caps:
            return float(self.centered_mass(clip))
        lows = [abs(r - d) for d, r, _ in caps]
        highs = [r + d for d, r, _ in caps]
        if all(r > d for d, r, _ in caps):
            full_to = min(min(r - d for d, r, _ in caps), clip)
        else:
            full_to = 0.0
        full = float(self.centered_mass(max(full_to, 0.0)))
        s_lo = max(full_to, 0.0)
        s_hi = min(min(highs), clip)
        if s_hi <= s_lo:
            return full
        edges = sorted({s_lo, s_hi}
                       | {e for e in self.piece_edges() if s_lo < e < s_hi}
                       | {e for e in lows + highs if s_lo < e < s_hi})
        band = _shell_mass_with_caps(self.dim, self.shell_density,
                                     list(edges), caps, tol)
        return full + band

    def cube_mass(self, lo, hi, tol: float = 1e-9) -> float:
        if self.dim > 3:
            raise UnsupportedMeasureError("radial cube masses implemented for n <= 3")
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        outer = self.outer_radius()
        if math.isfinite(outer):
            lo = np.maximum(lo, -outer)
            hi = np.minimum(hi, outer)
            if np.any(hi <= lo):
                return 0.0

        def dens(x):
            return float(self.density(np.linalg.norm(x)))

        return _region_integral(dens, lo, hi, [], tol)

    def total_mass(self) -> float:
        omega = unit_sphere_area(self.dim)
        tot = 0.0
        for a, gamma, lo, hi in self.pieces:
            tot += a * omega * _power_integral(self.dim - 1 + gamma, lo, hi)
            if math.isinf(tot):
                return math.inf
        return tot

    def dilated(self, lam: float) -> Measure:
        lam = float(lam)
        return RadialDensity(
            [(a * lam ** (-gamma - self.dim), gamma, lo * lam,
              hi * lam if math.isfinite(hi) else math.inf)
             for a, gamma, lo, hi in self.pieces], self.dim)

    def support_ball(self) -> Ball | None:
        outer = self.outer_radius()
        if math.isinf(outer):
            return None
        return Ball(np.zeros(self.dim), outer)

    def distance_to_support(self, x) -> float:
        x = _as_point(x, self.dim)
        d = float(np.linalg.norm(x))
        best = math.inf
        for _, _, lo, hi in self.pieces:
            if lo <= d < hi or (math.isfinite(hi) and d == hi):
                return 0.0
            best = min(best, abs(d - lo), abs(d - hi) if math.isfinite(hi) else math.inf)
        return best

    def mass_breakpoints(self, x) -> np.ndarray:
        x = _as_point(x, self.dim)
        d = float(np.linalg.norm(x))
        br = set()
        for e in self.piece_edges():
            br.add(abs(d - e))
            if math.isfinite(e):
                br.add(d + e)
        return np.array(sorted(b for b in br if b > 0 and math.isfinite(b)))

    def local_mass_power(self, x) -> tuple[float, float]:
        x = _as_point(x, self.dim)
        d = float(np.linalg.norm(x))
        omega = unit_sphere_area(self.dim)
        if d == 0.0:
            for a, gamma, lo, _ in self.pieces:
                if lo == 0.0:
                    e = self.dim + gamma
                    return a * omega / e, e
            return 0.0, math.inf
        for a, gamma, lo, hi in self.pieces:
            if lo <= d < hi:
                return a * d ** gamma * ball_volume(self.dim), float(self.dim)
            if d == lo or (math.isfinite(hi) and d == hi):
                return a * d ** gamma * ball_volume(self.dim), float(self.dim)
        return 0.0, math.inf

    def density_at(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.density(np.linalg.norm(pts, axis=1))

    def nodes(self, per_dim: int = 6) -> tuple[np.ndarray, np.ndarray]:
        outer = self.outer_radius()
        if math.isinf(outer):
            raise UnsupportedMeasureError("integration nodes need bounded support")
        edges = []
        for _, _, lo, hi in self.pieces:
            sub = np.linspace(lo, hi, max(per_dim, 2) + 1)
            edges.append(sub)
        radii, rweights = gauss_panel_rule(np.unique(np.concatenate(edges)), order=6)
        shell = self.shell_density(radii) * rweights
        dirs = _sphere_directions(self.dim, max(4 * per_dim, 16))
        m = dirs.shape[0]
        pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, self.dim)
        w = np.repeat(shell / m, m)
        keep = w > 0
        return pts[keep], w[keep]

    def support_points(self) -> np.ndarray:
        pts = [np.zeros(self.dim)]
        e1 = np.zeros(self.dim)
        e1[0] = 1.0
        for _, _, lo, hi in self.pieces:
            for r in (lo, hi):
                if math.isfinite(r) and r > 0:
                    pts.append(r * e1)
                    pts.append(-r * e1)
            mid = lo + 0.5 * ((hi - lo) if math.isfinite(hi) else lo + 1.0)
            pts.append(mid * e1)
        return np.unique(np.array(pts), axis=0)

    def __repr__(self):
        return f"RadialDensity({len(self.pieces)} pieces, n={self.dim})"


def _sphere_directions(n: int, m: int) -> np.ndarray:
    """Roughly uniform unit directions: uniform angles (n=2), Fibonacci (n=3)."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        th = (np.arange(m) + 0.5) * (2.0 * math.pi / m)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    if n == 3:
        i = np.arange(m) + 0.5
        z = 1.0 - 2.0 * i / m
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = i * math.pi * (3.0 - math.sqrt(5.0))
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    rng = np.random.default_rng(12345)
    v = rng.standard_normal((m, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# uniform ball clouds


class BallCloud(Measure):
    """Sum of uniform densities on balls, each carrying a given total weight."""

    def __init__(self, centers, radii, weights):
        c = np.atleast_2d(np.asarray(centers, dtype=float))
        r = np.atleast_1d(np.asarray(radii, dtype=float))
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        if not (len(c) == len(r) == len(w)):
            raise ValueError("centers, radii, weights must have equal length")
        if np.any(r <= 0) or np.any(w <= 0):
            raise ValueError("radii and weights must be strictly positive")
        self.centers = c
        self.radii = r
        self.weights = w
        self.dim = c.shape[1]
        self._volumes = ball_volume(self.dim) * r ** self.dim

    def ball_mass(self, ball: Ball, tol: float = 1e-9) -> float:
        d = np.linalg.norm(self.centers - ball.center, axis=1)
        overlap = ball_intersection_volume(self.dim, self.radii, ball.radius, d)
        return float(np.sum(self.weights * overlap / self._volumes))

    def ball_masses(self, x, radii, tol: float = 1e-9) -> np.ndarray:
        x = _as_point(x, self.dim)
        radii = np.asarray(radii, dtype=float)
        d = np.linalg.norm(self.centers - x, axis=1)
        overlap = ball_intersection_volume(
            self.dim, self.radii[None, :], radii[:, None], d[None, :])
        return overlap @ (self.weights / self._volumes)

    def _mass_two_balls(self, b1: Ball, b2: Ball, tol: float) -> float:
        total = 0.0
        for c, r, w, vol in zip(self.centers, self.radii, self.weights, self._volumes):
            caps = []
            clip = r
            skip = False
            for b in (b1, b2):
                d = float(np.linalg.norm(b.center - c))
                if d <= 1e-14 * max(1.0, b.radius):
                    clip = min(clip, b.radius)
                elif d + r <= b.radius:
                    continue  # this constraint contains the whole cloud ball
                elif d >= r + b.radius:
                    skip = True
                    break
                else:
                    caps.append((d, b.radius, (b.center - c) / d))
            if skip:
                continue
            if not caps:
                vol_in = ball_volume(self.dim, min(clip, r))
                total += w * vol_in / vol
                continue
            full_to = min([r2 - d for d, r2, _ in caps] + [clip])
            full = ball_volume(self.dim, max(full_to, 0.0))
            s_lo = max(full_to, 0.0)
            s_hi = min(min(d + r2 for d, r2, _ in caps), clip)
            area = unit_sphere_area(self.dim)

            def shell(s):
                s = np.asarray(s, dtype=float)
                return area * s ** (self.dim - 1)

            if s_hi > s_lo:
                edges = sorted({s_lo, s_hi}
                               | {abs(r2 - d) for d, r2, _ in caps if s_lo < abs(r2 - d) < s_hi})
                band = _shell_mass_with_caps(self.dim, shell, list(edges), caps, tol)
            else:
                band = 0.0
            total += w * (full + band) / vol
        return total

    def cube_mass(self, lo, hi, tol: float = 1e-9) -> float:
        lo = np.asarray(lo, float)
        hi = np.asarray(hi, float)
        total = 0.0
        for c, r, w, vol in zip(self.centers, self.radii, self.weights, self._volumes):
            blo = np.maximum(lo, c - r)
            bhi = np.minimum(hi, c + r)
            if np.any(bhi <= blo):
                continue
            if np.all(blo <= c - r + 1e-300) and np.all(bhi >= c + r):
                total += w
                continue
            overlap = _region_integral(None, blo, bhi, [Ball(c, r)], tol)
            total += w * overlap / vol
        return total

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def mollified(self, k: int) -> Measure:
        return BallCloud(self.centers, self.radii + 1.0 / k, self.weights)

    def dilated(self, lam: float) -> Measure:
        return BallCloud(self.centers * lam, self.radii * lam, self.weights)

    def translated(self, v) -> Measure:
        v = _as_point(v, self.dim)
        return BallCloud(self.centers + v, self.radii, self.weights)

    def support_ball(self) -> Ball | None:
        center = self.centers.mean(axis=0)
        rad = float(np.max(np.linalg.norm(self.centers - center, axis=1) + self.radii))
        return Ball(center, rad)

    def distance_to_support(self, x) -> float:
        x = _as_point(x, self.dim)
        d = np.linalg.norm(self.centers - x, axis=1) - self.radii
        return float(max(np.min(d), 0.0))

    def mass_breakpoints(self, x) -> np.ndarray:
        x = _as_point(x, self.dim)
        d = np.linalg.norm(self.centers - x, axis=1)
        br = np.concatenate([np.abs(d - self.radii), d + self.radii])
        return np.unique(br[br > 0])

    def local_mass_power(self, x) -> tuple[float, float]:
        x = _as_point(x, self.dim)
        d = np.linalg.norm(self.centers - x, axis=1)
        inside = d < self.radii
        if not np.any(inside):
            return 0.0, math.inf
        dens = float(np.sum(self.weights[inside] / self._volumes[inside]))
        return dens * ball_volume(self.dim), float(self.dim)

    def density_at(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(pts.shape[0])
        for c, r, w, vol in zip(self.centers, self.radii, self.weights, self._volumes):
            out += (np.linalg.norm(pts - c, axis=1) <= r) * (w / vol)
        return out

    def nodes(self, per_dim: int = 6) -> tuple[np.ndarray, np.ndarray]:
        all_pts = []
        all_w = []
        for c, r, w in zip(self.centers, self.radii, self.weights):
            axes = [np.linspace(-r + r / per_dim, r - r / per_dim, per_dim)] * self.dim
            grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
            keep = np.linalg.norm(grid, axis=1) <= r
            pts = grid[keep] + c
            if len(pts) == 0:
                pts = c[None, :]
                keep = np.array([True])
            all_pts.append(pts)
            all_w.append(np.full(len(pts), w / len(pts)))
        return np.concatenate(all_pts), np.concatenate(all_w)

    def support_points(self) -> np.ndarray:
        return self.centers.copy()

    def __repr__(self):
        return f"BallCloud({len(self.weights)} balls, total={self.total_mass():g})"


def lebesgue_ball(center, radius: float, dim: int | None = None) -> BallCloud:
    """Lebesgue measure restricted to a ball, as a single uniform cloud ball."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    n = center.shape[0] if dim is None else dim
    return BallCloud([center], [radius], [ball_volume(n, radius)])


# ---------------------------------------------------------------------------
# uniform boxes


class BoxUniform(Measure):
    """Uniform density on an axis-aligned box carrying a given total weight."""

    def __init__(self, lo, hi, weight: float):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError("box needs lo < hi componentwise")
        if not weight > 0:
            raise ValueError("box weight must be positive")
        self.lo = lo
        self.hi = hi
        self.weight = float(weight)
        self.dim = lo.shape[0]
        self.volume = float(np.prod(hi - lo))

    def ball_mass(self, ball: Ball, tol: float = 1e-9) -> float:
        return self.mass_in_balls([ball], tol)

    def mass_in_balls(self, balls, tol: float = 1e-9) -> float:
        balls = _reduce_ball_constraints(self, balls)
        if balls is None:
            return 0.0
        if not balls:
            return self.weight
        overlap = _region_integral(None, self.lo, self.hi, balls, tol)
        return self.weight * overlap / self.volume

    def cube_mass(self, lo, hi, tol: float = 1e-9) -> float:
        lo = np.maximum(np.asarray(lo, float), self.lo)
        hi = np.minimum(np.asarray(hi, float), self.hi)
        if np.any(hi <= lo):
            return 0.0
        return self.weight * float(np.prod(hi - lo)) / self.volume

    def total_mass(self) -> float:
        return self.weight

    def dilated(self, lam: float) -> Measure:
        return BoxUniform(self.lo * lam, self.hi * lam, self.weight)

    def translated(self, v) -> Measure:
        v = _as_point(v, self.dim)
        return BoxUniform(self.lo + v, self.hi + v, self.weight)

    def support_ball(self) -> Ball | None:
        c = 0.5 * (self.lo + self.hi)
        return Ball(c, float(np.linalg.norm(self.hi - c)))

    def distance_to_support(self, x) -> float:
        x = _as_point(x, self.dim)
        gap = np.maximum(np.maximum(self.lo - x, x - self.hi), 0.0)
        return float(np.linalg.norm(gap))

    def mass_breakpoints(self, x) -> np.ndarray:
        x = _as_point(x, self.dim)
        corners = np.stack(np.meshgrid(*zip(self.lo, self.hi), indexing="ij"),
                           axis=-1).reshape(-1, self.dim)
        br = set(np.linalg.norm(corners - x, axis=1))
        br.add(self.distance_to_support(x))
        clipped = np.clip(x, self.lo, self.hi)
        br.add(float(np.linalg.norm(clipped - x)))
        for i in range(self.dim):
            br.add(abs(x[i] - self.lo[i]))
            br.add(abs(x[i] - self.hi[i]))
        return np.array(sorted(b for b in br if b > 0))

    def local_mass_power(self, x) -> tuple[float, float]:
        x = _as_point(x, self.dim)
        if np.all(x > self.lo) and np.all(x < self.hi):
            return self.weight / self.volume * ball_volume(self.dim), float(self.dim)
        if self.distance_to_support(x) > 0:
            return 0.0, math.inf
        return self.weight / self.volume * ball_volume(self.dim), float(self.dim)

    def density_at(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        inside = np.all((pts >= self.lo) & (pts < self.hi), axis=1)
        return inside * (self.weight / self.volume)

    def nodes(self, per_dim: int = 6) -> tuple[np.ndarray, np.ndarray]:
        axes = [np.linspace(l, h, per_dim, endpoint=False) + 0.5 * (h - l) / per_dim
                for l, h in zip(self.lo, self.hi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        w = np.full(len(grid), self.weight / len(grid))
        return grid, w

    def support_points(self) -> np.ndarray:
        corners = np.stack(np.meshgrid(*zip(self.lo, self.hi), indexing="ij"),
                           axis=-1).reshape(-1, self.dim)
        return np.vstack([corners, 0.5 * (self.lo + self.hi)])

    def __repr__(self):
        return f"BoxUniform({self.lo.tolist()}..{self.hi.tolist()}, w={self.weight:g})"


# ---------------------------------------------------------------------------
# lazy wrappers


class Scaled(Measure):
    """Lazy view of a measure multiplied by a positive factor."""

    def __init__(self, base: Measure, factor: float):
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        if isinstance(base, Scaled):
            factor *= base.factor
            base = base.base
        self.base = base
        self.factor = float(factor)
        self.dim = base.dim

    def ball_mass(self, ball, tol=1e-9):
        return self.factor * self.base.ball_mass(ball, tol)

    def ball_masses(self, x, radii, tol=1e-9):
        return self.factor * self.base.ball_masses(x, radii, tol)

    def mass_in_balls(self, balls, tol=1e-9):
        return self.factor * self.base.mass_in_balls(balls, tol)

    def cube_mass(self, lo, hi, tol=1e-9):
        return self.factor * self.base.cube_mass(lo, hi, tol)

    def total_mass(self):
        return self.factor * self.base.total_mass()

    def mollified(self, k):
        return Scaled(self.base.mollified(k), self.factor)

    def dilated(self, lam):
        return Scaled(self.base.dilated(lam), self.factor)

    def translated(self, v):
        return Scaled(self.base.translated(v), self.factor)

    def support_ball(self):
        return self.base.support_ball()

    def distance_to_support(self, x):
        return self.base.distance_to_support(x)

    def mass_breakpoints(self, x):
        return self.base.mass_breakpoints(x)

    def local_mass_power(self, x):
        c, b = self.base.local_mass_power(x)
        return self.factor * c, b

    def atom_list(self):
        pts, w = self.base.atom_list()
        return pts, self.factor * w

    def is_purely_atomic(self):
        return self.base.is_purely_atomic()

    def density_at(self, points):
        return self.factor * self.base.density_at(points)

    def nodes(self, per_dim=6):
        pts, w = self.base.nodes(per_dim)
        return pts, self.factor * w

    def support_points(self):
        return self.base.support_points()

    def __repr__(self):
        return f"Scaled({self.factor:g} * {self.base!r})"


class Restricted(Measure):
    """Lazy restriction of a measure to the intersection of closed balls."""

    def __init__(self, base: Measure, balls):
        if isinstance(balls, Ball):
            balls = [balls]
        if isinstance(base, Restricted):
            balls = list(base.balls) + list(balls)
            base = base.base
        self.base = base
        self.balls = tuple(balls)
        self.dim = base.dim

    def ball_mass(self, ball, tol=1e-9):
        return self.base.mass_in_balls(list(self.balls) + [ball], tol)

    def mass_in_balls(self, balls, tol=1e-9):
        return self.base.mass_in_balls(list(self.balls) + list(balls), tol)

    def cube_mass(self, lo, hi, tol=1e-9):
        if isinstance(self.base, (BoxUniform, DiracSum)):
            if isinstance(self.base, DiracSum):
                pts, w = self.base.atom_list()
                lo = np.asarray(lo, float)
                hi = np.asarray(hi, float)
                mask = np.all((pts >= lo) & (pts < hi), axis=1)
                for b in self.balls:
                    mask &= np.linalg.norm(pts - b.center, axis=1) <= b.radius
                return float(w[mask].sum())
            overlap = _region_integral(None, np.maximum(lo, self.base.lo),
                                       np.minimum(hi, self.base.hi),
                                       list(self.balls), tol)
            return self.base.weight * max(overlap, 0.0) / self.base.volume
        raise UnsupportedMeasureError(
            "cube masses of restricted measures supported for Dirac/box bases")

    def total_mass(self):
        return self.base.mass_in_balls(list(self.balls), 1e-10)

    def dilated(self, lam):
        return Restricted(self.base.dilated(lam),
                          [Ball(b.center * lam, b.radius * lam) for b in self.balls])

    def support_ball(self):
        sb = self.base.support_ball()
        candidates = [b for b in self.balls]
        if sb is not None:
            candidates.append(sb)
        best = min(candidates, key=lambda b: b.radius)
        return best

    def distance_to_support(self, x):
        x = _as_point(x, self.dim)
        d = self.base.distance_to_support(x)
        for b in self.balls:
            d = max(d, float(np.linalg.norm(x - b.center)) - b.radius)
        return max(d, 0.0)

    def mass_breakpoints(self, x):
        x = _as_point(x, self.dim)
        br = set(self.base.mass_breakpoints(x))
        for b in self.balls:
            d = float(np.linalg.norm(x - b.center))
            br.add(abs(d - b.radius))
            br.add(d + b.radius)
        return np.array(sorted(v for v in br if v > 0))

    def local_mass_power(self, x):
        x = _as_point(x, self.dim)
        for b in self.balls:
            if float(np.linalg.norm(x - b.center)) > b.radius:
                return 0.0, math.inf
        return self.base.local_mass_power(x)

    def atom_list(self):
        pts, w = self.base.atom_list()
        if len(w) == 0:
            return pts, w
        mask = np.ones(len(w), dtype=bool)
        for b in self.balls:
            mask &= np.linalg.norm(pts - b.center, axis=1) <= b.radius
        return pts[mask], w[mask]

    def is_purely_atomic(self):
        return self.base.is_purely_atomic()

    def density_at(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = self.base.density_at(pts)
        for b in self.balls:
            out = out * (np.linalg.norm(pts - b.center, axis=1) <= b.radius)
        return out

    def nodes(self, per_dim=6):
        pts, w = self.base.nodes(per_dim)
        mask = np.ones(len(w), dtype=bool)
        for b in self.balls:
            mask &= np.linalg.norm(pts - b.center, axis=1) <= b.radius
        pts, w = pts[mask], w[mask]
        raw = float(w.sum())
        exact = self.total_mass()
        if raw > 0 and exact > 0:
            w = w * (exact / raw)
        return pts, w

    def support_points(self):
        pts = self.base.support_points()
        mask = np.ones(len(pts), dtype=bool)
        for b in self.balls:
            mask &= np.linalg.norm(pts - b.center, axis=1) <= b.radius + 1e-12
        kept = pts[mask]
        centers = np.array([b.center for b in self.balls])
        return np.vstack([kept, centers]) if len(kept) else centers

    def __repr__(self):
        return f"Restricted({self.base!r} to {len(self.balls)} ball(s))"


class MeasureSum(Measure):
    """Sum of finitely many measures on the same space."""

    def __init__(self, parts):
        parts = [p for p in parts if not (isinstance(p, DiracSum) and len(p.weights) == 0)]
        flat: list[Measure] = []
        for p in parts:
            if isinstance(p, MeasureSum):
                flat.extend(p.parts)
            else:
                flat.append(p)
        if not flat:
            raise ValueError("MeasureSum needs at least one nonzero part; use zero_measure")
        dims = {p.dim for p in flat}
        if len(dims) != 1:
            raise ValueError("all parts must share one dimension")
        self.parts = tuple(flat)
        self.dim = flat[0].dim

    def ball_mass(self, ball, tol=1e-9):
        return sum(p.ball_mass(ball, tol) for p in self.parts)

    def ball_masses(self, x, radii, tol=1e-9):
        out = np.zeros(len(radii))
        for p in self.parts:
            out = out + p.ball_masses(x, radii, tol)
        return out

    def mass_in_balls(self, balls, tol=1e-9):
        return sum(p.mass_in_balls(balls, tol) for p in self.parts)

    def cube_mass(self, lo, hi, tol=1e-9):
        return sum(p.cube_mass(lo, hi, tol) for p in self.parts)

    def total_mass(self):
        return sum(p.total_mass() for p in self.parts)

    def mollified(self, k):
        return MeasureSum([p.mollified(k) for p in self.parts])

    def dilated(self, lam):
        return MeasureSum([p.dilated(lam) for p in self.parts])

    def translated(self, v):
        return MeasureSum([p.translated(v) for p in self.parts])

    def support_ball(self):
        balls = [p.support_ball() for p in self.parts]
        if any(b is None for b in balls):
            return None
        centers = np.array([b.center for b in balls])
        c = centers.mean(axis=0)
        rad = max(float(np.linalg.norm(b.center - c)) + b.radius for b in balls)
        return Ball(c, rad)

    def distance_to_support(self, x):
        return min(p.distance_to_support(x) for p in self.parts)

    def mass_breakpoints(self, x):
        br = np.concatenate([p.mass_breakpoints(x) for p in self.parts])
        return np.unique(br)

    def local_mass_power(self, x):
        best_c, best_b = 0.0, math.inf
        for p in self.parts:
            c, b = p.local_mass_power(x)
            if b < best_b:
                best_c, best_b = c, b
            elif b == best_b:
                best_c += c
        return best_c, best_b

    def atom_list(self):
        pts = []
        ws = []
        for p in self.parts:
            pp, ww = p.atom_list()
            pts.append(pp)
            ws.append(ww)
        return np.concatenate(pts, axis=0), np.concatenate(ws)

    def is_purely_atomic(self):
        return all(p.is_purely_atomic() for p in self.parts)

    def density_at(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(pts.shape[0])
        for p in self.parts:
            out = out + p.density_at(pts)
        return out

    def nodes(self, per_dim=6):
        pts = []
        ws = []
        for p in self.parts:
            pp, ww = p.nodes(per_dim)
            pts.append(pp)
            ws.append(ww)
        return np.concatenate(pts, axis=0), np.concatenate(ws)

    def support_points(self):
        return np.unique(np.concatenate([p.support_points() for p in self.parts]), axis=0)

    def __repr__(self):
        return f"MeasureSum({len(self.parts)} parts)"


# ---------------------------------------------------------------------------
# module-level operations


def ball_mass(mu: Measure, ball: Ball, tol: float = 1e-9) -> float:
    """Mass mu(B) of a closed ball, within relative error tol (exact where possible)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return mu.ball_mass(ball, tol)


def restrict(mu: Measure, ball: Ball) -> Measure:
    """Restriction of mu to the closed ball, simplified where exact shortcuts exist."""
    sb = mu.support_ball()
    if sb is not None:
        d = float(np.linalg.norm(ball.center - sb.center))
        if d + sb.radius <= ball.radius:
            return mu
        if d >= ball.radius + sb.radius:
            return zero_measure(mu.dim)
    if isinstance(mu, DiracSum):
        pts, w = mu.atom_list()
        keep = np.linalg.norm(pts - ball.center, axis=1) <= ball.radius
        if not np.any(keep):
            return zero_measure(mu.dim)
        return DiracSum(pts[keep], w[keep], dim=mu.dim)
    if isinstance(mu, RadialDensity) and float(np.linalg.norm(ball.center)) <= 1e-14 * ball.radius:
        pieces = []
        for a, gamma, lo, hi in mu.pieces:
            nhi = min(hi, ball.radius)
            if nhi > lo:
                pieces.append((a, gamma, lo, nhi))
        if not pieces:
            return zero_measure(mu.dim)
        return RadialDensity(pieces, mu.dim)
    if isinstance(mu, Scaled):
        return Scaled(restrict(mu.base, ball), mu.factor)
    if isinstance(mu, MeasureSum):
        parts = [restrict(p, ball) for p in mu.parts]
        parts = [p for p in parts if not p.is_zero()]
        if not parts:
            return zero_measure(mu.dim)
        return parts[0] if len(parts) == 1 else MeasureSum(parts)
    if isinstance(mu, BallCloud):
        d = np.linalg.norm(mu.centers - ball.center, axis=1)
        inside = d + mu.radii <= ball.radius
        outside = d >= mu.radii + ball.radius
        partial = ~inside & ~outside
        parts: list[Measure] = []
        if np.any(inside):
            parts.append(BallCloud(mu.centers[inside], mu.radii[inside], mu.weights[inside]))
        if np.any(partial):
            parts.append(Restricted(
                BallCloud(mu.centers[partial], mu.radii[partial], mu.weights[partial]), ball))
        if not parts:
            return zero_measure(mu.dim)
        return parts[0] if len(parts) == 1 else MeasureSum(parts)
    return Restricted(mu, ball)


def scale(mu: Measure, t: float) -> Measure:
    """The measure t * mu (exact on all ball queries)."""
    if not t > 0:
        raise ValueError("scale factor must be positive")
    if t == 1.0:
        return mu
    if isinstance(mu, DiracSum):
        if len(mu.weights) == 0:
            return mu
        return DiracSum(mu.points, t * mu.weights, dim=mu.dim)
    return Scaled(mu, t)


def mollify(mu: Measure, k: int) -> Measure:
    """Spread atoms over balls of radius 1/k (and grow cloud balls by 1/k).

    Total mass is preserved exactly and every point of mass moves by at most
    1/k, so mass(mollify(mu,k), B(x,R)) <= mass(mu, B(x,R+1/k)).
    """
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise ValueError("mollification index k must be a positive integer")
    if isinstance(mu, (DiracSum, BallCloud)):
        return mu.mollified(int(k))
    if isinstance(mu, Scaled):
        return Scaled(mollify(mu.base, k), mu.factor)
    if isinstance(mu, MeasureSum):
        return MeasureSum([mollify(p, k) for p in mu.parts])
    raise UnsupportedMeasureError(
        f"mollification is only supported for Dirac sums and ball clouds, "
        f"not {type(mu).__name__}")


def total_mass(mu: Measure) -> float:
    return mu.total_mass()


def dilate(mu: Measure, lam: float) -> Measure:
    """Pushforward of mu under y -> lam * y."""
    if not lam > 0:
        raise ValueError("dilation factor must be positive")
    return mu.dilated(lam)


def integrate(f, mu: Measure, per_dim: int = 6) -> float:
    """Approximate integral of f against mu using the measure's node quadrature.

    f must map an (N, n) array of points to an (N,) array of values.
    """
    pts, w = mu.nodes(per_dim)
    if len(w) == 0:
        return 0.0
    vals = np.asarray(f(pts), dtype=float)
    return float(np.dot(vals, w))


# ---------------------------------------------------------------------------
# radial structure detection


@dataclass(frozen=True)
class RadialProfile:
    """Radial description of a measure: origin atom plus shell density pieces."""

    dim: int
    atom: float
    pieces: tuple  # (a, gamma, lo, hi) with density a * s^gamma

    def centered_mass(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.full_like(r, self.atom)
        if self.pieces:
            out = out + RadialDensity(list(self.pieces), self.dim).centered_mass(r)
        return out

    def density(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if not self.pieces:
            return np.zeros_like(s)
        return RadialDensity(list(self.pieces), self.dim).density(s)

    def piece_edges(self) -> list[float]:
        edges = {0.0}
        for _, _, lo, hi in self.pieces:
            edges.add(lo)
            if math.isfinite(hi):
                edges.add(hi)
        return sorted(edges)

    def outer_radius(self) -> float:
        if not self.pieces:
            return 0.0
        return max(hi for _, _, _, hi in self.pieces)

    def total_mass(self) -> float:
        tot = self.atom
        if self.pieces:
            tot += RadialDensity(list(self.pieces), self.dim).total_mass()
        return tot

    def is_zero(self) -> bool:
        return self.atom == 0.0 and not self.pieces


def radial_profile(mu: Measure, _factor: float = 1.0) -> RadialProfile | None:
    """Radial profile of mu about the origin, or None if mu is not radial."""
    if isinstance(mu, DiracSum):
        if len(mu.weights) == 0:
            return RadialProfile(mu.dim, 0.0, ())
        r = np.linalg.norm(mu.points, axis=1)
        if np.all(r <= 1e-14):
            return RadialProfile(mu.dim, _factor * float(mu.weights.sum()), ())
        return None
    if isinstance(mu, RadialDensity):
        return RadialProfile(mu.dim, 0.0,
                             tuple((_factor * a, g, lo, hi) for a, g, lo, hi in mu.pieces))
    if isinstance(mu, BallCloud):
        if len(mu.weights) == 1 and float(np.linalg.norm(mu.centers[0])) <= 1e-14 * mu.radii[0]:
            dens = _factor * float(mu.weights[0] / mu._volumes[0])
            return RadialProfile(mu.dim, 0.0, ((dens, 0.0, 0.0, float(mu.radii[0])),))
        return None
    if isinstance(mu, Scaled):
        return radial_profile(mu.base, _factor * mu.factor)
    if isinstance(mu, Restricted):
        base = radial_profile(mu.base, _factor)
        if base is None:
            return None
        rad = math.inf
        for b in mu.balls:
            if float(np.linalg.norm(b.center)) > 1e-14 * b.radius:
                return None
            rad = min(rad, b.radius)
        pieces = []
        for a, g, lo, hi in base.pieces:
            nhi = min(hi, rad)
            if nhi > lo:
                pieces.append((a, g, lo, nhi))
        return RadialProfile(base.dim, base.atom, tuple(pieces))
    if isinstance(mu, MeasureSum):
        atom = 0.0
        pieces: list = []
        for p in mu.parts:
            prof = radial_profile(p, _factor)
            if prof is None:
                return None
            atom += prof.atom
            pieces.extend(prof.pieces)
        return RadialProfile(mu.dim, atom, tuple(pieces))
    return None
