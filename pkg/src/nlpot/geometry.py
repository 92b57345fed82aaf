"""Euclidean geometry primitives: space parameters, balls, spherical caps.

Cap areas and cap volumes are closed forms built from the recurrences for
integral_0^theta sin^k t dt, so ball/ball intersection volumes need no
quadrature.  Intersections of two spherical caps (needed for restricted
measures) reduce to a 1-D integral of a closed-form azimuthal cap area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpaceParams",
    "Ball",
    "unit_sphere_area",
    "ball_volume",
    "sin_power_integral",
    "cap_area",
    "cap_volume",
    "ball_intersection_volume",
    "two_cap_area",
]


def unit_sphere_area(n: int) -> float:
    """Surface area of the unit (n-1)-sphere in R^n, 2 pi^(n/2) / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n: int, r: float = 1.0) -> float:
    """Volume of the n-dimensional ball of radius r."""
    return unit_sphere_area(n) / n * float(r) ** n


def sin_power_integral(k: int, theta):
    """integral_0^theta sin(t)^k dt for integer k >= 0; vectorized in theta."""
    theta = np.asarray(theta, dtype=float)
    if k == 0:
        return theta + 0.0
    if k == 1:
        return 1.0 - np.cos(theta)
    s, c = np.sin(theta), np.cos(theta)
    prev = theta + 0.0          # I_0
    cur = 1.0 - c               # I_1
    for j in range(2, k + 1):
        prev, cur = cur, ((j - 1) * prev - s ** (j - 1) * c) / j
    return cur


def cap_area(n: int, theta):
    """Area of the geodesic cap of angular radius theta on the unit sphere S^(n-1).

    Valid for n >= 2; theta is clipped to [0, pi].  cap_area(n, pi) equals the
    full sphere area.
    """
    th = np.clip(np.asarray(theta, dtype=float), 0.0, math.pi)
    return unit_sphere_area(n - 1) * sin_power_integral(n - 2, th)


def cap_volume(n: int, r, h):
    """Volume of the spherical cap {x in B(0,r): x_1 >= h}; h clipped to [-r, r]."""
    r = np.asarray(r, dtype=float)
    hh = np.clip(np.asarray(h, dtype=float) / np.where(r > 0, r, 1.0), -1.0, 1.0)
    phi = np.arcsin(hh)
    out = ball_volume(n - 1) * r ** n * sin_power_integral(n, math.pi / 2.0 - phi)
    return np.where(r > 0, out, 0.0)


def ball_intersection_volume(n: int, r1, r2, d):
    """Volume of the intersection of balls with radii r1, r2 and center distance d.

    Closed form: the lens is the union of two spherical caps split at the
    radical plane.  Vectorized over any broadcastable combination.
    """
    r1, r2, d = np.broadcast_arrays(
        np.asarray(r1, float), np.asarray(r2, float), np.asarray(d, float)
    )
    vol_small = np.minimum(ball_volume(n) * r1 ** n, ball_volume(n) * r2 ** n)
    with np.errstate(divide="ignore", invalid="ignore"):
        tstar = np.where(d > 0, (d * d + r1 * r1 - r2 * r2) / (2.0 * d), 0.0)
    lens = cap_volume(n, r1, tstar) + cap_volume(n, r2, d - tstar)
    out = np.where(d >= r1 + r2, 0.0, np.where(d <= np.abs(r1 - r2), vol_small, lens))
    return out if out.ndim else float(out)


def _arc_intersection_length(theta1: float, theta2: float, beta: float) -> float:
    """Length of the intersection of two arcs on the unit circle.

    Arcs are {|angle - 0| <= theta1} and {|angle - beta| <= theta2}.
    """
    lo = max(-theta1, beta - theta2)
    hi = min(theta1, beta + theta2)
    first = max(0.0, hi - lo)
    # the arcs can also meet across the branch cut at angle pi
    lo2 = max(-theta1, beta - theta2 - 2.0 * math.pi)
    hi2 = min(theta1, beta + theta2 - 2.0 * math.pi)
    second = max(0.0, hi2 - lo2)
    return min(first + second, 2.0 * min(theta1, theta2))


def two_cap_area(n: int, theta1: float, theta2: float, beta: float,
                 tol: float = 1e-10) -> float:
    """Area of the intersection of two geodesic caps on the unit sphere S^(n-1).

    Caps have angular radii theta1, theta2 around axes separated by angle beta.
    """
    t1 = min(max(float(theta1), 0.0), math.pi)
    t2 = min(max(float(theta2), 0.0), math.pi)
    beta = min(max(float(beta), 0.0), math.pi)
    if t1 == 0.0 or t2 == 0.0:
        return 0.0
    if t1 > t2:
        t1, t2 = t2, t1
    if beta + t1 <= t2:
        return float(cap_area(n, t1))
    if beta >= t1 + t2:
        return 0.0
    if n == 2:
        return _arc_intersection_length(t1, t2, beta)

    sb = math.sin(beta)
    cb = math.cos(beta)
    c2 = math.cos(t2)

    def azimuthal(t):
        t = np.asarray(t, dtype=float)
        st = np.sin(t)
        denom = st * sb
        with np.errstate(divide="ignore", invalid="ignore"):
            cpsi = np.where(denom > 0, (c2 - np.cos(t) * cb) / np.where(denom > 0, denom, 1.0), 0.0)
        psi = np.arccos(np.clip(cpsi, -1.0, 1.0))
        area = cap_area(n - 1, psi)
        degen = denom <= 0
        if np.any(degen):
            inside = np.cos(np.abs(beta - t)) >= c2
            area = np.where(degen, np.where(inside, unit_sphere_area(n - 1), 0.0), area)
        return np.sin(t) ** (n - 2) * area

    from .quadrature import adaptive_simpson_panels

    breaks = sorted({0.0, t1, abs(beta - t2), beta + t2, 2.0 * math.pi - beta - t2})
    edges = [b for b in breaks if 0.0 < b < t1]
    value, _ = adaptive_simpson_panels(azimuthal, [0.0] + edges + [t1], tol)
    return float(value)


@dataclass(frozen=True)
class SpaceParams:
    """Ambient dimension n, exponent p with 1 < p < n, optional growth exponent q."""

    n: int
    p: float
    q: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("dimension n must be an integer >= 2")
        object.__setattr__(self, "n", int(self.n))
        if not (1.0 < self.p < self.n):
            raise ValueError(f"need 1 < p < n, got p={self.p}, n={self.n}")
        if self.q is not None and not self.q > 0:
            raise ValueError("growth exponent q must be positive")

    @property
    def omega(self) -> float:
        """Surface area of the unit (n-1)-sphere."""
        return unit_sphere_area(self.n)

    @property
    def p_prime(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def wolff_exponent(self) -> float:
        """Decay power (n-p)/(p-1) of the Wolff potential of a point mass."""
        return (self.n - self.p) / (self.p - 1.0)

    def require_q(self) -> float:
        if self.q is None:
            raise ValueError("this operation requires the growth exponent q")
        return self.q

    def with_q(self, q: float) -> "SpaceParams":
        return SpaceParams(self.n, self.p, q)


class Ball:
    """Closed ball with an n-vector center and positive radius."""

    __slots__ = ("center", "radius")

    def __init__(self, center, radius: float):
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if center.ndim != 1:
            raise ValueError("ball center must be a vector")
        if not radius > 0:
            raise ValueError("ball radius must be positive")
        self.center = center
        self.radius = float(radius)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def doubled(self) -> "Ball":
        """Concentric ball with twice the radius."""
        return Ball(self.center, 2.0 * self.radius)

    def scaled(self, factor: float) -> "Ball":
        return Ball(self.center, factor * self.radius)

    def contains_point(self, x) -> bool:
        return float(np.linalg.norm(np.asarray(x, float) - self.center)) <= self.radius

    def contains_ball(self, other: "Ball") -> bool:
        d = float(np.linalg.norm(other.center - self.center))
        return d + other.radius <= self.radius + 1e-15 * self.radius

    def disjoint_from(self, other: "Ball") -> bool:
        d = float(np.linalg.norm(other.center - self.center))
        return d >= self.radius + other.radius

    def volume(self) -> float:
        return ball_volume(self.dim, self.radius)

    def __repr__(self):
        c = ", ".join(f"{v:g}" for v in self.center)
        return f"Ball(({c}), r={self.radius:g})"
