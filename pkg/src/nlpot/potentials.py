"""Pointwise nonlinear potentials of measures: Wolff potentials, truncated
Wolff tails, Riesz potentials, and fractional maximal functions.

Dirac sums are evaluated by exact piecewise power integration over sorted
atom distances.  Other measures use Gauss panels on a log grid between the
support distance and the saturation radius, with closed-form head and tail
segments where the ball-mass function is an exact power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Ball, SpaceParams
from .measures import Measure, radial_profile
from .quadrature import gauss_panel_rule, log_edges, log_grid

__all__ = [
    "QuadratureConfig",
    "PotentialEvaluation",
    "wolff",
    "wolff_tail",
    "riesz",
    "frac_maximal",
    "wolff_of_point_mass",
    "WolffTailEvaluator",
]


@dataclass(frozen=True)
class QuadratureConfig:
    """Controls the log-radius quadrature used by the potential evaluators."""

    rho_min: float | None = None
    rho_max: float | None = None
    points_per_decade: int = 16
    tol: float = 1e-9
    gauss_order: int = 8

    def __post_init__(self):
        if self.points_per_decade < 8:
            raise ValueError("points_per_decade must be at least 8")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.rho_min is not None and self.rho_max is not None:
            if not 0 < self.rho_min < self.rho_max:
                raise ValueError("need 0 < rho_min < rho_max")


DEFAULT_CFG = QuadratureConfig()


@dataclass
class PotentialEvaluation:
    """Potential value in [0, +inf] with an error estimate and a method tag."""

    value: float
    err_estimate: float
    method: str  # "exact_piecewise" or "quadrature"
    growth_exponent: float | None = None

    def __float__(self):
        return float(self.value)

    @property
    def diverged(self) -> bool:
        return math.isinf(self.value)


class _PowerKernel:
    """Kernel integrand pref * m(rho)^qm * rho^r0 integrated in d rho.

    Wolff: qm=1/(p-1), r0=-(n-p)/(p-1)-1.  Riesz (layer cake): pref=n-alpha,
    qm=1, r0=alpha-n-1.
    """

    def __init__(self, pref: float, qm: float, r0: float):
        self.pref = pref
        self.qm = qm
        self.r0 = r0

    def term(self, m, rho):
        m = np.asarray(m, dtype=float)
        rho = np.asarray(rho, dtype=float)
        with np.errstate(invalid="ignore"):
            return self.pref * np.where(m > 0, m, 0.0) ** self.qm * rho ** self.r0

    def head_exponent(self, beta: float) -> float:
        """Exponent e with integral_0^a of the kernel under m = c rho^beta ~ a^e."""
        return self.qm * beta + self.r0 + 1.0

    def power_integral(self, c: float, beta: float, a: float, b: float) -> float:
        """integral_a^b pref * (c rho^beta)^qm * rho^r0 d rho (b may be inf)."""
        if c <= 0 or b <= a:
            return 0.0
        e = self.head_exponent(beta)
        amp = self.pref * c ** self.qm
        if math.isinf(b):
            if e >= 0:
                return math.inf
            return -amp * a ** e / e
        if abs(e) < 1e-13:
            if a <= 0:
                return math.inf
            return amp * math.log(b / a)
        a_term = a ** e if a > 0 else (0.0 if e > 0 else math.inf)
        if math.isinf(a_term):
            return math.inf
        return amp * (b ** e - a_term) / e

    def tail(self, total: float, b: float) -> float:
        return self.power_integral(total, 0.0, b, math.inf)


def _wolff_kernel(sp: SpaceParams) -> _PowerKernel:
    return _PowerKernel(1.0, 1.0 / (sp.p - 1.0), -sp.wolff_exponent - 1.0)


def _riesz_kernel(n: int, alpha: float) -> _PowerKernel:
    return _PowerKernel(n - alpha, 1.0, alpha - n - 1.0)


# ---------------------------------------------------------------------------
# exact piecewise evaluation for purely atomic measures


def _atom_geometry(mu: Measure, x):
    pts, w = mu.atom_list()
    d = np.linalg.norm(pts - np.asarray(x, dtype=float), axis=1)
    order = np.argsort(d)
    d = d[order]
    w = w[order]
    # merge equal distances
    dist, idx = np.unique(d, return_inverse=True)
    mass = np.zeros_like(dist)
    np.add.at(mass, idx, w)
    return dist, np.cumsum(mass)


def _atoms_kernel_integral(dist, cum, kernel: _PowerKernel, r_from: float) -> float:
    """Exact integral of kernel.term(mass(rho), rho) over [r_from, inf)."""
    if len(dist) == 0:
        return 0.0
    if r_from <= 0 and dist[0] <= 0:
        return math.inf
    total = 0.0
    edges = np.concatenate([dist, [math.inf]])
    for j in range(len(dist)):
        a = max(edges[j], r_from)
        b = edges[j + 1]
        if b <= a:
            continue
        total += kernel.power_integral(cum[j], 0.0, a, b)
        if math.isinf(total):
            return math.inf
    return total


# ---------------------------------------------------------------------------
# generic quadrature evaluation


def _characteristic_scale(mu: Measure, x) -> float:
    sb = mu.support_ball()
    x = np.asarray(x, dtype=float)
    if sb is not None:
        return max(sb.radius, float(np.linalg.norm(x - sb.center)), 1e-12)
    return max(float(np.linalg.norm(x)), 1.0)


def _unbounded_tail_behavior(mu: Measure):
    """(c, beta): centered mass ~ c rho^beta at infinity for unbounded measures."""
    prof = radial_profile(mu)
    if prof is None:
        raise ValueError("unbounded measures must be radial about the origin")
    top = max(prof.pieces, key=lambda piece: piece[3])
    a, gamma, _, hi = top
    if not math.isinf(hi):
        raise ValueError("expected an unbounded top piece")
    from .geometry import unit_sphere_area

    beta = mu.dim + gamma
    if abs(beta) < 1e-13:
        return a * unit_sphere_area(mu.dim), 0.0  # logarithmic growth; treated as beta->0
    return a * unit_sphere_area(mu.dim) / beta, beta


def _quadrature_potential(mu: Measure, x, kernel: _PowerKernel, r_from: float,
                          cfg: QuadratureConfig) -> PotentialEvaluation:
    x = np.asarray(x, dtype=float)
    total = mu.total_mass()
    if total == 0.0:
        return PotentialEvaluation(0.0, 0.0, "quadrature")
    d0 = mu.distance_to_support(x)
    sat = mu.saturation_radius(x)
    scale0 = _characteristic_scale(mu, x)
    breaks = np.asarray(mu.mass_breakpoints(x), dtype=float)
    breaks = breaks[np.isfinite(breaks) & (breaks > 0)]

    head_val = 0.0
    head_err = 0.0
    lo = max(r_from, d0)
    if lo <= 0.0:
        c_loc, beta_loc = mu.local_mass_power(x)
        if c_loc > 0.0:
            e = kernel.head_exponent(beta_loc)
            if e <= 1e-13:
                return PotentialEvaluation(math.inf, 0.0, "quadrature",
                                           growth_exponent=e)
            h_exact = float(breaks.min()) if len(breaks) else scale0 * 1e-3
            h0 = min(h_exact, scale0 * 1e-4)
            head_val = kernel.power_integral(c_loc, beta_loc, 0.0, h0)
            # bound the head error by how far the local power law is off at h0
            m_h0 = mu.ball_mass(Ball(x, h0), cfg.tol)
            model = c_loc * h0 ** beta_loc
            rel = abs(m_h0 - model) / model if model > 0 else 1.0
            head_err = abs(head_val) * min(3.0 * rel, 1.0)
            lo = h0
        else:
            # boundary-type point: no exact local law; start just above zero
            h0 = (float(breaks.min()) if len(breaks) else scale0) * 1e-4
            m_h0 = mu.ball_mass(Ball(x, h0), cfg.tol)
            head_err = float(kernel.term(m_h0, h0)) * h0
            lo = h0

    if math.isinf(sat):
        c_tail, beta_tail = _unbounded_tail_behavior(mu)
        e_tail = kernel.head_exponent(beta_tail)
        if e_tail >= -1e-13:
            return PotentialEvaluation(math.inf, 0.0, "quadrature",
                                       growth_exponent=e_tail)
        fin = breaks[np.isfinite(breaks)]
        hi = max(scale0, float(fin.max()) if len(fin) else 0.0,
                 float(np.linalg.norm(x)), lo) * 1e3
        tail_val = kernel.power_integral(c_tail, beta_tail, hi, math.inf)
        dxn = float(np.linalg.norm(x))
        tail_err = abs(tail_val) * min(1.0, 3.0 * max(beta_tail, 1.0) * dxn / hi + 1e-12)
    else:
        hi = sat
        tail_val = kernel.tail(total, max(hi, lo))
        tail_err = 0.0

    if cfg.rho_max is not None:
        hi = min(hi, cfg.rho_max) if r_from < cfg.rho_max else hi
    if cfg.rho_min is not None:
        lo = max(lo, min(cfg.rho_min, hi * 0.5))
    lo = max(lo, r_from)

    mid_val = 0.0
    mid_err = 0.0
    if hi > lo:
        edges = log_edges(lo, hi, cfg.points_per_decade,
                          breaks[(breaks > lo) & (breaks < hi)])
        nodes, wts = gauss_panel_rule(edges, cfg.gauss_order)
        masses = mu.ball_masses(x, nodes, cfg.tol)
        mid_val = float(np.dot(wts, kernel.term(masses, nodes)))
        nodes2, wts2 = gauss_panel_rule(edges, max(cfg.gauss_order - 3, 3))
        masses2 = mu.ball_masses(x, nodes2, cfg.tol)
        mid2 = float(np.dot(wts2, kernel.term(masses2, nodes2)))
        mid_err = abs(mid_val - mid2)

    value = head_val + mid_val + tail_val
    err = head_err + mid_err + tail_err
    return PotentialEvaluation(value, err, "quadrature")


def _kernel_potential(mu: Measure, x, kernel: _PowerKernel, r_from: float,
                      cfg: QuadratureConfig) -> PotentialEvaluation:
    if mu.is_purely_atomic():
        dist, cum = _atom_geometry(mu, x)
        if len(dist) == 0:
            return PotentialEvaluation(0.0, 0.0, "exact_piecewise")
        value = _atoms_kernel_integral(dist, cum, kernel, r_from)
        err = 0.0 if math.isinf(value) else 1e-14 * value
        return PotentialEvaluation(value, err, "exact_piecewise")
    return _quadrature_potential(mu, x, kernel, r_from, cfg)


# ---------------------------------------------------------------------------
# public operations


def wolff(mu: Measure, x, sp: SpaceParams, cfg: QuadratureConfig = DEFAULT_CFG
          ) -> PotentialEvaluation:
    """Wolff potential integral_0^inf (mu(B(x,rho))/rho^(n-p))^(1/(p-1)) drho/rho."""
    if mu.dim != sp.n:
        raise ValueError("measure dimension does not match space parameters")
    return _kernel_potential(mu, x, _wolff_kernel(sp), 0.0, cfg)


def wolff_tail(mu: Measure, x, R: float, sp: SpaceParams,
               cfg: QuadratureConfig = DEFAULT_CFG) -> PotentialEvaluation:
    """Truncated Wolff potential over radii [R, inf)."""
    if not R >= 0:
        raise ValueError("tail radius R must be nonnegative")
    if mu.dim != sp.n:
        raise ValueError("measure dimension does not match space parameters")
    return _kernel_potential(mu, x, _wolff_kernel(sp), float(R), cfg)


def riesz(mu: Measure, x, alpha: float, cfg: QuadratureConfig = DEFAULT_CFG
          ) -> PotentialEvaluation:
    """Riesz potential integral |x-y|^-(n-alpha) dmu(y) of order alpha in (0, n)."""
    n = mu.dim
    if not 0 < alpha < n:
        raise ValueError("riesz order must satisfy 0 < alpha < n")
    if mu.is_purely_atomic():
        pts, w = mu.atom_list()
        if len(w) == 0:
            return PotentialEvaluation(0.0, 0.0, "exact_piecewise")
        d = np.linalg.norm(pts - np.asarray(x, dtype=float), axis=1)
        if np.any(d <= 0):
            return PotentialEvaluation(math.inf, 0.0, "exact_piecewise")
        value = float(np.sum(w * d ** (alpha - n)))
        return PotentialEvaluation(value, 1e-14 * value, "exact_piecewise")
    return _quadrature_potential(mu, x, _riesz_kernel(n, alpha), 0.0, cfg)


def frac_maximal(mu: Measure, x, alpha: float,
                 cfg: QuadratureConfig = DEFAULT_CFG) -> PotentialEvaluation:
    """Fractional maximal function sup_r mu(B(x,r)) / r^(n-alpha)."""
    n = mu.dim
    if not 0 < alpha < n:
        raise ValueError("maximal order must satisfy 0 < alpha < n")
    x = np.asarray(x, dtype=float)
    if mu.is_purely_atomic():
        dist, cum = _atom_geometry(mu, x)
        if len(dist) == 0:
            return PotentialEvaluation(0.0, 0.0, "exact_piecewise")
        if dist[0] <= 0:
            return PotentialEvaluation(math.inf, 0.0, "exact_piecewise",
                                       growth_exponent=-(n - alpha))
        value = float(np.max(cum / dist ** (n - alpha)))
        return PotentialEvaluation(value, 1e-14 * value, "exact_piecewise")

    total = mu.total_mass()
    if total == 0.0:
        return PotentialEvaluation(0.0, 0.0, "quadrature")
    d0 = mu.distance_to_support(x)
    sat = mu.saturation_radius(x)
    scale0 = _characteristic_scale(mu, x)
    if d0 <= 0.0:
        c_loc, beta_loc = mu.local_mass_power(x)
        if c_loc > 0.0 and beta_loc < n - alpha - 1e-13:
            return PotentialEvaluation(math.inf, 0.0, "quadrature",
                                       growth_exponent=beta_loc - (n - alpha))
    if math.isinf(sat):
        c_tail, beta_tail = _unbounded_tail_behavior(mu)
        if beta_tail > n - alpha + 1e-13:
            return PotentialEvaluation(math.inf, 0.0, "quadrature",
                                       growth_exponent=beta_tail - (n - alpha))
        hi = max(scale0, float(np.linalg.norm(x))) * 1e3
    else:
        hi = sat
    lo = max(d0, hi * 1e-12) if d0 > 0 else scale0 * 1e-6
    grid = log_grid(lo, hi, 2 * cfg.points_per_decade)
    breaks = np.asarray(mu.mass_breakpoints(x), dtype=float)
    grid = np.unique(np.concatenate([grid, breaks[(breaks >= lo) & (breaks <= hi)]]))
    masses = mu.ball_masses(x, grid, cfg.tol)
    ratios = masses / grid ** (n - alpha)
    lower = float(np.max(ratios))
    envelope = masses[1:] / grid[:-1] ** (n - alpha)
    upper = max(float(np.max(envelope)) if len(envelope) else lower, lower)
    return PotentialEvaluation(lower, upper - lower, "quadrature")


def wolff_of_point_mass(sp: SpaceParams, distance, weight=1.0):
    """Closed form Wolff potential of a point mass at a given distance."""
    distance = np.asarray(distance, dtype=float)
    beta = sp.wolff_exponent
    coef = (sp.p - 1.0) / (sp.n - sp.p) * float(weight) ** (1.0 / (sp.p - 1.0))
    with np.errstate(divide="ignore"):
        return np.where(distance > 0, coef * distance ** (-beta), math.inf)


# ---------------------------------------------------------------------------
# cached tail evaluator for sampling sweeps


class WolffTailEvaluator:
    """Serves Wolff tail integrals from many radii around one point cheaply.

    Ball masses of mu around x are evaluated once on a panelized log grid;
    tails re-integrate the cached panels and re-Gauss only the panel cut by R.
    """

    def __init__(self, mu: Measure, x, sp: SpaceParams,
                 cfg: QuadratureConfig = DEFAULT_CFG):
        self.mu = mu
        self.x = np.asarray(x, dtype=float)
        self.sp = sp
        self.cfg = cfg
        self.kernel = _wolff_kernel(sp)
        self._atomic = mu.is_purely_atomic()
        if self._atomic:
            self._dist, self._cum = _atom_geometry(mu, x)
            return
        total = mu.total_mass()
        self._zero = total == 0.0
        if self._zero:
            return
        if math.isinf(mu.saturation_radius(x)):
            raise ValueError("tail evaluator requires bounded support")
        d0 = mu.distance_to_support(x)
        sat = mu.saturation_radius(x)
        scale0 = _characteristic_scale(mu, x)
        lo = d0 if d0 > 0 else scale0 * 1e-6
        breaks = np.asarray(mu.mass_breakpoints(x), dtype=float)
        edges = log_edges(lo, sat, cfg.points_per_decade,
                          breaks[(breaks > lo) & (breaks < sat)])
        self._edges = edges
        self._nodes, self._wts = gauss_panel_rule(edges, cfg.gauss_order)
        masses = mu.ball_masses(x, self._nodes, cfg.tol)
        self._terms = self._wts * self.kernel.term(masses, self._nodes)
        self._panel_of = np.searchsorted(edges, self._nodes, side="right") - 1
        npanels = len(edges) - 1
        self._panel_sums = np.zeros(npanels)
        np.add.at(self._panel_sums, self._panel_of, self._terms)
        self._suffix = np.concatenate([np.cumsum(self._panel_sums[::-1])[::-1], [0.0]])
        self._total = total
        self._sat = sat
        self._lo = lo
        # head below lo: local power model (only consulted for R < lo)
        self._c_loc, self._beta_loc = (mu.local_mass_power(x) if d0 <= 0
                                       else (0.0, math.inf))

    def tail(self, R: float) -> float:
        """Wolff tail of mu at x from radius R."""
        R = float(R)
        if self._atomic:
            if len(self._dist) == 0:
                return 0.0
            return _atoms_kernel_integral(self._dist, self._cum, self.kernel, R)
        if self._zero:
            return 0.0
        if R >= self._sat:
            return self.kernel.tail(self._total, R)
        out = self.kernel.tail(self._total, self._sat)
        if R <= self._lo:
            if self._c_loc > 0.0:
                e = self.kernel.head_exponent(self._beta_loc)
                if e <= 1e-13 and R <= 0.0:
                    return math.inf
                out += self.kernel.power_integral(self._c_loc, self._beta_loc,
                                                  R, self._lo)
            return out + float(self._suffix[0])
        k = int(np.searchsorted(self._edges, R, side="right") - 1)
        k = min(max(k, 0), len(self._panel_sums) - 1)
        out += float(self._suffix[k + 1])
        # re-integrate the cut panel [R, edge_{k+1}]
        b = self._edges[k + 1]
        if b > R:
            nodes, wts = gauss_panel_rule(np.array([R, b]), self.cfg.gauss_order)
            masses = self.mu.ball_masses(self.x, nodes, self.cfg.tol)
            out += float(np.dot(wts, self.kernel.term(masses, nodes)))
        return out

    def value(self) -> float:
        return self.tail(0.0)
