"""Variational p-capacity of balls, ball-capacity domination of a measure,
lower estimates for the localized weighted-inequality constant kappa(B),
and the intrinsic potential built from kappa over growing balls.

kappa(B) is the least constant bounding the L^q(sigma|_B) size of Wolff
potentials against the (1/(p-1))-power of the input total mass.  Exact
upper bounds are not computable here; estimates are certified lower bounds
(Dirac trials) or fixed-point values that are two-sided only up to
dimensional constants, and every consumer flags that semantics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Ball, SpaceParams
from .measures import (
    Measure,
    RadialProfile,
    _power_integral,
    radial_profile,
    restrict,
    zero_measure,
)
from .potentials import wolff, wolff_of_point_mass, QuadratureConfig, DEFAULT_CFG
from .sampling import ConditionReport, SamplingPlan, sup_condition_report

__all__ = [
    "ball_capacity",
    "CapacityConditionReport",
    "capacity_condition_const",
    "KappaEstimate",
    "kappa_lower",
    "kappa_fixed_point",
    "IntrinsicPotentialResult",
    "intrinsic_potential",
]


def ball_capacity(r: float, sp: SpaceParams) -> float:
    """Variational p-capacity of a ball: omega * ((n-p)/(p-1))^(p-1) * r^(n-p)."""
    if not r > 0:
        raise ValueError("ball radius must be positive")
    return sp.omega * ((sp.n - sp.p) / (sp.p - 1.0)) ** (sp.p - 1.0) * r ** (sp.n - sp.p)


@dataclass
class CapacityConditionReport:
    """Sampled supremum of sigma(B) / cap_p(B) over balls."""

    c_est: float
    achieving: Ball | None
    divergent: bool
    divergence_exponent: float | None
    samples: int

    @property
    def finite(self) -> bool:
        return not self.divergent


def capacity_condition_const(sigma: Measure, sp: SpaceParams,
                             plan: SamplingPlan | None = None
                             ) -> CapacityConditionReport:
    """Supremum over sampled balls of sigma(B) / cap_p(B).

    A lower bound for the true constant over compact sets (balls only);
    divergence is flagged when the ratio grows without bound as radii
    shrink, e.g. at atoms.
    """
    if sigma.is_zero():
        return CapacityConditionReport(0.0, None, False, None, 0)
    if plan is None:
        plan = SamplingPlan.for_measure(sigma)
    cap_coef = ball_capacity(1.0, sp)

    def ratio(center, radii):
        masses = sigma.ball_masses(center, radii)
        return masses / (cap_coef * radii ** (sp.n - sp.p))

    rep = sup_condition_report("capacity-domination", ratio, plan)
    ball = (Ball(np.asarray(rep.achieving_center), rep.achieving_radius)
            if rep.achieving_center is not None else None)
    return CapacityConditionReport(rep.sup_constant, ball,
                                   rep.verdict == "divergent",
                                   rep.divergence_exponent, rep.samples)


@dataclass
class KappaEstimate:
    """Certified lower estimate of kappa(B).

    dirac_trials values are true lower bounds up to quadrature tolerance;
    fixed_point values are two-sided only up to dimensional constants.
    """

    lower: float
    method_detail: str  # "dirac_trials" or "fixed_point"
    trial_count: int
    ball: Ball


def _radial_power_moment(prof: RadialProfile, expo: float) -> float:
    """integral |y|^expo d sigma(y) for a radial profile (closed form)."""
    from .geometry import unit_sphere_area

    total = 0.0
    if prof.atom > 0:
        if expo < 0:
            return math.inf
        total += prof.atom * (0.0 if expo > 0 else 1.0)
    omega = unit_sphere_area(prof.dim)
    for a, gamma, lo, hi in prof.pieces:
        total += a * omega * _power_integral(prof.dim - 1 + gamma + expo, lo, hi)
        if math.isinf(total):
            return math.inf
    return total


def _trial_points(sigma_b: Measure, ball: Ball, cap: int) -> np.ndarray:
    """Support-driven trial centers inside the ball plus a coarse lattice."""
    pts = [ball.center]
    for row in sigma_b.support_points():
        if float(np.linalg.norm(row - ball.center)) <= ball.radius:
            pts.append(np.asarray(row, dtype=float))
    # coarse lattice in the inscribed cube
    n = ball.dim
    side = ball.radius / math.sqrt(n)
    offsets = (-0.6, 0.0, 0.6)
    import itertools
    for combo in itertools.product(offsets, repeat=n):
        pts.append(ball.center + side * np.asarray(combo))
    uniq = []
    seen = set()
    for v in pts:
        key = tuple(np.round(v, 12))
        if key not in seen:
            seen.add(key)
            uniq.append(v)
        if len(uniq) >= cap:
            break
    return np.asarray(uniq)


def kappa_lower(sigma: Measure, ball: Ball, sp: SpaceParams,
                trials: int = 32, per_dim: int = 6,
                include_sigma_trial: bool = True) -> KappaEstimate:
    """Lower bound for kappa(B) from point-mass trials and sigma|_B itself.

    Point masses have unit total mass and a closed-form Wolff potential, so
    each trial center y certifies kappa(B) >= ||W_p delta_y||_{L^q(sigma_B)}.
    """
    q = sp.require_q()
    sigma_b = restrict(sigma, ball)
    if sigma_b.is_zero():
        return KappaEstimate(0.0, "dirac_trials", 0, ball)
    _, atom_w = sigma_b.atom_list()
    if len(atom_w) > 0:
        # a point mass at an atom of sigma_B has infinite L^q(sigma_B) size
        return KappaEstimate(math.inf, "dirac_trials", 1, ball)

    pts, w = sigma_b.nodes(per_dim)
    ys = _trial_points(sigma_b, ball, trials)
    best = 0.0

    beta = sp.wolff_exponent
    prof = radial_profile(sigma_b)
    for y in ys:
        if prof is not None and float(np.linalg.norm(y)) <= 1e-13 * ball.radius:
            # exact radial moment for the origin trial
            coef = ((sp.p - 1.0) / (sp.n - sp.p)) ** q
            moment = _radial_power_moment(prof, -beta * q)
            cand = (coef * moment) ** (1.0 / q) if math.isfinite(moment) else math.inf
        else:
            d = np.linalg.norm(pts - y, axis=1)
            vals = wolff_of_point_mass(sp, d)
            finite = np.isfinite(vals)
            cand = float(np.dot(w[finite], vals[finite] ** q)) ** (1.0 / q)
        best = max(best, cand)

    trial_count = len(ys)
    if include_sigma_trial and not _has_partial_restriction(sigma_b):
        wp = np.array([wolff(sigma_b, pt, sp).value for pt in pts])
        finite = np.isfinite(wp)
        norm_q = float(np.dot(w[finite], wp[finite] ** q)) ** (1.0 / q)
        total = sigma_b.total_mass()
        cand = norm_q / total ** (1.0 / (sp.p - 1.0))
        best = max(best, cand)
        trial_count += 1
    return KappaEstimate(best, "dirac_trials", trial_count, ball)


def _has_partial_restriction(mu: Measure) -> bool:
    from .measures import MeasureSum, Restricted, Scaled

    if isinstance(mu, Restricted):
        return True
    if isinstance(mu, Scaled):
        return _has_partial_restriction(mu.base)
    if isinstance(mu, MeasureSum):
        return any(_has_partial_restriction(p) for p in mu.parts)
    return False


def kappa_fixed_point(sigma: Measure, ball: Ball, sp: SpaceParams,
                      cfg=None) -> KappaEstimate:
    """kappa(B) estimate from the nontrivial fixed point v = W_p(v^q sigma_B).

    Returns (integral_B v^q d sigma)^((p-1-q)/(q(p-1))); two-sided for the
    true kappa only up to dimensional constants, hence the fixed_point tag.
    """
    q = sp.require_q()
    if not 0 < q < sp.p - 1.0:
        raise ValueError("fixed-point kappa estimates need 0 < q < p-1")
    sigma_b = restrict(sigma, ball)
    if sigma_b.is_zero():
        return KappaEstimate(0.0, "fixed_point", 0, ball)
    from .solver import fixed_point_subnatural

    res = fixed_point_subnatural(sigma_b, zero_measure(sigma.dim), sp, cfg)
    if res.status != "converged":
        raise RuntimeError(f"kappa fixed point did not converge: {res.status}")
    mass_q = float(np.dot(res.node_weights, res.values[res.node_mask] ** q))
    expo = (sp.p - 1.0 - q) / (q * (sp.p - 1.0))
    return KappaEstimate(mass_q ** expo, "fixed_point", res.iterations, ball)


@dataclass
class IntrinsicPotentialResult:
    """Value of the kappa-built potential at a point, with method provenance."""

    value: float
    err_estimate: float
    diverged: bool
    radii: np.ndarray
    kappa_values: np.ndarray
    methods: tuple

    def __float__(self):
        return self.value


def intrinsic_potential(sigma: Measure, x, sp: SpaceParams,
                        per_decade: int = 16, trials: int = 24,
                        per_dim: int = 6) -> IntrinsicPotentialResult:
    """Wolff-type integral with kappa(B(x,r))^(q(p-1)/(p-1-q)) as ball growth.

    kappa is estimated by Dirac trials on log-spaced radii; once the ball
    swallows the support of sigma the estimate saturates and the tail is
    closed form.  Divergence (e.g. atomic sigma) is flagged, not evaluated.
    """
    q = sp.require_q()
    if not 0 < q < sp.p - 1.0:
        raise ValueError("the intrinsic potential needs 0 < q < p-1")
    x = np.asarray(x, dtype=float)
    if sigma.is_zero():
        return IntrinsicPotentialResult(0.0, 0.0, False, np.array([]),
                                        np.array([]), ())
    _, atom_w = sigma.atom_list()
    if len(atom_w) > 0:
        return IntrinsicPotentialResult(math.inf, 0.0, True, np.array([]),
                                        np.array([]), ())
    sat = sigma.saturation_radius(x)
    if math.isinf(sat):
        raise ValueError("intrinsic potential needs bounded sigma support")
    d0 = sigma.distance_to_support(x)
    r_lo = max(d0 * (1.0 + 1e-9), sat * 1e-4) if d0 > 0 else sat * 1e-4
    radii = np.geomspace(r_lo, sat, max(int(per_decade * math.log10(sat / r_lo)), 4))

    # shared nodes and trial set, filtered per radius
    pts, w = sigma.nodes(per_dim)
    master = _trial_points(sigma, Ball(x, sat), trials)
    beta = sp.wolff_exponent
    ek = q * (sp.p - 1.0) / (sp.p - 1.0 - q)

    kappas = np.zeros(len(radii))
    methods = []
    node_dist = np.linalg.norm(pts - x, axis=1)
    trial_dist = np.linalg.norm(master - x, axis=1)
    for i, r in enumerate(radii):
        nmask = node_dist <= r
        if not np.any(nmask):
            kappas[i] = 0.0
            methods.append("empty")
            continue
        tmask = trial_dist <= r
        ys = master[tmask] if np.any(tmask) else x[None, :]
        d = np.linalg.norm(pts[nmask][None, :, :] - ys[:, None, :], axis=2)
        vals = wolff_of_point_mass(sp, d)
        vals = np.where(np.isfinite(vals), vals, 0.0)
        cands = (vals ** q) @ w[nmask]
        kappas[i] = float(np.max(cands)) ** (1.0 / q)
        methods.append("dirac_trials")

    integrand = (kappas ** ek / radii ** (sp.n - sp.p)) ** (1.0 / (sp.p - 1.0)) / radii
    logs = np.log(radii)
    # integral g(r) dr = integral g(r) r d(log r)
    mid = float(np.trapezoid(integrand * radii, logs))

    kappa_full = kappas[-1]
    tail = ((sp.p - 1.0) / (sp.n - sp.p)) * kappa_full ** (ek / (sp.p - 1.0)) \
        * sat ** (-beta)

    # head below r_lo: power extrapolation of h(r) = integrand * r in log space;
    # nonpositive slope means the head integral cannot converge
    diverged = False
    head = 0.0
    if d0 <= 0:
        nz = integrand > 0
        if nz.sum() >= 4:
            rr = radii[nz][:5]
            hh = (integrand * radii)[nz][:5]
            slope = float(np.polyfit(np.log(rr), np.log(hh), 1)[0])
            if slope <= 1e-2:
                diverged = True
            else:
                head = hh[0] / slope

    coarse = float(np.trapezoid((integrand * radii)[::2], logs[::2]))
    err = abs(mid - coarse) + head * 0.5
    value = math.inf if diverged else mid + tail + head
    return IntrinsicPotentialResult(value, err, diverged, radii, kappas,
                                    tuple(methods))
