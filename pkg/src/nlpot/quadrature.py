"""Shared 1-D quadrature helpers: adaptive Simpson, Gauss panels, log grids."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

__all__ = [
    "adaptive_simpson",
    "adaptive_simpson_panels",
    "log_grid",
    "log_edges",
    "gauss_panel_rule",
]


def _simpson_step(f, a, fa, b, fb, m, fm, whole, tol, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * tol:
        return left + right + delta / 15.0, abs(delta) / 15.0
    lv, le = _simpson_step(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
    rv, re = _simpson_step(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    return lv + rv, le + re


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10,
                     max_depth: int = 48) -> tuple[float, float]:
    """Adaptive Simpson integral of a scalar function on [a, b].

    Returns (value, error_estimate).  f may return numpy scalars.
    """
    a, b = float(a), float(b)
    if not b > a:
        return 0.0, 0.0
    fa, fb = float(f(a)), float(f(b))
    m = 0.5 * (a + b)
    fm = float(f(m))
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth)


def adaptive_simpson_panels(f, edges, tol: float = 1e-10,
                            max_depth: int = 40) -> tuple[float, float]:
    """Adaptive Simpson over consecutive panels given by sorted edges."""
    edges = [float(e) for e in edges]
    total = 0.0
    err = 0.0
    npanels = max(len(edges) - 1, 1)
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        v, e = adaptive_simpson(f, a, b, tol / npanels, max_depth)
        total += v
        err += e
    return total, err


def log_grid(a: float, b: float, per_decade: int) -> np.ndarray:
    """Logarithmically spaced points on [a, b] with roughly per_decade points per decade."""
    if not (a > 0 and b > a):
        raise ValueError("log_grid needs 0 < a < b")
    decades = math.log10(b / a)
    count = max(int(math.ceil(decades * per_decade)), 2)
    return np.geomspace(a, b, count + 1)


def log_edges(a: float, b: float, per_decade: int, breaks=()) -> np.ndarray:
    """Panel edges on [a, b]: log-spaced, refined to pass through given breakpoints."""
    base = list(log_grid(a, b, per_decade))
    for br in breaks:
        br = float(br)
        if a < br < b:
            base.append(br)
    edges = np.array(sorted(set(base)))
    return edges


@lru_cache(maxsize=32)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gauss_panel_rule(edges, order: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights for the union of panels between edges."""
    edges = np.asarray(edges, dtype=float)
    x, w = _leggauss(order)
    a = edges[:-1]
    b = edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    keep = weights > 0
    return nodes[keep], weights[keep]
