"""Numerical probe of the weighted Hardy-type embedding H^{alpha,b} -> H^{b - alpha/2} on the unit ball.

Test functions are radial scalars given by (F, F', F'') callables. Integer
Sobolev orders up to 2 are computed exactly for radial functions; the
second-order term uses the angular average of sum_{a<=b} |d_a d_b F|^2.
Quadrature is the midpoint rule in r, which never samples the endpoint where
the test families may be singular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class RadialTestFunction:
    name: str
    F: Callable
    dF: Callable
    d2F: Callable


def constant_one() -> RadialTestFunction:
    return RadialTestFunction(
        "one", np.ones_like, np.zeros_like, np.zeros_like
    )


def boundary_power(p: float = 0.6) -> RadialTestFunction:
    """F = (1 - r)^p."""
    return RadialTestFunction(
        f"(1-r)^{p}",
        lambda r: (1 - r) ** p,
        lambda r: -p * (1 - r) ** (p - 1),
        lambda r: p * (p - 1) * (1 - r) ** (p - 2),
    )


def _order_density(fn: RadialTestFunction, r: np.ndarray, k: int) -> np.ndarray:
    """Spherical average of sum over multi-indices of order k of |d^k F|^2."""
    if k == 0:
        return fn.F(r) ** 2
    d1 = fn.dF(r)
    if k == 1:
        return d1**2
    if k == 2:
        # Hessian of a radial function: (F'' - F'/r) xhat xhat^T + (F'/r) I
        a = d1 / r
        c = fn.d2F(r) - a
        frob = fn.d2F(r) ** 2 + 2 * a**2
        diag = 3 * (a**2 + (2.0 / 3.0) * a * c + c**2 / 5.0)
        return 0.5 * (frob + diag)
    raise ValueError("integer orders above 2 are not supported")


def _midpoints(n: int) -> tuple[np.ndarray, float]:
    h = 1.0 / (n - 1)
    return (np.arange(n - 1) + 0.5) * h, h


def sobolev_sq(fn: RadialTestFunction, k: int, n: int) -> float:
    """||F||^2_{H^k} for integer k."""
    r, h = _midpoints(n)
    dens = sum(_order_density(fn, r, j) for j in range(k + 1))
    return FOUR_PI * h * float(np.sum(dens * r**2))


def weighted_sobolev_sq(fn: RadialTestFunction, alpha: float, b: int, n: int) -> float:
    """||F||^2_{H^{alpha,b}} = sum_{|k|<=b} int d^alpha |d^k F|^2, with d = 1 - r."""
    r, h = _midpoints(n)
    dens = sum(_order_density(fn, r, j) for j in range(b + 1))
    return FOUR_PI * h * float(np.sum((1 - r) ** alpha * dens * r**2))


def fractional_norm(fn: RadialTestFunction, s: float, n: int) -> float:
    """||F||_{H^s} by log-convex interpolation between the neighbouring integer orders."""
    if s < 0:
        raise ValueError("negative order")
    lo = math.floor(s)
    t = s - lo
    a = math.sqrt(sobolev_sq(fn, lo, n))
    if t == 0:
        return a
    b = math.sqrt(sobolev_sq(fn, lo + 1, n))
    return a ** (1 - t) * b**t


def hardy_probe(fn: RadialTestFunction, alpha: float, b: int, levels=(129, 257, 513)) -> list[dict]:
    if not 0 < alpha <= 2 * b:
        raise ValueError("embedding requires 0 < alpha <= 2b")
    s = b - alpha / 2
    rows = []
    for n in levels:
        num = fractional_norm(fn, s, n)
        den = math.sqrt(weighted_sobolev_sq(fn, alpha, b, n))
        rows.append({"n": n, "order": s, "h_s": num, "h_alpha_b": den, "ratio": num / den})
    return rows
