"""Check of the radial reduction of the pressure operator against a 3D divergence.

For zeta = phi(r) x / r, the Cartesian vector d_k(W^{1+alpha} A^k_i J^{-1/alpha})
should equal D(phi) x_hat with D the closed-form radial operator used by the
solver. The 3D side is evaluated with centered differences of width h in
each coordinate direction around the sample points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kinematics import flow_quantities, radial_gradient


@dataclass(frozen=True)
class RadialMap:
    name: str
    phi: Callable
    dphi: Callable
    d2phi: Callable


def sample_maps() -> list[RadialMap]:
    return [
        RadialMap("cubic", lambda r: r + 0.05 * r**3, lambda r: 1 + 0.15 * r**2, lambda r: 0.3 * r),
        RadialMap(
            "quintic",
            lambda r: 1.1 * r + 0.1 * r**3 - 0.05 * r**5,
            lambda r: 1.1 + 0.3 * r**2 - 0.25 * r**4,
            lambda r: 0.6 * r - r**3,
        ),
        RadialMap(
            "gaussian",
            lambda r: r * (1 + 0.2 * np.exp(-(r**2))),
            lambda r: 1 + 0.2 * np.exp(-(r**2)) * (1 - 2 * r**2),
            lambda r: 0.2 * np.exp(-(r**2)) * (4 * r**3 - 6 * r),
        ),
    ]


def reduced_operator(m: RadialMap, r, W, dW, alpha: float) -> np.ndarray:
    """D(phi) = d_r(g / phi_r) + 2 g / (r phi_r) - 2 g / phi, expanded analytically."""
    r = np.asarray(r, dtype=float)
    p, pr, prr = m.phi(r), m.dphi(r), m.d2phi(r)
    q = p / r
    J = pr * q**2
    dq = (pr - q) / r
    dJ = prr * q**2 + 2 * pr * q * dq
    g = W(r) ** (1 + alpha) * J ** (-1.0 / alpha)
    dg = (1 + alpha) * W(r) ** alpha * dW(r) * J ** (-1.0 / alpha) - g / (alpha * J) * dJ
    return dg / pr - g * prr / pr**2 + 2 * g / (r * pr) - 2 * g / p


def cartesian_divergence(m: RadialMap, x, W, alpha: float, h: float) -> np.ndarray:
    """Centered-difference d_k(W^{1+alpha} A^k_i J^{-1/alpha}) at points x (shape (..., 3))."""
    x = np.asarray(x, dtype=float)

    def flux(y):
        q = flow_quantities(radial_gradient(m.phi, m.dphi, y))
        rr = np.linalg.norm(y, axis=-1)
        g = W(rr) ** (1 + alpha) * q.J ** (-1.0 / alpha)
        return g[..., None, None] * q.A  # A[..., k, i]

    out = np.zeros_like(x)
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        out += (flux(x + e)[..., k, :] - flux(x - e)[..., k, :]) / (2 * h)
    return out


def reduction_errors(
    alpha: float, W, dW, h: float, count: int = 20, seed: int = 3, r_range=(0.15, 0.85)
) -> dict:
    """Max |cartesian - D(phi) x_hat| over random sample points, per test map."""
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(count, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    r = rng.uniform(*r_range, size=count)
    x = d * r[:, None]
    out = {}
    for m in sample_maps():
        exact = reduced_operator(m, r, W, dW, alpha)[:, None] * d
        out[m.name] = float(np.max(np.abs(cartesian_divergence(m, x, W, alpha, h) - exact)))
    return out
