"""Enthalpy weight profiles on the unit ball and the boundary/interior cutoff pair."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

RadialFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EnthalpyProfile:
    """Unscaled weight W(r) with analytic derivatives; the physical weight is w = delta * W."""

    name: str
    W: RadialFn
    dW: RadialFn
    d2W: RadialFn
    delta: float
    alpha: float

    def w(self, r):
        return self.delta * self.W(np.asarray(r, dtype=float))

    def density(self, r):
        return self.w(r) ** self.alpha


_PROFILES = {
    "model": (
        lambda r: 1.0 - r**2,
        lambda r: -2.0 * r,
        lambda r: -2.0 * np.ones_like(r),
    ),
    "linear": (
        lambda r: 1.0 - r,
        lambda r: -np.ones_like(r),
        lambda r: np.zeros_like(r),
    ),
    "quadratic-degenerate": (
        lambda r: (1.0 - r**2) ** 2,
        lambda r: -4.0 * r * (1.0 - r**2),
        lambda r: -4.0 + 12.0 * r**2,
    ),
}


def profile_by_name(name: str, delta: float, alpha: float) -> EnthalpyProfile:
    if name not in _PROFILES:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(_PROFILES)}")
    if not delta > 0:
        raise ValueError(f"delta>0 required, got {delta}")
    if not alpha > 0:
        raise ValueError(f"alpha>0 required, got {alpha}")
    W, dW, d2W = _PROFILES[name]

    def wrap(f):
        return lambda r: f(np.asarray(r, dtype=float))

    return EnthalpyProfile(name, wrap(W), wrap(dW), wrap(d2W), float(delta), float(alpha))


def model_profile(delta: float, alpha: float) -> EnthalpyProfile:
    """The model weight W = 1 - r^2."""
    return profile_by_name("model", delta, alpha)


def physical_vacuum_check(profile: EnthalpyProfile, samples=None, c_max: float = 1e3) -> dict:
    """Sample W/(1-r) and test that it stays within [1/c_max, c_max].

    Samples are clamped to r <= 1 - 1e-6 so the ratio is always defined.
    """
    if samples is None:
        samples = np.concatenate([np.linspace(0.0, 0.999, 1000), 1.0 - np.logspace(-3, -6, 50)])
    r = np.minimum(np.asarray(samples, dtype=float), 1.0 - 1e-6)
    ratio = profile.W(r) / (1.0 - r)
    lo, hi = float(np.min(ratio)), float(np.max(ratio))
    return {"ratio_min": lo, "ratio_max": hi, "pass": bool(lo >= 1.0 / c_max and hi <= c_max)}


def _ramp(x):
    # exp(-1/x) for x>0, zero otherwise
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


@dataclass(frozen=True)
class CutoffPair:
    r1: float
    r0: float

    def psi(self, r):
        x = (np.asarray(r, dtype=float) - self.r1) / (self.r0 - self.r1)
        a, b = _ramp(x), _ramp(1.0 - x)
        return a / (a + b)

    def psibar(self, r):
        return 1.0 - self.psi(r)


def cutoff(r1: float = 0.5, r0: float = 0.75) -> CutoffPair:
    """Smooth monotone transition, 0 for r <= r1 and 1 for r >= r0."""
    if not 0.0 < r1 < r0 < 1.0:
        raise ValueError(f"need 0 < r1 < r0 < 1, got r1={r1}, r0={r0}")
    return CutoffPair(float(r1), float(r0))
