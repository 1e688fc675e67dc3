"""Decay envelopes G_i, their time integrals G~_i, and H_1, H_2.

Branches are selected by comparing sigma-combinations; equality is decided
with a small absolute tolerance so that e.g. beta = 4 (sigma1 = sigma2 = 2)
lands on the critical branch despite rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .params import time_weights

TOL = 1e-12


def _cmp(a: float, b: float) -> int:
    if abs(a - b) <= TOL:
        return 0
    return 1 if a > b else -1


def _three(lhs, rhs, above, equal, below):
    return {1: above, 0: equal, -1: below}[_cmp(lhs, rhs)]


def g_functions(beta: float) -> list[Callable]:
    """G_1 .. G_6 as vectorized callables of tau for fixed beta."""
    if not beta > 0:
        raise ValueError("beta > 0 required")
    tw = time_weights(beta)
    s1, s2 = tw.sigma1, tw.sigma2

    def te(rate):
        return lambda t: t * np.exp(rate * t)

    def t2e(rate):
        return lambda t: t**2 * np.exp(rate * t)

    g1 = _three(2 * s1, 2 + s2, te(-2), t2e(-2), te(s2 - 2 * s1))
    # sigma1 <= 2 <= 2 + sigma2, so the "above" branch never occurs
    g2 = t2e(-2) if _cmp(s1, 2 + s2) == 0 else te(s2 - s1)
    g3 = _three(2 * beta, 2 + s2, te(-2), t2e(-2), te(s2 - 2 * beta))
    g4 = _three(s1, 1.0, te(-2), t2e(-2), te(-2 * s1))
    g5 = t2e(-2) if _cmp(s1, 2.0) == 0 else te(-s1)
    g6 = _three(beta, 1.0, te(-2), t2e(-2), te(-2 * beta))
    return [g1, g2, g3, g4, g5, g6]


def h_functions(beta: float) -> list[Callable]:
    if not beta > 0:
        raise ValueError("beta > 0 required")
    tw = time_weights(beta)
    s1, s2 = tw.sigma1, tw.sigma2
    h1 = _three(
        s1,
        s2,
        lambda t: np.ones_like(np.asarray(t, dtype=float)),
        lambda t: np.asarray(t, dtype=float) ** 2,
        lambda t: np.exp((s2 - s1) * np.asarray(t, dtype=float)),
    )
    h2 = _three(
        s1,
        2 * s2,
        lambda t: np.ones_like(np.asarray(t, dtype=float)),
        lambda t: np.asarray(t, dtype=float),
        lambda t: np.exp((s2 - s1 / 2) * np.asarray(t, dtype=float)),
    )
    return [h1, h2]


@dataclass(frozen=True)
class DecayEnvelopes:
    beta: float
    tau: np.ndarray
    G: np.ndarray  # (6, len(tau))
    G_tilde: np.ndarray  # (6, len(tau))
    H: np.ndarray  # (2, len(tau))

    @property
    def sigma(self):
        return time_weights(self.beta)

    def weighted(self) -> np.ndarray:
        """e^{-sigma2 tau} G~_i (rows 0..5) and e^{-sigma2 tau} H_j (rows 6, 7)."""
        damp = np.exp(-self.sigma.sigma2 * self.tau)
        return np.vstack([self.G_tilde * damp, self.H * damp])


def decay_envelopes(beta: float, tau_max: float = 50.0, points: int = 2001) -> DecayEnvelopes:
    tau = np.linspace(0.0, tau_max, points)
    gs = g_functions(beta)
    s1 = time_weights(beta).sigma1
    G = np.array([g(tau) for g in gs])
    Gt = np.empty_like(G)
    for i, g in enumerate(gs):
        pieces = [quad(lambda t: math.exp(s1 * t / 2) * float(g(t)), a, b)[0] for a, b in zip(tau[:-1], tau[1:])]
        Gt[i] = np.concatenate([[0.0], np.cumsum(pieces)])
    H = np.array([h(tau) for h in h_functions(beta)])
    return DecayEnvelopes(beta, tau, G, Gt, H)


def _tail_fraction(tau: np.ndarray, f: np.ndarray) -> float:
    """Mass beyond tau[-1] over the total, with the tail extrapolated exponentially.

    The decay rate is fitted from the last two samples; a non-decaying tail
    gives an infinite fraction.
    """
    body = float(np.trapezoid(f, tau))
    if f[-1] <= 0:
        return 0.0
    if f[-2] <= f[-1]:
        return math.inf
    rate = math.log(f[-2] / f[-1]) / (tau[-1] - tau[-2])
    tail = f[-1] / rate
    return tail / (body + tail)


def envelope_checks(env: DecayEnvelopes, bound: float = 1e3, tail_tol: float = 1e-6) -> dict:
    """Boundedness on the sampled window and, for beta > 2, integrability.

    ``integrable_mass`` holds the mass on the window per envelope; for beta <= 2
    the flag ``integrable`` is None because sigma2 = 0 and no decay is claimed.
    """
    w = env.weighted()
    sup = np.max(np.abs(w), axis=1)
    out = {
        "bounded": bool(np.all(np.isfinite(sup)) and np.all(sup <= bound)),
        "sup": sup,
        "integrable_mass": np.trapezoid(w, env.tau, axis=1),
    }
    if env.beta > 2 + TOL:
        tails = np.array([_tail_fraction(env.tau, row) for row in w])
        out["tail_fraction"] = tails
        out["integrable"] = bool(np.all(tails <= tail_tol))
    else:
        out["tail_fraction"] = None
        out["integrable"] = None
    return out


def tail_beyond(env: DecayEnvelopes, tau0: float) -> np.ndarray:
    """Fraction of each weighted envelope's mass (window plus extrapolated tail) beyond tau0."""
    w = env.weighted()
    out = []
    for row in w:
        total_frac = _tail_fraction(env.tau, row)
        body = float(np.trapezoid(row, env.tau))
        total = body / (1 - total_frac) if total_frac < 1 else math.inf
        sel = env.tau >= tau0
        beyond = float(np.trapezoid(row[sel], env.tau[sel])) + total * total_frac
        out.append(beyond / total if total > 0 else 0.0)
    return np.array(out)
