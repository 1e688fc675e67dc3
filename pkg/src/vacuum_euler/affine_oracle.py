"""Exact dilation solutions eta = lambda(t) x for the model weight w = delta (1 - r^2).

Substituting into the Lagrangian momentum equation gives the scalar ODE

    lambda'' = 2 delta (1 + alpha) lambda^{-(1+beta)},

with first integral E = lambda'^2 / 2 + (2 delta (1 + alpha) / beta) lambda^{-beta}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .params import EquationOfState


@dataclass(frozen=True)
class AffineParams:
    lambda0: float
    lambdadot0: float
    delta: float
    eos: EquationOfState

    def __post_init__(self):
        if not self.lambda0 > 0:
            raise ValueError("lambda0 > 0 required")
        if self.delta < 0:
            raise ValueError("delta >= 0 required")

    @property
    def strength(self) -> float:
        return 2.0 * self.delta * (1.0 + self.eos.alpha)


def lambda_rhs(lam, eos: EquationOfState, delta: float):
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("lambda > 0 required")
    return 2.0 * delta * (1.0 + eos.alpha) * lam ** (-(1.0 + eos.beta))


def energy(params: AffineParams, lam, lamdot):
    return 0.5 * np.asarray(lamdot) ** 2 + params.strength / params.eos.beta * np.asarray(lam) ** (
        -params.eos.beta
    )


@dataclass(frozen=True)
class LambdaSeries:
    params: AffineParams
    t: np.ndarray
    lam: np.ndarray
    lamdot: np.ndarray

    @property
    def energy(self) -> np.ndarray:
        return energy(self.params, self.lam, self.lamdot)


def integrate_lambda(params: AffineParams, t_max: float, dt: float) -> LambdaSeries:
    """Classical RK4 in physical time."""
    if not dt > 0:
        raise ValueError("dt > 0 required")
    steps = int(round(t_max / dt))
    t = np.linspace(0.0, steps * dt, steps + 1)
    lam = np.empty(steps + 1)
    lamdot = np.empty(steps + 1)
    y = np.array([params.lambda0, params.lambdadot0], dtype=float)
    lam[0], lamdot[0] = y

    def f(y):
        if y[0] <= 0:
            raise ArithmeticError("lambda crossed zero")
        return np.array([y[1], params.strength * y[0] ** (-(1.0 + params.eos.beta))])

    for k in range(steps):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        lam[k + 1], lamdot[k + 1] = y
    return LambdaSeries(params, t, lam, lamdot)


def escape_speed(params: AffineParams) -> float:
    return float(np.sqrt(2.0 * energy(params, params.lambda0, params.lambdadot0)))


class AffineReference:
    """High-accuracy dense solution used as the comparison oracle."""

    def __init__(self, params: AffineParams, t_max: float):
        self.params = params
        self.t_max = float(t_max)
        beta = params.eos.beta
        s = params.strength
        self._sol = solve_ivp(
            lambda t, y: [y[1], s * y[0] ** (-(1.0 + beta))],
            (0.0, self.t_max),
            [params.lambda0, params.lambdadot0],
            method="DOP853",
            rtol=1e-13,
            atol=1e-15,
            dense_output=True,
        )

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.t_max * (1 + 1e-12)):
            raise ValueError("time outside the reference range")
        return self._sol.sol(t)

    @classmethod
    def for_tau(cls, params: AffineParams, tau_max: float) -> "AffineReference":
        return cls(params, float(np.expm1(tau_max)))

    def rescaled(self, tau, r):
        """(phi, nu) of the dilation in rescaled variables on radii r."""
        return to_rescaled(self, tau, r)


def to_rescaled(source, tau, r):
    """phi = e^-tau lambda(t) r and nu = (lambda'(t)(1+t) - lambda(t)) e^-tau r, t = e^tau - 1.

    ``source`` is an AffineReference or a LambdaSeries (interpolated by cubic Hermite).
    """
    tau = np.asarray(tau, dtype=float)
    t = np.expm1(tau)
    if isinstance(source, LambdaSeries):
        from scipy.interpolate import CubicHermiteSpline

        if np.any(t < source.t[0]) or np.any(t > source.t[-1] * (1 + 1e-12)):
            raise ValueError("tau outside the series range")
        acc = lambda_rhs(source.lam, source.params.eos, source.params.delta)
        lam = CubicHermiteSpline(source.t, source.lam, source.lamdot)(t)
        lamdot = CubicHermiteSpline(source.t, source.lamdot, acc)(t)
    else:
        lam, lamdot = source(t)
    e = np.exp(-tau)
    r = np.asarray(r, dtype=float)
    phi = np.multiply.outer(e * lam, r)
    nu = np.multiply.outer((lamdot * (1 + t) - lam) * e, r)
    return phi, nu


def from_rescaled(tau, phi_over_r):
    """Recover lambda(t) from the rescaled dilation factor."""
    return np.exp(tau) * np.asarray(phi_over_r)


def lagrangian_residual_3d(lam: float, params: AffineParams, n: int = 17) -> float:
    """Centered-difference residual of w^alpha lambda'' x + d_k(w^{1+alpha} A^k_i J^{-1/alpha}).

    The flux is sampled on an n^3 grid over [-0.5, 0.5]^3 and the residual is
    taken at interior nodes.
    """
    alpha = params.eos.alpha
    s = np.linspace(-0.5, 0.5, n)
    h = s[1] - s[0]
    X = np.stack(np.meshgrid(s, s, s, indexing="ij"), axis=-1)
    r2 = np.sum(X**2, axis=-1)
    w = params.delta * (1.0 - r2)
    # A = I / lambda, J = lambda^3: the flux matrix is diagonal
    flux = w ** (1 + alpha) * lam ** (-1.0 - 3.0 / alpha)
    grad = np.gradient(flux, h, edge_order=2)
    acc = float(lambda_rhs(lam, params.eos, params.delta))
    inner = (slice(1, -1),) * 3
    res = np.stack([w[inner] ** alpha * acc * X[inner + (i,)] + grad[i][inner] for i in range(3)])
    return float(np.max(np.abs(res)))
