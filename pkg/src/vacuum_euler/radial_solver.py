"""Spherically symmetric solver for the rescaled momentum equation.

With zeta = phi(tau, r) x / r the momentum equation reduces to

    phi_tt = -phi_t - delta e^{-beta tau} W^{-alpha} D(phi),
    D(phi) = d_r(g / phi_r) + 2 g / (r phi_r) - 2 g / phi,
    g = W^{1+alpha} J^{-1/alpha},  J = phi_r (phi / r)^2.

The default discretization pulls the weight out analytically,

    W^{-alpha} D = (1+alpha) W' X + W d_r X + 2 W J^{-1/alpha} (1/(r phi_r) - 1/phi),
    X = J^{-1/alpha} / phi_r,

so no negative power of W is ever formed and the degenerate node r = 1 is an
ordinary grid point. ``scheme="conservative"`` keeps the midpoint flux form
with division by W^alpha at the nodes, for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .kinematics import InvertedFlowMap
from .params import EquationOfState, make_eos
from .weights import EnthalpyProfile, profile_by_name

SCHEMES = ("analytic-weight", "conservative")


class CFLViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class RadialGrid:
    n: int

    def __post_init__(self):
        if self.n < 5:
            raise ValueError("need at least 5 grid nodes")

    @property
    def r(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n)

    @property
    def h(self) -> float:
        return 1.0 / (self.n - 1)


@dataclass(frozen=True)
class RadialState:
    tau: float
    phi: np.ndarray
    nu: np.ndarray

    @property
    def theta(self) -> np.ndarray:
        return self.phi - np.linspace(0.0, 1.0, len(self.phi))


@dataclass(frozen=True)
class SolverConfig:
    n: int = 129
    cfl: float = 0.4
    tau_max: float = 5.0
    stride: float = 0.01
    dtau_max: float | None = None
    delta: float = 1e-3
    epsilon: float = 0.0
    gamma: float = 2.0
    profile: str = "model"
    r1: float = 0.5
    r0: float = 0.75
    order: int = 2
    scheme: str = "analytic-weight"

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if not self.tau_max > 0:
            raise ValueError("tau_max must be positive")
        if not self.stride > 0:
            raise ValueError("stride must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")

    @property
    def eos(self) -> EquationOfState:
        return make_eos(self.gamma)

    @property
    def weight(self) -> EnthalpyProfile:
        # delta = 0 is allowed for the pressureless limit; the profile itself needs delta > 0
        return profile_by_name(self.profile, self.delta if self.delta > 0 else 1.0, self.eos.alpha)

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


def d_dr(f: np.ndarray, h: float, parity: int = -1) -> np.ndarray:
    """Second-order radial derivative on the uniform grid.

    ``parity=-1`` uses an odd ghost f(-h) = -f(h) at the origin, ``+1`` an even one.
    The outer node uses the one-sided three-point stencil.
    """
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    out[0] = (f[1] - parity * f[1]) / (2 * h)
    out[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    return out


@dataclass(frozen=True)
class RadialGeometry:
    """Nodal kinematics of a radial map: eigenvalues of D zeta and its inverse."""

    phi_r: np.ndarray  # radial stretch
    q: np.ndarray  # phi / r, tangential stretch (limit phi_r at r = 0)
    J: np.ndarray

    @property
    def a_rad(self) -> np.ndarray:
        return 1.0 / self.phi_r

    @property
    def a_tan(self) -> np.ndarray:
        return 1.0 / self.q


def geometry(phi: np.ndarray, h: float, tau: float | None = None) -> RadialGeometry:
    r = np.linspace(0.0, 1.0, len(phi))
    phi_r = d_dr(phi, h)
    q = np.empty_like(phi)
    q[1:] = phi[1:] / r[1:]
    q[0] = phi_r[0]
    if np.any(phi_r <= 0) or np.any(q <= 0):
        raise InvertedFlowMap("inverted flow map: phi_r or phi/r is not positive", tau)
    return RadialGeometry(phi_r=phi_r, q=q, J=phi_r * q**2)


def radial_rhs(
    state: RadialState,
    eos: EquationOfState,
    profile: EnthalpyProfile,
    delta: float | None = None,
    scheme: str = "analytic-weight",
) -> np.ndarray:
    """Acceleration d_tt phi at every node (zero at the fixed center)."""
    phi, nu, tau = state.phi, state.nu, state.tau
    n = len(phi)
    h = 1.0 / (n - 1)
    r = np.linspace(0.0, 1.0, n)
    delta = profile.delta if delta is None else delta
    alpha, beta = eos.alpha, eos.beta
    geo = geometry(phi, h, tau)

    rm = 0.5 * (r[1:] + r[:-1])
    prm = np.diff(phi) / h
    qm = 0.5 * (phi[1:] + phi[:-1]) / rm
    if np.any(prm <= 0):
        raise InvertedFlowMap("inverted flow map: midpoint stretch is not positive", tau)
    Jm = prm * qm**2

    a = np.zeros(n)
    inner = slice(1, n - 1)
    ri = r[inner]
    Ji_pow = geo.J[inner] ** (-1.0 / alpha)
    # 1/(r phi_r) - 1/phi, written to avoid cancellation: (phi - r phi_r) / (r phi_r phi)
    pi = phi[inner]
    src = (pi - ri * geo.phi_r[inner]) / (ri * geo.phi_r[inner] * pi)

    if scheme == "analytic-weight":
        X = geo.J ** (-1.0 / alpha) / geo.phi_r
        Xm = Jm ** (-1.0 / alpha) / prm
        Wi = profile.W(ri)
        DW = (1 + alpha) * profile.dW(ri) * X[inner] + Wi * np.diff(Xm) / h + 2 * Wi * Ji_pow * src
    elif scheme == "conservative":
        gm = profile.W(rm) ** (1 + alpha) * Jm ** (-1.0 / alpha)
        gi = profile.W(ri) ** (1 + alpha) * Ji_pow
        D = np.diff(gm / prm) / h + 2 * gi * src
        DW = profile.W(ri) ** (-alpha) * D
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    damp = math.exp(-beta * tau) * delta
    a[inner] = -nu[inner] - damp * DW
    # outer node: W = 0, only the (1+alpha) W' X term survives
    Xb = geo.J[-1] ** (-1.0 / alpha) / geo.phi_r[-1]
    a[-1] = -nu[-1] - damp * (1 + alpha) * float(profile.dW(1.0)) * Xb
    return a


def char_speed(state: RadialState, eos: EquationOfState, profile: EnthalpyProfile, delta=None) -> np.ndarray:
    """c^2 = delta (1 + 1/alpha) e^{-beta tau} W phi_r^{-(2+1/alpha)} (phi/r)^{-2/alpha}."""
    delta = profile.delta if delta is None else delta
    alpha = eos.alpha
    n = len(state.phi)
    geo = geometry(state.phi, 1.0 / (n - 1), state.tau)
    r = np.linspace(0.0, 1.0, n)
    c2 = (
        delta
        * (1 + 1 / alpha)
        * math.exp(-eos.beta * state.tau)
        * profile.W(r)
        * geo.phi_r ** (-(2 + 1 / alpha))
        * geo.q ** (-2 / alpha)
    )
    return np.sqrt(np.maximum(c2, 0.0))


def max_stable_dtau(state, eos, profile, cfl, delta=None) -> float:
    c = float(np.max(char_speed(state, eos, profile, delta)))
    h = 1.0 / (len(state.phi) - 1)
    return math.inf if c == 0.0 else cfl * h / c


def step(
    state: RadialState,
    dtau: float,
    eos: EquationOfState,
    profile: EnthalpyProfile,
    cfl: float = 0.4,
    delta: float | None = None,
    scheme: str = "analytic-weight",
) -> RadialState:
    """One classical RK4 step of the first-order system (phi, nu)."""
    limit = max_stable_dtau(state, eos, profile, cfl, delta)
    if dtau > limit * (1 + 1e-12):
        raise CFLViolation(f"dtau={dtau:.3e} exceeds CFL limit {limit:.3e} at tau={state.tau:.4f}")

    def f(phi, nu, t):
        return nu, radial_rhs(RadialState(t, phi, nu), eos, profile, delta, scheme)

    p0, v0, t0 = state.phi, state.nu, state.tau
    k1p, k1v = f(p0, v0, t0)
    k2p, k2v = f(p0 + 0.5 * dtau * k1p, v0 + 0.5 * dtau * k1v, t0 + 0.5 * dtau)
    k3p, k3v = f(p0 + 0.5 * dtau * k2p, v0 + 0.5 * dtau * k2v, t0 + 0.5 * dtau)
    k4p, k4v = f(p0 + dtau * k3p, v0 + dtau * k3v, t0 + dtau)
    phi = p0 + dtau / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
    nu = v0 + dtau / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    phi[0] = 0.0
    nu[0] = 0.0
    out = RadialState(t0 + dtau, phi, nu)
    geometry(phi, 1.0 / (len(phi) - 1), out.tau)
    return out


@dataclass
class Trajectory:
    config: SolverConfig
    taus: np.ndarray
    phi: np.ndarray  # (strides, n)
    nu: np.ndarray
    status: str = "completed"
    abort_tau: float | None = None
    steps: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def r(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.phi.shape[1])

    def state(self, k: int) -> RadialState:
        return RadialState(float(self.taus[k]), self.phi[k], self.nu[k])

    def __len__(self) -> int:
        return len(self.taus)


def run(
    config: SolverConfig,
    initial_velocity: Callable[[np.ndarray], np.ndarray] | None = None,
    initial_phi: Callable[[np.ndarray], np.ndarray] | None = None,
    on_stride: Callable[[RadialState], bool] | None = None,
) -> Trajectory:
    """March from (phi, nu) = (r, nu0(r)) to tau_max, recording every output stride.

    ``on_stride`` may return False to stop early (used by monitors). An inverted
    map ends the run with status ``inverted_map`` rather than an exception.
    """
    grid = RadialGrid(config.n)
    r = grid.r
    eos = config.eos
    profile = config.weight
    delta = config.delta
    phi = r.copy() if initial_phi is None else np.asarray(initial_phi(r), dtype=float)
    nu = np.zeros_like(r) if initial_velocity is None else np.asarray(initial_velocity(r), dtype=float)
    phi[0] = 0.0
    nu[0] = 0.0
    state = RadialState(0.0, phi, nu)
    geometry(phi, grid.h, 0.0)

    n_out = int(round(config.tau_max / config.stride))
    out_taus = config.stride * np.arange(n_out + 1)
    taus, phis, nus = [0.0], [phi.copy()], [nu.copy()]
    cap = config.stride if config.dtau_max is None else min(config.dtau_max, config.stride)
    status, abort_tau, steps = "completed", None, 0
    if on_stride is not None and on_stride(state) is False:
        status = "stopped"
    k = 1
    while status == "completed" and k <= n_out:
        target = out_taus[k]
        try:
            while state.tau < target - 1e-12:
                limit = max_stable_dtau(state, eos, profile, config.cfl, delta)
                remaining = target - state.tau
                nsub = max(1, math.ceil(remaining / min(cap, limit) - 1e-9))
                dt = remaining / nsub
                state = step(state, dt, eos, profile, config.cfl, delta, config.scheme)
                steps += 1
        except InvertedFlowMap as err:
            status, abort_tau = "inverted_map", float(err.tau if err.tau is not None else state.tau)
            break
        state = RadialState(float(target), state.phi, state.nu)
        taus.append(state.tau)
        phis.append(state.phi.copy())
        nus.append(state.nu.copy())
        if on_stride is not None and on_stride(state) is False:
            status = "stopped"
        k += 1
    return Trajectory(config, np.array(taus), np.array(phis), np.array(nus), status, abort_tau, steps)
