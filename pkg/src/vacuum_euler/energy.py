"""Weighted energy functionals of radial states.

A radial vector field is stored by its radial component f(r) on the uniform
grid (odd in r). Following the radial specialization, the boundary part of
each norm uses Lambda^m f = (r d_r)^m f and the interior part uses d_r^k f;
angular derivatives are not computed here. The zeta-gradient of a radial field
h(r) x_hat has radial eigenvalue h' / phi_r and a double tangential eigenvalue
(h / r) (r / phi), so every Y-integrand is evaluated multiplied by r^2, which
removes the apparent 1/r singularity at the center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import EquationOfState, time_weights
from .radial_solver import RadialGeometry, RadialState, Trajectory, d_dr, geometry
from .weights import CutoffPair, EnthalpyProfile

FOUR_PI = 4.0 * math.pi


def ball_integral(integrand_r2: np.ndarray, r: np.ndarray) -> float:
    """Integral over the unit ball of a radial integrand already multiplied by r^2."""
    return FOUR_PI * float(np.trapezoid(integrand_r2, r))


def lambda_stack(f: np.ndarray, h: float, order: int) -> list[np.ndarray]:
    """[f, Lambda f, ..., Lambda^order f] for an odd radial profile."""
    r = np.linspace(0.0, 1.0, len(f))
    out = [f]
    for _ in range(order):
        out.append(r * d_dr(out[-1], h, parity=-1))
    return out


def rect_stack(f: np.ndarray, h: float, order: int) -> list[np.ndarray]:
    """[f, f', ..., f^(order)] with parity tracked through the origin ghost node."""
    out = [f]
    parity = -1
    for _ in range(order):
        out.append(d_dr(out[-1], h, parity=parity))
        parity = -parity
    return out


def _parities(order: int) -> list[int]:
    return [(-1) ** (k + 1) for k in range(order + 1)]


@dataclass(frozen=True)
class NormParts:
    boundary: tuple
    interior: tuple

    @property
    def total(self) -> float:
        return float(sum(self.boundary) + sum(self.interior))


def x_norm_parts(f, b: int, W, alpha: float, cut: CutoffPair, max_order: int | None = None) -> NormParts:
    """Boundary and interior pieces of ||F||^2_{X^b} for a radial profile f.

    ``W`` is a callable weight (the unscaled enthalpy profile in the energy).
    """
    f = np.asarray(f, dtype=float)
    if b < 0:
        raise ValueError("order must be nonnegative")
    if max_order is not None and b > max_order:
        raise ValueError(f"order {b} exceeds available derivative order {max_order}")
    n = len(f)
    h = 1.0 / (n - 1)
    r = np.linspace(0.0, 1.0, n)
    Wr = W(r)
    psi, psib = cut.psi(r), cut.psibar(r)
    lam = lambda_stack(f, h, b)
    rect = rect_stack(f, h, b)
    bnd = tuple(ball_integral(psi * Wr ** (alpha + m) * lam[m] ** 2 * r**2, r) for m in range(b + 1))
    inn = tuple(ball_integral(psib * Wr**alpha * rect[k] ** 2 * r**2, r) for k in range(b + 1))
    return NormParts(bnd, inn)


def x_norm(f, b, W, alpha, cut) -> float:
    return x_norm_parts(f, b, W, alpha, cut).total


def _y_integrands(hval, hder, geo: RadialGeometry, r):
    """r^2 |grad_zeta H|^2 and r^2 |div_zeta H|^2 for H = h(r) x_hat."""
    rad = r * hder * geo.a_rad
    tan = hval * geo.a_tan
    return rad**2 + 2 * tan**2, (rad + 2 * tan) ** 2


def y_norm_parts(theta, b: int, W, alpha: float, cut: CutoffPair, geo: RadialGeometry, kind: str) -> NormParts:
    """Pieces of ||theta||^2_{Y^b(D)} with D one of grad, div, curl (zeta versions)."""
    if kind not in ("grad", "div", "curl"):
        raise ValueError(f"unknown Y functional {kind!r}")
    if np.any(geo.J <= 0):
        raise ValueError("J must be positive")
    theta = np.asarray(theta, dtype=float)
    n = len(theta)
    h = 1.0 / (n - 1)
    r = np.linspace(0.0, 1.0, n)
    if kind == "curl":
        # radial fields are zeta-curl free
        z = (0.0,) * (b + 1)
        return NormParts(z, z)
    Wr = W(r)
    Jp = geo.J ** (-1.0 / alpha)
    psi, psib = cut.psi(r), cut.psibar(r)
    idx = 0 if kind == "grad" else 1
    lam = lambda_stack(theta, h, b)
    rect = rect_stack(theta, h, b)
    par = _parities(b)
    bnd = []
    for m in range(b + 1):
        integ = _y_integrands(lam[m], d_dr(lam[m], h, -1), geo, r)[idx]
        bnd.append(ball_integral(psi * Wr ** (1 + alpha + m) * Jp * integ, r))
    inn = []
    for k in range(b + 1):
        integ = _y_integrands(rect[k], d_dr(rect[k], h, par[k]), geo, r)[idx]
        inn.append(ball_integral(psib * Wr ** (1 + alpha) * Jp * integ, r))
    return NormParts(tuple(bnd), tuple(inn))


def y_norm(theta, b, W, alpha, cut, geo, kind) -> float:
    return y_norm_parts(theta, b, W, alpha, cut, geo, kind).total


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Context:
    """Everything a per-state diagnostic needs besides the state."""

    eos: EquationOfState
    profile: EnthalpyProfile
    cut: CutoffPair
    delta: float
    order: int = 2

    @property
    def sigma(self):
        return time_weights(self.eos.beta)


def kinetic_scale(delta: float) -> float:
    """The 1/delta in front of the velocity norms; 1 in the pressureless limit."""
    return 1.0 / delta if delta > 0 else 1.0


@dataclass
class EnergyReport:
    tau: float
    x_theta: NormParts
    x_nu: NormParts
    y_grad: float
    y_div: float
    y_curl: float
    S_inst: float
    S_N: float = 0.0
    C_N: float = 0.0
    damping: float = 0.0
    apriori: dict = field(default_factory=dict)
    res_zero_order: float = float("nan")


def _state_geometry(state: RadialState) -> RadialGeometry:
    return geometry(state.phi, 1.0 / (len(state.phi) - 1), state.tau)


def instantaneous_energy(state: RadialState, ctx: Context) -> dict:
    """Unsupremized S and C integrands at one time."""
    alpha = ctx.eos.alpha
    s1, s2 = ctx.sigma.sigma1, ctx.sigma.sigma2
    geo = _state_geometry(state)
    W = ctx.profile.W
    th = state.theta
    xt = x_norm_parts(th, ctx.order, W, alpha, ctx.cut)
    xn = x_norm_parts(state.nu, ctx.order, W, alpha, ctx.cut)
    yg = y_norm(th, ctx.order, W, alpha, ctx.cut, geo, "grad")
    yd = y_norm(th, ctx.order, W, alpha, ctx.cut, geo, "div")
    yc = y_norm(th, ctx.order, W, alpha, ctx.cut, geo, "curl") + y_norm(
        state.nu, ctx.order, W, alpha, ctx.cut, geo, "curl"
    )
    tau = state.tau
    S = (
        math.exp(s1 * tau) * xn.total * kinetic_scale(ctx.delta)
        + xt.total
        + math.exp(-s2 * tau) * yg
        + math.exp(-s2 * tau) * yd / alpha
    )
    C = math.exp(-s2 * tau) * yc
    return {"x_theta": xt, "x_nu": xn, "y_grad": yg, "y_div": yd, "y_curl": yc, "S": S, "C": C}


def damping(state: RadialState, ctx: Context, order: int | None = None) -> float:
    """Sum of the boundary and interior damping functionals up to the given order."""
    order = ctx.order if order is None else order
    alpha = ctx.eos.alpha
    s1, s2 = ctx.sigma.sigma1, ctx.sigma.sigma2
    tau = state.tau
    total = 0.0
    if s1 < 2.0:
        xn = x_norm(state.nu, order, ctx.profile.W, alpha, ctx.cut)
        total += (2.0 - s1) * math.exp(s1 * tau) * xn * kinetic_scale(ctx.delta)
    if s2 > 0.0:
        geo = _state_geometry(state)
        yg = y_norm(state.theta, order, ctx.profile.W, alpha, ctx.cut, geo, "grad")
        yd = y_norm(state.theta, order, ctx.profile.W, alpha, ctx.cut, geo, "div")
        total += s2 * math.exp(-s2 * tau) * (yg + yd / alpha)
    return total


def apriori_monitor(state: RadialState, S_N: float = 0.0) -> dict:
    """The three bootstrap bounds, each required to hold with <= 1/3 (violation is strict >)."""
    geo = _state_geometry(state)
    a_dev = np.maximum(np.abs(geo.a_rad - 1.0), np.abs(geo.a_tan - 1.0))
    third = 1.0 / 3.0
    return {
        "S_ok": bool(S_N <= third),
        "A_ok": bool(not np.max(a_dev) > third),
        "J_ok": bool(not np.max(np.abs(geo.J - 1.0)) > third),
    }


def energy_reports(traj: Trajectory, ctx: Context, with_identity: bool = True) -> list[EnergyReport]:
    """Per-stride reports with running suprema S_N and C_N."""
    reports = []
    S_run = 0.0
    C_run = 0.0
    res = zero_order_identity_residual(traj, ctx) if (with_identity and len(traj) >= 3) else None
    for k in range(len(traj)):
        st = traj.state(k)
        e = instantaneous_energy(st, ctx)
        S_run = max(S_run, e["S"])
        C_run = max(C_run, e["C"])
        rep = EnergyReport(
            tau=st.tau,
            x_theta=e["x_theta"],
            x_nu=e["x_nu"],
            y_grad=e["y_grad"],
            y_div=e["y_div"],
            y_curl=e["y_curl"],
            S_inst=e["S"],
            S_N=S_run,
            C_N=C_run,
            damping=damping(st, ctx),
            apriori=apriori_monitor(st, S_run),
        )
        if res is not None:
            rep.res_zero_order = float(res[k])
        reports.append(rep)
    return reports


# ---------------------------------------------------------------------------
# zero-order energy identity


def zero_order_terms(state: RadialState, ctx: Context) -> dict:
    """Every integral of the zero-order identity for a radial state.

    All matrices involved (grad theta, grad nu, A) share the radial/tangential
    eigenbasis, so each trace reduces to radial + 2 * tangential contributions.
    Returns the energy E, the damping D0 and the remainder R0.
    """
    alpha = ctx.eos.alpha
    s1, s2 = ctx.sigma.sigma1, ctx.sigma.sigma2
    tau = state.tau
    phi, nu = state.phi, state.nu
    n = len(phi)
    h = 1.0 / (n - 1)
    r = np.linspace(0.0, 1.0, n)
    geo = geometry(phi, h, tau)
    W = ctx.profile.W(r)
    dW = ctx.profile.dW(r)
    ar, at = geo.a_rad, geo.a_tan
    Jp = geo.J ** (-1.0 / alpha)

    # eigenvalues: grad theta -> (phi_r - 1, q - 1); grad nu -> (nu', nu/r)
    tr_, tt_ = geo.phi_r - 1.0, geo.q - 1.0
    nr_ = d_dr(nu, h, -1)
    nt_ = np.empty_like(nu)
    nt_[1:] = nu[1:] / r[1:]
    nt_[0] = nr_[0]

    G_r, G_t = tr_ * ar, tt_ * at  # grad_zeta theta
    grad2 = G_r**2 + 2 * G_t**2
    div = G_r + 2 * G_t
    dAr, dAt = -nr_ * ar**2, -nt_ * at**2  # d_tau A
    trAdnu = nr_ * ar + 2 * nt_ * at
    dJ = geo.J * trAdnu
    ddiv = nr_ * ar**2 + 2 * nt_ * at**2  # d_tau div_zeta theta
    # radial and tangential sums of A T A T grad(nu)
    ATATV = (ar * tr_) ** 2 * nr_ + 2 * (at * tt_) ** 2 * nt_
    GdAT = G_r * dAr * tr_ + 2 * G_t * dAt * tt_

    e1, e2 = math.exp(s1 * tau), math.exp(-s2 * tau)
    wa, w1 = W**alpha, W ** (1 + alpha)
    r2 = r**2

    def I(x):
        return ball_integral(x * r2, r)

    kin = I(wa * nu**2)
    if ctx.delta == 0:
        # pressureless limit: only the damped kinetic part remains
        E = 0.5 * e1 * kin
        return {"E": E, "D0": (2 - s1) * e1 * kin, "R0": 0.0}
    pot = I(w1 * Jp * (0.5 * grad2 + div**2 / (2 * alpha)))
    E = e1 * kin / (2 * ctx.delta) + e2 * pot
    D0 = (2 - s1) * e1 * kin / ctx.delta + s2 * e2 * I(w1 * Jp * (grad2 + div**2 / alpha))
    R = e2 * (
        -(1 + alpha) * I(wa * dW * nu)
        - I(w1 * Jp * ATATV)
        + I(w1 * (Jp - 1.0) * (nr_ + 2 * nt_))
        - I(w1 * Jp / geo.J * dJ * grad2) / (2 * alpha)
        + I(w1 * Jp * GdAT)
        - I(w1 * Jp / geo.J * dJ * div**2) / (2 * alpha**2)
        + I(w1 * Jp * 2 * div * ddiv) / (2 * alpha)
    )
    return {"E": E, "D0": D0, "R0": R}


def zero_order_identity_residual(traj: Trajectory, ctx: Context, window=None) -> np.ndarray:
    """|dE/dtau + D0/2 - R0| per stride; dE/dtau by centered differences (one-sided at the ends)."""
    lo, hi = (0, len(traj)) if window is None else window
    if hi - lo < 3:
        raise ValueError("identity residual needs at least 3 strides")
    terms = [zero_order_terms(traj.state(k), ctx) for k in range(lo, hi)]
    E = np.array([t["E"] for t in terms])
    D0 = np.array([t["D0"] for t in terms])
    R0 = np.array([t["R0"] for t in terms])
    taus = np.asarray(traj.taus[lo:hi])
    dE = np.gradient(E, taus, edge_order=2)
    return np.abs(dE + 0.5 * D0 - R0)


# ---------------------------------------------------------------------------
# limits and consistency observations


def theta_limit(traj: Trajectory, ctx: Context, fit_window=(0.5, None)) -> dict:
    """Cauchy curve ||theta(tau) - theta(tau_max)||_{X^N} and its fitted exponential rate.

    The fit model is c (e^{-k tau} - e^{-k tau_max}), which accounts for
    measuring against the final state instead of the true limit.
    """
    from scipy.optimize import curve_fit

    s1 = ctx.sigma.sigma1
    tmax = float(traj.taus[-1])
    if math.exp(-s1 * tmax / 2) > 0.05:
        raise ValueError("trajectory too short for a theta-limit estimate")
    th_inf = traj.phi[-1] - traj.r
    curve = np.array(
        [
            math.sqrt(x_norm(traj.phi[k] - traj.r - th_inf, ctx.order, ctx.profile.W, ctx.eos.alpha, ctx.cut))
            for k in range(len(traj))
        ]
    )
    t0 = fit_window[0]
    t1 = tmax - 1.0 if fit_window[1] is None else fit_window[1]
    sel = (traj.taus >= t0) & (traj.taus <= t1)
    out = {"theta_inf": th_inf, "taus": traj.taus, "cauchy_curve": curve, "target_rate": s1 / 2}
    if not np.any(curve[sel] > 0):
        out["rate"] = float("nan")
        return out

    def model(t, logc, k):
        return np.exp(logc) * (np.exp(-k * t) - np.exp(-k * tmax))

    c0 = float(np.log(curve[sel][0] * math.exp(s1 / 2 * t0) + 1e-300))
    popt, _ = curve_fit(
        lambda t, logc, k: np.log(np.maximum(model(t, logc, k), 1e-300)),
        traj.taus[sel],
        np.log(curve[sel]),
        p0=(c0, s1 / 2),
        maxfev=20000,
    )
    out["rate"] = float(popt[1])
    out["amplitude"] = float(np.exp(popt[0]))
    return out


def theta_energy_constant(reports: list[EnergyReport], delta: float) -> float:
    """Smallest K with ||theta||^2_{X^N} <= K delta S_N at every stride."""
    if delta <= 0:
        raise ValueError("the constant is defined for delta > 0")
    ratios = [
        rep.x_theta.total / (delta * rep.S_N) for rep in reports if rep.S_N > 0 and rep.x_theta.total > 0
    ]
    return max(ratios, default=0.0)


def normalized_velocity(shape, eps: float, ctx: Context, n: int):
    """nu0 = a g(r) r with a >= 0 chosen so that ||nu0||^2_{X^N} / delta = eps.

    A negative ``eps`` flips the sign of the velocity (compression) with |eps|
    as the energy size.
    """
    r = np.linspace(0.0, 1.0, n)
    base = np.asarray(shape(r), dtype=float) * r
    if eps == 0:
        return np.zeros_like(r)
    size = x_norm(base, ctx.order, ctx.profile.W, ctx.eos.alpha, ctx.cut) * kinetic_scale(ctx.delta)
    if size == 0:
        raise ValueError("velocity shape has zero norm")
    return math.copysign(math.sqrt(abs(eps) / size), eps) * base
