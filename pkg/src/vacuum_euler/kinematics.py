"""Flow-map kinematics: inverse gradient, Jacobian, cofactors, rescaling and the zeta-curl.

Index convention, used everywhere: ``M[..., i, j] = d_j zeta^i`` (row is the
component, column the derivative). The inverse ``A = M^{-1}`` then satisfies
``A[..., k, i] = A^k_i`` and the zeta-gradient of a field F is
``[grad_zeta F]^i_j = A^k_j d_k F^i``, i.e. ``DF @ A``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm


class InvertedFlowMap(ArithmeticError):
    """Raised when the flow map stops being orientation preserving."""

    def __init__(self, message: str, tau: float | None = None):
        super().__init__(message)
        self.tau = tau


@dataclass(frozen=True)
class FlowMapQuantities:
    M: np.ndarray
    A: np.ndarray
    J: np.ndarray
    a_tilde: np.ndarray


def cofactor_transpose(M: np.ndarray) -> np.ndarray:
    """Adjugate of M (transpose of the cofactor matrix), built entrywise."""
    M = np.asarray(M, dtype=float)
    adj = np.empty_like(M)
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != j]
            c = [k for k in range(3) if k != i]
            minor = M[..., r[0], c[0]] * M[..., r[1], c[1]] - M[..., r[0], c[1]] * M[..., r[1], c[0]]
            adj[..., i, j] = (-1) ** (i + j) * minor
    return adj


def flow_quantities(grad_zeta) -> FlowMapQuantities:
    M = np.asarray(grad_zeta, dtype=float)
    adj = cofactor_transpose(M)
    J = np.einsum("...j,...j->...", M[..., 0, :], adj[..., :, 0])
    if np.any(J <= 0):
        raise InvertedFlowMap("inverted element: det(D zeta) <= 0")
    return FlowMapQuantities(M=M, A=adj / J[..., None, None], J=J, a_tilde=adj)


# ---------------------------------------------------------------------------
# manufactured flows


@dataclass(frozen=True)
class ManufacturedFlow:
    """Closed-form zeta(tau, x) with hand-coded spatial and time derivatives.

    ``grad``, ``nu`` and ``grad_nu`` return D zeta, d_tau zeta and D(d_tau zeta).
    ``grad_nu_tau`` is D(d_tau^2 zeta), used by the curl identity forcing.
    """

    name: str
    zeta: Callable
    grad: Callable
    nu: Callable
    grad_nu: Callable
    grad_nu_tau: Callable


# non-normal generator for the affine families
_DEFAULT_B = np.array([[0.1, 0.4, 0.0], [0.0, -0.05, 0.3], [0.0, 0.0, 0.02]])


def _outer(x):
    return x[..., :, None] * x[..., None, :]


def affine_flow(B=None) -> ManufacturedFlow:
    """zeta = expm(tau B) x."""
    B = _DEFAULT_B if B is None else np.asarray(B)
    Q = lambda t: expm(t * B)  # noqa: E731
    return ManufacturedFlow(
        "affine",
        zeta=lambda t, x: x @ Q(t).T,
        grad=lambda t, x: np.broadcast_to(Q(t), x.shape[:-1] + (3, 3)),
        nu=lambda t, x: x @ (B @ Q(t)).T,
        grad_nu=lambda t, x: np.broadcast_to(B @ Q(t), x.shape[:-1] + (3, 3)),
        grad_nu_tau=lambda t, x: np.broadcast_to(B @ B @ Q(t), x.shape[:-1] + (3, 3)),
    )


def radial_polynomial_flow(c0: float = 0.05, c1: float = 0.0, e: float = 0.0) -> ManufacturedFlow:
    """zeta = (1 + c(tau) r^2 + e r^4) x with c = c0 + c1 tau, so phi = r + c r^3 + e r^5."""
    c = lambda t: c0 + c1 * t  # noqa: E731
    eye = np.eye(3)

    def grad(t, x):
        r2 = np.sum(x**2, axis=-1)[..., None, None]
        return (1 + c(t) * r2 + e * r2**2) * eye + (2 * c(t) + 4 * e * r2) * _outer(x)

    def grad_nu(t, x):
        r2 = np.sum(x**2, axis=-1)[..., None, None]
        return c1 * (r2 * eye + 2 * _outer(x))

    def zeta(t, x):
        r2 = np.sum(x**2, axis=-1)
        return (1 + c(t) * r2 + e * r2**2)[..., None] * x

    return ManufacturedFlow(
        "radial-polynomial",
        zeta=zeta,
        grad=grad,
        nu=lambda t, x: c1 * np.sum(x**2, axis=-1)[..., None] * x,
        grad_nu=grad_nu,
        grad_nu_tau=lambda t, x: np.zeros(x.shape[:-1] + (3, 3)),
    )


def affine_radial_flow(B=None, c0: float = 0.05, c1: float = 0.02, e: float = 0.05) -> ManufacturedFlow:
    """zeta = expm(tau B) (1 + c(tau) r^2 + e r^4) x."""
    rad = radial_polynomial_flow(c0, c1, e)
    Bm = _DEFAULT_B if B is None else np.asarray(B)
    Q = lambda t: expm(t * Bm)  # noqa: E731

    def grad(t, x):
        return Q(t) @ rad.grad(t, x)

    def grad_nu(t, x):
        return Bm @ Q(t) @ rad.grad(t, x) + Q(t) @ rad.grad_nu(t, x)

    def grad_nu_tau(t, x):
        return Bm @ Bm @ Q(t) @ rad.grad(t, x) + 2 * Bm @ Q(t) @ rad.grad_nu(t, x)

    return ManufacturedFlow(
        "affine-times-radial",
        zeta=lambda t, x: rad.zeta(t, x) @ Q(t).T,
        grad=grad,
        nu=lambda t, x: rad.zeta(t, x) @ (Bm @ Q(t)).T + rad.nu(t, x) @ Q(t).T,
        grad_nu=grad_nu,
        grad_nu_tau=grad_nu_tau,
    )


# ---------------------------------------------------------------------------
# identities


def ball_samples(count: int = 200, radius: float = 0.9, seed: int = 1) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(count, 3))
    v /= np.linalg.norm(v, axis=1)[:, None]
    return v * (radius * rng.uniform(0, 1, size=count) ** (1 / 3))[:, None]


def piola_residual(flow: ManufacturedFlow, h: float, tau: float = 0.0, samples=None) -> float:
    """max |d_k a_tilde^k_i| at interior points by centered differences of width h."""
    x = ball_samples() if samples is None else np.asarray(samples, dtype=float)
    div = np.zeros(x.shape[:-1] + (3,))
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        ap = flow_quantities(flow.grad(tau, x + e)).a_tilde
        am = flow_quantities(flow.grad(tau, x - e)).a_tilde
        div += (ap[..., k, :] - am[..., k, :]) / (2 * h)
    return float(np.max(np.abs(div)))


def rescale(t, eta, v):
    """Physical (t, eta, d_t eta) to rescaled (tau, zeta, nu) with d_t eta = zeta + nu."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t >= 0 required")
    tau = np.log1p(t)
    zeta = np.exp(-tau)[..., None] * np.asarray(eta) if np.ndim(eta) > np.ndim(t) else np.exp(-tau) * eta
    return tau, zeta, np.asarray(v) - zeta


def unrescale(tau, zeta, nu):
    tau = np.asarray(tau, dtype=float)
    t = np.expm1(tau)
    scale = np.exp(tau)[..., None] if np.ndim(zeta) > np.ndim(tau) else np.exp(tau)
    return t, scale * np.asarray(zeta), np.asarray(zeta) + np.asarray(nu)


def lagrangian_density(profile, J, r):
    """f = w^alpha / J, so that f J reproduces the initial density."""
    J = np.asarray(J, dtype=float)
    if np.any(J <= 0):
        raise InvertedFlowMap("J <= 0 in density evaluation")
    return profile.density(r) / J


def curl_zeta(DF, A) -> np.ndarray:
    """[Curl_zeta F]^i_j = A^s_j d_s F^i - A^s_i d_s F^j, with DF[i, s] = d_s F^i."""
    G = np.asarray(DF) @ np.asarray(A)
    return G - np.swapaxes(G, -1, -2)


def dA_dtau(A, Dnu):
    """d_tau A = -A (D nu) A."""
    return -A @ Dnu @ A


def dJ_dtau(J, A, Dnu):
    """d_tau J = J A^s_r d_s nu^r."""
    return J * np.einsum("...sr,...rs->...", A, Dnu)


def curl_evolution_residual(flow: ManufacturedFlow, tau_max: float, dtau: float, samples=None) -> float:
    """Residual of the integrated curl identity along a manufactured flow.

    For solutions of the momentum equation Curl_zeta(nu_tau + nu) vanishes and
    Curl nu(tau) = e^-tau Curl nu(0) + e^-tau int_0^tau e^s [d_tau, Curl] nu ds.
    Manufactured flows are not solutions, so the forcing e^s Curl(nu_tau + nu)
    is kept inside the integral; it vanishes on true solutions.
    """
    x = ball_samples(50) if samples is None else np.asarray(samples, dtype=float)
    steps = int(round(tau_max / dtau))
    taus = np.linspace(0.0, tau_max, steps + 1)

    def integrand(t):
        q = flow_quantities(flow.grad(t, x))
        Dnu = flow.grad_nu(t, x)
        dA = dA_dtau(q.A, Dnu)
        bracket = curl_zeta(Dnu, dA)
        forcing = curl_zeta(flow.grad_nu_tau(t, x) + Dnu, q.A)
        return np.exp(t) * (bracket + forcing)

    vals = np.stack([integrand(t) for t in taus])
    integral = np.trapezoid(vals, taus, axis=0)
    curl0 = curl_zeta(flow.grad_nu(0.0, x), flow_quantities(flow.grad(0.0, x)).A)
    curlT = curl_zeta(flow.grad_nu(tau_max, x), flow_quantities(flow.grad(tau_max, x)).A)
    rhs = np.exp(-tau_max) * (curl0 + integral)
    return float(np.max(np.abs(curlT - rhs)))


def radial_gradient(phi_of_r, dphi_of_r, x) -> np.ndarray:
    """D zeta for zeta = phi(r) x / r, from radial data."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    q = phi_of_r(r) / r
    xh = x / r[..., None]
    return q[..., None, None] * np.eye(3) + (dphi_of_r(r) - q)[..., None, None] * _outer(xh)
