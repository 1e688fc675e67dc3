import math

import numpy as np
import pytest

from vacuum_euler.affine_oracle import AffineParams, AffineReference, to_rescaled
from vacuum_euler.kinematics import InvertedFlowMap
from vacuum_euler.params import make_eos
from vacuum_euler.radial_solver import (
    CFLViolation,
    RadialGrid,
    RadialState,
    SolverConfig,
    d_dr,
    geometry,
    max_stable_dtau,
    radial_rhs,
    run,
    step,
)
from vacuum_euler.weights import model_profile


def _state(phi_fn, nu_fn=lambda r: 0 * r, n=65, tau=0.0):
    r = np.linspace(0, 1, n)
    return RadialState(tau, phi_fn(r), nu_fn(r))


@pytest.mark.parametrize("parity,f,df", [(-1, np.sin, np.cos), (1, np.cos, lambda r: -np.sin(r))])
def test_d_dr_second_order(parity, f, df):
    errs = []
    for n in (33, 65):
        r = np.linspace(0, 1, n)
        errs.append(np.max(np.abs(d_dr(f(r), 1 / (n - 1), parity) - df(r))))
    assert 3.5 <= errs[0] / errs[1] <= 4.5


def test_rest_state_acceleration():
    eos = make_eos(2.0)
    prof = model_profile(1e-3, eos.alpha)
    st = _state(lambda r: r.copy(), tau=0.3)
    a = radial_rhs(st, eos, prof)
    r = np.linspace(0, 1, 65)
    expected = 2 * 1e-3 * (1 + eos.alpha) * math.exp(-eos.beta * 0.3) * r
    np.testing.assert_allclose(a, expected, atol=1e-15)


@pytest.mark.parametrize("lam", [0.8, 1.0, 1.7])
def test_dilation_acceleration(lam):
    eos = make_eos(5 / 3)
    prof = model_profile(1e-2, eos.alpha)
    st = _state(lambda r: lam * r, lambda r: 0.1 * r, tau=0.5)
    a = radial_rhs(st, eos, prof)
    r = np.linspace(0, 1, 65)
    expected = -0.1 * r + 2e-2 * (1 + eos.alpha) * math.exp(-eos.beta * 0.5) * lam ** (-(1 + eos.beta)) * r
    np.testing.assert_allclose(a, expected, atol=1e-13)


def test_pressureless_closed_form():
    cfg = SolverConfig(n=65, delta=0.0, tau_max=1.0, stride=0.01)
    v0 = lambda r: 0.2 * r * np.exp(-(r**2))  # noqa: E731
    tr = run(cfg, v0)
    r = tr.r
    np.testing.assert_allclose(tr.nu[-1], v0(r) * math.exp(-1.0), atol=1e-8)
    np.testing.assert_allclose(tr.phi[-1], r + v0(r) * (1 - math.exp(-1.0)), atol=1e-8)


def test_zero_data_leaves_rest_linearly_in_delta():
    speeds = []
    for delta in (1e-4, 1e-3):
        tr = run(SolverConfig(n=65, delta=delta, tau_max=0.05, stride=0.05))
        speeds.append(np.max(np.abs(tr.nu[-1])))
    assert speeds[0] > 0
    assert speeds[1] / speeds[0] == pytest.approx(10.0, rel=1e-3)


def test_cfl_violation_refused():
    eos = make_eos(2.0)
    prof = model_profile(1.0, eos.alpha)
    st = _state(lambda r: r.copy())
    limit = max_stable_dtau(st, eos, prof, 0.4)
    step(st, 0.99 * limit, eos, prof)
    with pytest.raises(CFLViolation):
        step(st, 2 * limit, eos, prof)


def test_geometry_detects_inversion():
    r = np.linspace(0, 1, 33)
    with pytest.raises(InvertedFlowMap):
        geometry(r - 0.8 * r**2 * 2, 1 / 32)


def test_compression_aborts_cleanly():
    tr = run(SolverConfig(n=129, delta=1e-3, tau_max=1.0, stride=0.01), lambda r: -3 * r**3)
    assert tr.status == "inverted_map"
    assert 0.1 < tr.abort_tau < 0.2
    assert np.all(np.isfinite(tr.phi))


def test_uniform_strong_compression_rebounds():
    # pressure at delta = 10 halts nu0 = -0.9 r before the map folds
    tr = run(SolverConfig(n=65, delta=10.0, tau_max=1.0, stride=0.05), lambda r: -0.9 * r)
    assert tr.status == "completed"
    assert tr.phi[-1, -1] > 1


@pytest.mark.parametrize("scheme,tol", [("analytic-weight", 1e-10), ("conservative", 1e-5)])
def test_schemes_against_dilation(scheme, tol):
    cfg = SolverConfig(n=129, delta=1e-3, gamma=2.0, tau_max=1.0, stride=0.01, scheme=scheme)
    tr = run(cfg, lambda r: 0.05 * r)
    ref = AffineReference.for_tau(AffineParams(1.0, 1.05, 1e-3, make_eos(2.0)), 1.0)
    phi, _ = to_rescaled(ref, tr.taus, tr.r)
    assert np.max(np.abs(tr.phi - phi)) < tol


def _weighted_kinetic(gamma):
    cfg = SolverConfig(n=65, delta=0.0, gamma=gamma, tau_max=2.0, stride=0.01)
    tr = run(cfg, lambda r: 0.1 * r**2)
    r = tr.r
    W = 1 - r**2
    s1 = min(cfg.eos.beta, 2.0)
    return np.array(
        [0.5 * np.trapezoid(W**cfg.eos.alpha * tr.nu[k] ** 2 * r**2, r) * math.exp(s1 * tr.taus[k]) for k in range(len(tr))]
    )


def test_discrete_energy_decays_without_pressure():
    E = _weighted_kinetic(1.4)  # sigma1 = 1.2 < 2
    assert np.all(np.diff(E) < 0)


def test_discrete_energy_conserved_at_sigma_two():
    E = _weighted_kinetic(5 / 3)  # e^{2 tau} nu^2 is exactly constant
    assert np.max(np.abs(E / E[0] - 1)) < 1e-7


def test_jacobian_stays_smooth_for_small_data():
    tr = run(SolverConfig(n=65, delta=1e-3, tau_max=2.0, stride=0.05), lambda r: 0.01 * r)
    tv = [np.sum(np.abs(np.diff(geometry(tr.phi[k], 1 / 64).J))) for k in range(len(tr))]
    assert max(tv) < 0.1


def test_stride_stop_callback():
    calls = []
    tr = run(SolverConfig(n=33, tau_max=1.0, stride=0.1), on_stride=lambda s: calls.append(s.tau) or len(calls) < 3)
    assert tr.status == "stopped"
    assert len(tr) == 3


@pytest.mark.parametrize("kw", [{"cfl": 0.0}, {"cfl": 1.5}, {"tau_max": 0}, {"stride": 0}, {"scheme": "upwind"}, {"delta": -1}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_grid_validation():
    with pytest.raises(ValueError):
        RadialGrid(2)
    assert RadialGrid(5).h == pytest.approx(0.25)
