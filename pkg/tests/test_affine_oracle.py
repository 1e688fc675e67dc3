import numpy as np
import pytest

from vacuum_euler.affine_oracle import (
    AffineParams,
    AffineReference,
    energy,
    escape_speed,
    from_rescaled,
    integrate_lambda,
    lagrangian_residual_3d,
    lambda_rhs,
    to_rescaled,
)
from vacuum_euler.params import make_eos

EOS2 = make_eos(2.0)


def test_pressureless_free_expansion():
    s = integrate_lambda(AffineParams(1.0, 0.7, 0.0, EOS2), 5.0, 0.01)
    np.testing.assert_allclose(s.lam, 1.0 + 0.7 * s.t, atol=1e-12)


def test_rhs_at_unit_lambda():
    assert float(lambda_rhs(1.0, EOS2, 0.01)) == pytest.approx(2 * 0.01 * 2.0)


def test_rhs_rejects_nonpositive_lambda():
    with pytest.raises(ValueError):
        lambda_rhs(0.0, EOS2, 0.01)


@pytest.mark.parametrize("kw", [{"lambda0": 0.0}, {"delta": -1.0}])
def test_params_validated(kw):
    base = dict(lambda0=1.0, lambdadot0=1.0, delta=0.01, eos=EOS2)
    base.update(kw)
    with pytest.raises(ValueError):
        AffineParams(**base)


def test_three_dimensional_residual_second_order():
    p = AffineParams(1.3, 0.0, 0.01, EOS2)
    e17 = lagrangian_residual_3d(1.3, p, 17)
    e33 = lagrangian_residual_3d(1.3, p, 33)
    assert e17 <= 1e-4
    assert 3.0 <= e17 / e33 <= 5.0


def test_energy_is_conserved():
    p = AffineParams(1.0, 1.05, 1e-3, EOS2)
    s = integrate_lambda(p, 10.0, 1e-3)
    E = s.energy
    assert np.max(np.abs(E / E[0] - 1)) <= 1e-8


def test_energy_derivative_vanishes_along_ode():
    p = AffineParams(1.0, 0.3, 0.05, make_eos(5 / 3))
    lam, lamdot = 1.4, 0.8
    # dE/dt = lamdot (lamddot - strength lam^{-(1+beta)}) = 0
    h = 1e-6
    dE = (energy(p, lam + h * lamdot, lamdot + h * float(lambda_rhs(lam, p.eos, p.delta))) - energy(p, lam, lamdot)) / h
    assert abs(dE) < 1e-5


def test_escape_velocity():
    p = AffineParams(1.0, 1.0, 0.01, EOS2)
    s = integrate_lambda(p, 100.0, 0.01)
    sel = s.t >= 50
    slope = np.polyfit(s.t[sel], s.lam[sel], 1)[0]
    assert slope == pytest.approx(escape_speed(p), rel=0.01)


def test_outward_data_accelerates():
    s = integrate_lambda(AffineParams(1.0, 0.0, 0.01, EOS2), 5.0, 0.01)
    assert np.all(np.diff(s.lamdot) > 0)


def test_self_similar_expansion_is_rescaled_rest():
    p = AffineParams(1.0, 1.0, 0.0, EOS2)
    ref = AffineReference(p, 10.0)
    tau = np.linspace(0, np.log1p(10.0), 7)
    r = np.linspace(0, 1, 5)
    phi, nu = to_rescaled(ref, tau, r)
    np.testing.assert_allclose(phi, np.broadcast_to(r, phi.shape), atol=1e-12)
    np.testing.assert_allclose(nu, 0.0, atol=1e-12)


def test_initial_slice_and_round_trip():
    p = AffineParams(1.3, 0.4, 1e-3, EOS2)
    ref = AffineReference.for_tau(p, 1.0)
    r = np.array([0.5, 1.0])
    phi, nu = to_rescaled(ref, np.array([0.0]), r)
    np.testing.assert_allclose(phi[0], 1.3 * r)
    np.testing.assert_allclose(nu[0], (0.4 - 1.3) * r)
    tau = np.array([0.2, 0.9])
    phi, _ = to_rescaled(ref, tau, np.array([1.0]))
    lam = ref(np.expm1(tau))[0]
    np.testing.assert_allclose(from_rescaled(tau, phi[:, 0]), lam, rtol=1e-12)


def test_series_and_reference_agree():
    p = AffineParams(1.0, 1.05, 1e-3, EOS2)
    s = integrate_lambda(p, np.expm1(1.0) + 0.01, 1e-3)
    ref = AffineReference.for_tau(p, 1.0)
    tau = np.linspace(0, 1, 11)
    a, _ = to_rescaled(s, tau, np.array([1.0]))
    b, _ = to_rescaled(ref, tau, np.array([1.0]))
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_reference_range_checked():
    ref = AffineReference(AffineParams(1.0, 1.0, 1e-3, EOS2), 1.0)
    with pytest.raises(ValueError):
        ref(2.0)
