import numpy as np
import pytest

from vacuum_euler.weights import cutoff, model_profile, physical_vacuum_check, profile_by_name


def test_model_profile_values():
    p = model_profile(0.01, 1.0)
    r = np.array([0.0, 0.5, 1.0])
    np.testing.assert_allclose(p.W(r), [1.0, 0.75, 0.0])
    np.testing.assert_allclose(p.w(r), [0.01, 0.0075, 0.0])
    np.testing.assert_allclose(p.dW(r), [0.0, -1.0, -2.0])


@pytest.mark.parametrize("name", ["model", "linear", "quadratic-degenerate"])
def test_derivatives_match_finite_differences(name):
    p = profile_by_name(name, 1.0, 1.5)
    r = np.linspace(0.1, 0.9, 9)
    h = 1e-6
    np.testing.assert_allclose(p.dW(r), (p.W(r + h) - p.W(r - h)) / (2 * h), atol=1e-8)
    np.testing.assert_allclose(p.d2W(r), (p.dW(r + h) - p.dW(r - h)) / (2 * h), atol=1e-6)


def test_physical_vacuum_condition():
    assert physical_vacuum_check(profile_by_name("model", 1.0, 1.0))["pass"]
    assert physical_vacuum_check(profile_by_name("linear", 1.0, 1.0))["pass"]
    # W ~ d^2 degenerates too fast at the boundary
    assert not physical_vacuum_check(profile_by_name("quadratic-degenerate", 1.0, 1.0))["pass"]


def test_density_is_w_to_alpha():
    p = model_profile(0.1, 1.5)
    r = np.linspace(0, 1, 11)
    np.testing.assert_allclose(p.density(r), (0.1 * (1 - r**2)) ** 1.5)


@pytest.mark.parametrize("kw", [{"name": "cubic", "delta": 1.0, "alpha": 1.0}, {"name": "model", "delta": 0.0, "alpha": 1.0}])
def test_bad_profile_arguments(kw):
    with pytest.raises(ValueError):
        profile_by_name(kw["name"], kw["delta"], kw["alpha"])


def test_cutoff_partition():
    c = cutoff(0.5, 0.75)
    r = np.linspace(0, 1, 401)
    psi, psib = c.psi(r), c.psibar(r)
    np.testing.assert_allclose(psi + psib, 1.0)
    assert np.all(psi[r <= 0.5] == 0)
    assert np.all(psi[r >= 0.75] == 1)
    assert np.all(np.diff(psi) >= 0)


@pytest.mark.parametrize("r1,r0", [(0.75, 0.5), (0.0, 0.5), (0.5, 1.0)])
def test_cutoff_radii_validated(r1, r0):
    with pytest.raises(ValueError):
        cutoff(r1, r0)
