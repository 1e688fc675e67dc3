import numpy as np
import pytest

from vacuum_euler.reduction import reduced_operator, reduction_errors, sample_maps

W = lambda r: 1 - r**2  # noqa: E731
dW = lambda r: -2 * r  # noqa: E731


@pytest.mark.parametrize("alpha", [1.0, 1.5])
def test_cartesian_divergence_agrees_second_order(alpha):
    e1 = reduction_errors(alpha, W, dW, 1 / 16)
    e2 = reduction_errors(alpha, W, dW, 1 / 32)
    for name in e1:
        assert 0.7 * 4 <= e1[name] / e2[name] <= 1.3 * 4


def test_identity_map_operator():
    # phi = r: D = (1 + alpha) W^alpha W'
    from vacuum_euler.reduction import RadialMap

    ident = RadialMap("identity", lambda r: r, lambda r: np.ones_like(r), lambda r: np.zeros_like(r))
    r = np.linspace(0.1, 0.9, 9)
    np.testing.assert_allclose(reduced_operator(ident, r, W, dW, 1.0), 2 * (1 - r**2) * (-2 * r), atol=1e-14)


def test_three_maps():
    assert [m.name for m in sample_maps()] == ["cubic", "quintic", "gaussian"]
