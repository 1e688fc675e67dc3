"""Equation-of-state constants and the time-weight split."""

from dataclasses import dataclass


@dataclass(frozen=True)
class EquationOfState:
    gamma: float
    alpha: float
    beta: float

    @property
    def experimental(self) -> bool:
        # large alpha makes the boundary weights very stiff at desk resolution
        return self.gamma < 1.2


@dataclass(frozen=True)
class TimeWeights:
    sigma1: float
    sigma2: float


def make_eos(gamma: float) -> EquationOfState:
    """Build the polytropic constants from the adiabatic exponent.

    alpha = 1/(gamma-1) and beta = 3/alpha = 3(gamma-1).
    """
    gamma = float(gamma)
    if not gamma > 1.0:
        raise ValueError(f"gamma>1 required, got {gamma}")
    return EquationOfState(gamma=gamma, alpha=1.0 / (gamma - 1.0), beta=3.0 * (gamma - 1.0))


def time_weights(beta: float) -> TimeWeights:
    """Split beta into sigma1 = min(beta, 2) and sigma2 = max(beta - 2, 0)."""
    beta = float(beta)
    if not beta > 0.0:
        raise ValueError(f"beta>0 required, got {beta}")
    if beta <= 2.0:
        return TimeWeights(beta, 0.0)
    return TimeWeights(2.0, beta - 2.0)
