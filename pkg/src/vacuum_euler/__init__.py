"""Numerical laboratory for rescaled vacuum free-boundary Euler flow."""

from .params import EquationOfState, TimeWeights, make_eos, time_weights
from .weights import CutoffPair, EnthalpyProfile, cutoff, model_profile, profile_by_name

__all__ = [
    "EquationOfState",
    "TimeWeights",
    "make_eos",
    "time_weights",
    "EnthalpyProfile",
    "CutoffPair",
    "model_profile",
    "profile_by_name",
    "cutoff",
]
