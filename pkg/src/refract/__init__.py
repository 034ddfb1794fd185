"""Refraction strategies for de Finetti's dividend problem with bounded dividend rates."""

from .levy import (
    JumpMeasure,
    LevyModel,
    ModelError,
    RefractionParams,
    classify,
    laplace_exponent,
    laplace_exponent_deriv,
    model_from_dict,
    right_inverse,
)

__version__ = "0.1.0"
