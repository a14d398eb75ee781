"""Numerical laboratory for scale-invariant Harnack inequalities of isotropic Levy processes."""
from .errors import (ConfigurationError, DomainError, HarnackLabError, NumericalError,
                     OutOfRangeError, UnboundedError)
from .kernels import BACKEND
from .model import Ball, ProcessModel
from .scale import GreenScale

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Ball", "ConfigurationError", "DomainError", "GreenScale", "HarnackLabError",
    "NumericalError", "OutOfRangeError", "ProcessModel", "UnboundedError", "__version__",
]
