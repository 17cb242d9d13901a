"""Riccati perturbation bounds and certainty-equivalent LQR experiments."""

from ._lqrlab import *  # noqa: F401,F403
from ._lqrlab import Error, NumericalError, ValidationError  # noqa: F401
