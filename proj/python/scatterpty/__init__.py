"""Scatter ptychography: angular-spectrum propagation, multi-plane phase
retrieval and bar-chart metrics."""

from ._core import *  # noqa: F401,F403
from ._core import ParameterError, NumericalError, IoError  # noqa: F401

__version__ = "0.1.0"
