"""Generalized fractional Brownian motion: covariance, sampling and small-ball estimates."""

from ._gfbm import *  # noqa: F401,F403
from ._gfbm import (
    DerivedExponents,
    Error,
    Params,
    ParamError,
    DomainError,
    NumericalError,
    NoConvergence,
    NotFactorizable,
    InsufficientData,
    ZeroHits,
    UnboundedRatio,
    IoError,
)

__version__ = "0.1.0"


def uniform_grid(n, t_max=1.0):
    """Grid k t_max / n, k = 1..n."""
    return [t_max * k / n for k in range(1, n + 1)]
