"""Alpha estimation, empirical dependence estimators and the Monte Carlo harness."""
from .alpha import *  # noqa: F401,F403
from .empirical import *  # noqa: F401,F403
from .montecarlo import *  # noqa: F401,F403
from . import alpha, empirical, montecarlo

__all__ = alpha.__all__ + empirical.__all__ + montecarlo.__all__
