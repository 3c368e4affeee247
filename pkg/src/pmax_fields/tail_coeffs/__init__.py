"""Tail dependence coefficients: closed forms, exact joint laws and oracles."""
from .closed_form import *  # noqa: F401,F403
from .joint import *  # noqa: F401,F403
from .oracle import *  # noqa: F401,F403
from . import closed_form, joint, oracle

__all__ = closed_form.__all__ + joint.__all__ + oracle.__all__
