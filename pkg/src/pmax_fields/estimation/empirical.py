"""Rank-based finite-level estimators of lambda and eta from paired data."""
from __future__ import annotations

import warnings

import numpy as np
from scipy.stats import rankdata

from ..stats_core import DomainError

__all__ = ["UndefinedEstimateError", "empirical_lambda", "empirical_eta"]


class UndefinedEstimateError(DomainError):
    pass


def _pairs(pairs, min_n):
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError("pairs must be an (n, 2) array")
    if arr.shape[0] < min_n:
        raise DomainError(f"need at least {min_n} pairs, got {arr.shape[0]}")
    return arr


def empirical_lambda(pairs, u: float) -> float:
    """Share of first-coordinate rank exceedances of ``u n`` that are joint.

    Only ranks enter, so the value is unchanged by increasing
    transformations of either coordinate.
    """
    if not 0 < u < 1:
        raise DomainError("u must lie in (0, 1)")
    arr = _pairs(pairs, 100)
    n = arr.shape[0]
    ra = rankdata(arr[:, 0], method="ordinal")
    rb = rankdata(arr[:, 1], method="ordinal")
    level = u * n
    first = ra > level
    n_first = int(first.sum())
    if n_first == 0:
        raise UndefinedEstimateError(f"no exceedances of level u={u}")
    if n_first < 20:
        warnings.warn(f"only {n_first} conditioning exceedances at u={u}", stacklevel=2)
    return float(np.sum(first & (rb > level)) / n_first)


def empirical_eta(pairs, tail_fraction: float = 0.05) -> float:
    """Hill estimate of eta on ``T = min(1/(1-F1), 1/(1-F2))``.

    ``F1``, ``F2`` are the rank transforms ``rank/(n+1)``; the Hill
    estimator runs over the top ``tail_fraction`` of ``T``.
    """
    if not 0 < tail_fraction <= 0.2:
        raise DomainError("tail_fraction must lie in (0, 0.2]")
    arr = _pairs(pairs, 1000)
    n = arr.shape[0]
    fa = rankdata(arr[:, 0], method="average") / (n + 1)
    fb = rankdata(arr[:, 1], method="average") / (n + 1)
    t = np.sort(np.minimum(1.0 / (1.0 - fa), 1.0 / (1.0 - fb)))
    k = int(tail_fraction * n)
    if k < 2:
        raise DomainError("tail_fraction leaves fewer than 2 order statistics")
    top, base = t[n - k:], t[n - k - 1]
    if top[-1] <= base:
        raise UndefinedEstimateError("tail sample collapsed by ties")
    eta = float(np.mean(np.log(top / base)))
    if eta <= 0:
        raise UndefinedEstimateError("degenerate tail sample")
    return min(eta, 1.0)
