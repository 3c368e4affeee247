"""
Grid-averaged inversion estimator of the power parameter at one location.

The marginal law ``F(z) = exp(-1/z - z**-alpha)`` inverts to
``alpha = log(-log F(z) - 1/z) / log(1/z)`` for any ``z != 1``.  The
estimator plugs the empirical distribution function into this identity on
an arithmetic grid from ``start`` to the k-th sample percentile and averages.
"""
from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..stats_core import DomainError, EmpiricalCdf, percentile

__all__ = [
    "EstimationError",
    "GridSpec",
    "AlphaEstimate",
    "alpha_from_cdf",
    "alpha_grid",
    "estimate_alpha",
]

log = logging.getLogger(__name__)


class EstimationError(DomainError):
    """No usable grid point; ``diagnostics`` maps drop reasons to counts."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


@dataclass(frozen=True)
class GridSpec:
    """Arithmetic grid from ``start`` to the ``k``-th sample percentile.

    ``count=None`` uses as many points as there are observations.
    """

    k: float = 95.0
    start: float = 1.1
    count: int | None = None

    def __post_init__(self):
        if not 0 < self.k < 100:
            raise DomainError("percentile k must lie in (0, 100)")
        if not self.start > 1:
            raise DomainError("grid start must exceed 1")
        if self.count is not None and self.count < 2:
            raise DomainError("grid needs at least 2 points")


@dataclass
class AlphaEstimate:
    value: float
    n_valid: int
    n_dropped: int
    drop_reasons: dict = field(default_factory=dict)
    grid_start: float = math.nan
    grid_end: float = math.nan

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "n_valid": self.n_valid,
            "n_dropped": self.n_dropped,
            "drop_reasons": dict(self.drop_reasons),
            "grid_start": self.grid_start,
            "grid_end": self.grid_end,
        }


def alpha_from_cdf(z, f_value):
    """Invert the pMAX marginal law at one point.

    Parameters
    ----------
    z : float or ndarray
        Level, positive and different from 1.
    f_value : float or ndarray
        Distribution function value at ``z``, in (0, 1).
    """
    z = np.asarray(z, dtype=float)
    f = np.asarray(f_value, dtype=float)
    if np.any(z <= 0) or np.any(z == 1):
        raise DomainError("alpha_from_cdf requires 0 < z != 1")
    if np.any((f <= 0) | (f >= 1)):
        raise DomainError("alpha_from_cdf requires 0 < F < 1")
    inner = -np.log(f) - 1.0 / z
    if np.any(inner <= 0):
        raise DomainError("-log F(z) - 1/z must be positive")
    out = np.log(inner) / np.log(1.0 / z)
    return float(out) if out.ndim == 0 else out


def alpha_grid(sample, grid: GridSpec) -> np.ndarray:
    """The evaluation levels ``Z_1, ..., Z_count`` for a sample."""
    sample = np.asarray(sample, dtype=float).ravel()
    top = percentile(sample, grid.k)
    count = sample.size if grid.count is None else grid.count
    if top <= grid.start:
        raise EstimationError(
            f"{grid.k:g}th percentile {top:.6g} does not exceed grid start {grid.start:g}",
            {"empty_grid": count},
        )
    return np.linspace(grid.start, top, max(count, 2))


def estimate_alpha(sample, grid: GridSpec = GridSpec(), cdf=None) -> AlphaEstimate:
    """Estimate ``alpha`` from a positive sample at one location.

    Grid points are dropped when ``Z <= 1``, ``F(Z)`` is 0 or 1, or
    ``-log F(Z) - 1/Z <= 0``.  ``cdf`` replaces the empirical distribution
    function, e.g. by the exact marginal law for checking the inversion.
    """
    sample = np.asarray(sample, dtype=float).ravel()
    if sample.size == 0:
        raise DomainError("empty sample")
    if np.any(~(sample > 0)):
        raise DomainError("sample values must be positive")
    z = alpha_grid(sample, grid)
    f = np.asarray((cdf or EmpiricalCdf(sample))(z), dtype=float)

    reasons = Counter()
    keep = np.ones(z.size, dtype=bool)
    checks = (
        ("z<=1", z <= 1),
        ("F>=1", f >= 1),
        ("F<=0", f <= 0),
    )
    for label, bad in checks:
        reasons[label] += int(np.sum(bad & keep))
        keep &= ~bad
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = -np.log(np.where(keep, f, 0.5)) - 1.0 / z
    bad = keep & ~(inner > 0)
    reasons["-logF-1/z<=0"] += int(bad.sum())
    keep &= ~bad
    reasons = {k: v for k, v in reasons.items() if v}

    n_valid = int(keep.sum())
    if n_valid == 0:
        raise EstimationError(
            f"no valid grid point among {z.size} (drops: {reasons})", reasons
        )
    if reasons:
        log.debug("alpha grid drops: %s", reasons)
    values = np.log(inner[keep]) / np.log(1.0 / z[keep])
    value = float(values.mean())
    if not (value > 0 and math.isfinite(value)):
        raise EstimationError(f"non-positive estimate {value:.6g}", reasons)
    return AlphaEstimate(
        value=value,
        n_valid=n_valid,
        n_dropped=int(z.size - n_valid),
        drop_reasons=reasons,
        grid_start=float(z[0]),
        grid_end=float(z[-1]),
    )
