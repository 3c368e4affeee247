"""Numerical recomputation of lambda and eta from exact joint laws."""
from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp
import numpy as np

from ..stats_core import NumericalError
from .joint import DPS, JointSurvivalFn

__all__ = [
    "LAMBDA_GRID",
    "ETA_GRID",
    "default_grid",
    "LambdaOracleResult",
    "EtaOracleResult",
    "lambda_oracle",
    "eta_oracle",
]


def default_grid(lo_exp: float, hi_exp: float, points: int = 13) -> np.ndarray:
    return np.logspace(lo_exp, hi_exp, points)


LAMBDA_GRID = default_grid(2, 6)
# eta needs a deeper tail: slowly varying factors still bend the fit below 1e6
ETA_GRID = default_grid(6, 12)


@dataclass(frozen=True)
class LambdaOracleResult:
    value: float
    grid: np.ndarray
    values: np.ndarray
    converged: bool
    last_change: float


@dataclass(frozen=True)
class EtaOracleResult:
    value: float
    raw_value: float
    slope: float
    intercept: float
    max_residual: float
    grid: np.ndarray
    margins: str


def _check_grid(y_grid, decades):
    y = np.asarray(y_grid, dtype=float)
    if y.ndim != 1 or y.size < 3 or np.any(np.diff(y) <= 0) or y[0] <= 0:
        raise ValueError("y_grid must be an increasing positive sequence of >= 3 points")
    if np.log10(y[-1] / y[0]) < decades - 1e-9:
        raise ValueError(f"y_grid must span at least {decades} decades")
    return y


def lambda_oracle(joint: JointSurvivalFn, y_grid=LAMBDA_GRID, tol: float = 1e-3) -> LambdaOracleResult:
    """``P(A > y, B > y) / P(A > y)`` along ``y_grid``; the last value is the estimate."""
    y = _check_grid(y_grid, 4)
    ratios = []
    with mp.workdps(DPS):
        for level in y:
            den = joint.survival_a(level)
            num = joint.survival_ab(level, level)
            if den <= 0:
                raise NumericalError(f"marginal survival underflow at y={level:g}")
            if num < 0:
                raise NumericalError(f"negative joint survival at y={level:g}: precision loss")
            ratios.append(float(num / den))
    ratios = np.clip(np.array(ratios), 0.0, 1.0)
    change = float(abs(ratios[-1] - ratios[-2]))
    return LambdaOracleResult(float(ratios[-1]), y, ratios, change < tol, change)


def eta_oracle(joint: JointSurvivalFn, y_grid=ETA_GRID, margins: str = "frechet") -> EtaOracleResult:
    """Residual dependence from a least-squares log-log slope.

    ``margins="frechet"`` standardises both coordinates to unit Fréchet and
    fits ``log P(both > level) ~ -(1/eta) log y``.  ``margins="raw"`` keeps a
    common raw threshold ``y`` and fits ``log P(A > y, B > y)`` against
    ``log P(A > y)`` with slope ``1/eta``, the convention in which the joint
    survival is compared with a power of the conditioning margin.
    """
    y = _check_grid(y_grid, 3)
    xs, ys = [], []
    with mp.workdps(DPS):
        for level in y:
            if margins == "frechet":
                joint_s = joint.standardized_survival(level)
                x = mp.log(level)
            elif margins == "raw":
                joint_s = joint.survival_ab(level, level)
                marg = joint.survival_a(level)
                if marg <= 0:
                    raise NumericalError(f"marginal survival underflow at y={level:g}")
                x = -mp.log(marg)
            else:
                raise ValueError(f"unknown margins convention {margins!r}")
            if joint_s <= 0:
                raise NumericalError(f"joint survival underflow at y={level:g}")
            xs.append(float(x))
            ys.append(float(-mp.log(joint_s)))
    xs, ys = np.array(xs), np.array(ys)
    if np.any(np.diff(ys) <= 0):
        raise NumericalError("joint survival is not decreasing along the grid")
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    raw = 1.0 / slope
    return EtaOracleResult(
        value=float(min(max(raw, np.finfo(float).tiny), 1.0)),
        raw_value=float(raw),
        slope=float(slope),
        intercept=float(intercept),
        max_residual=float(np.max(np.abs(resid))),
        grid=y,
        margins=margins,
    )
