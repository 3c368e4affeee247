"""Closed-form tail dependence (lambda) and residual dependence (eta) values."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..fields import Location
from ..stats_core import CorrelationModel, DomainError

__all__ = [
    "TEMPORAL",
    "SPATIAL",
    "SPATIO_TEMPORAL",
    "DEGENERATE",
    "TailContext",
    "TailCoefficient",
    "lambda_prop31",
    "lambda_z_common",
    "lambda_ex1",
    "schlather_bivariate_cdf",
    "schlather_lambda",
    "lag1_overlap",
    "spatial_overlap",
    "lambda_ex2",
    "lambda_ex2_composed",
    "eta_prop41",
    "eta_z_common",
    "eta_ex1",
]

TEMPORAL = "temporal"
SPATIAL = "spatial"
SPATIO_TEMPORAL = "spatio-temporal"
DEGENERATE = "degenerate"

_BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class TailContext:
    """Query pair ``(Y_n(x), Y_{n+r}(x'))`` with the power parameters at both ends."""

    r: int
    x: Location
    xp: Location
    alpha_x: float
    alpha_xp: float

    def __post_init__(self):
        if self.r < 0 or int(self.r) != self.r:
            raise DomainError("lag r must be a non-negative integer")
        if not (self.alpha_x > 0 and self.alpha_xp > 0):
            raise DomainError("alpha values must be positive")
        if self.same_location and self.alpha_x != self.alpha_xp:
            raise DomainError("one location cannot carry two alpha values")

    @property
    def same_location(self) -> bool:
        return self.x.id == self.xp.id

    @property
    def regime(self) -> str:
        if self.r == 0:
            return DEGENERATE if self.same_location else SPATIAL
        return TEMPORAL if self.same_location else SPATIO_TEMPORAL

    @property
    def h(self) -> float:
        return self.x.distance(self.xp)

    def require_nondegenerate(self):
        if self.regime == DEGENERATE:
            raise DomainError("degenerate context: r = 0 and x = x' (the pair is one variable)")

    def _boundary_note(self) -> str:
        near = [
            a for a in (self.alpha_x, self.alpha_xp)
            if a != 1.0 and abs(a - 1.0) < _BOUNDARY_TOL
        ]
        return " [warning: alpha within 1e-9 of the boundary 1]" if near else ""


@dataclass(frozen=True)
class TailCoefficient:
    kind: str
    value: float
    derivation: str
    regime: str

    def __post_init__(self):
        v = float(self.value)
        if self.kind == "lambda":
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"lambda {v} outside [0, 1]")
        elif self.kind == "eta":
            if not 0.0 < v <= 1.0:
                raise DomainError(f"eta {v} outside (0, 1]")
        else:
            raise DomainError(f"unknown coefficient kind {self.kind!r}")
        object.__setattr__(self, "value", v)


def _by_alpha(alpha, below, at, above):
    if alpha < 1.0:
        return below, "alpha(x)<1"
    if alpha == 1.0:
        return at, "alpha(x)=1"
    return above, "alpha(x)>1"


def lambda_prop31(ctx: TailContext, lambda_x: float, lambda_z: float | None = None) -> TailCoefficient:
    """General pMAX tail dependence from the X-layer and Z-layer coefficients.

    ``lambda_z`` is the coefficient of ``Z_n(x')**(1/alpha(x'))`` given
    ``Z_n(x)**(1/alpha(x))`` and is only used when ``r = 0``.
    """
    ctx.require_nondegenerate()
    for v in (lambda_x, lambda_z):
        if v is not None and not 0.0 <= v <= 1.0:
            raise DomainError("input lambda values must lie in [0, 1]")
    a = ctx.alpha_x
    if ctx.r > 0:
        value, branch = _by_alpha(a, 0.0, lambda_x / 2.0, lambda_x)
    else:
        if lambda_z is None:
            raise DomainError("lambda_z is required when r = 0")
        value, branch = _by_alpha(a, lambda_z, (lambda_x + lambda_z) / 2.0, lambda_x)
    return TailCoefficient(
        "lambda", value, f"composition r{'>' if ctx.r else '='}0 {branch}" + ctx._boundary_note(),
        ctx.regime,
    )


def lambda_z_common(alpha_x: float, alpha_xp: float) -> float:
    """Tail dependence of ``Z**(1/alpha_xp)`` given ``Z**(1/alpha_x)`` for one shared Z."""
    if not (alpha_x > 0 and alpha_xp > 0):
        raise DomainError("alpha values must be positive")
    return 1.0 if alpha_xp <= alpha_x else 0.0


def lambda_ex1(ctx: TailContext) -> TailCoefficient:
    """Independent innovations, weights (2/3, 1/3), common Z."""
    ctx.require_nondegenerate()
    a, ap = ctx.alpha_x, ctx.alpha_xp
    regime = ctx.regime
    if regime == TEMPORAL:
        if a < 1 or ctx.r > 1:
            value, branch = 0.0, "alpha(x)<1 or r>1"
        elif a == 1:
            value, branch = 1.0 / 6.0, "alpha(x)=1, r=1"
        else:
            value, branch = 1.0 / 3.0, "alpha(x)>1, r=1"
    elif regime == SPATIO_TEMPORAL:
        value, branch = 0.0, "r>=1, x!=x'"
    else:
        if ap <= a < 1:
            value, branch = 1.0, "alpha(x')<=alpha(x)<1"
        elif ap <= a == 1:
            value, branch = 0.5, "alpha(x')<=alpha(x)=1"
        else:
            value, branch = 0.0, "otherwise"
    return TailCoefficient("lambda", value, f"ex1 {regime}: {branch}" + ctx._boundary_note(), regime)


def schlather_bivariate_cdf(z, zp, rho):
    """Joint distribution function of a Schlather pair with correlation ``rho``."""
    z = np.asarray(z, dtype=float)
    zp = np.asarray(zp, dtype=float)
    if np.any(z <= 0) or np.any(zp <= 0):
        raise DomainError("schlather_bivariate_cdf requires z, z' > 0")
    if np.any(np.abs(rho) > 1):
        raise DomainError("rho must lie in [-1, 1]")
    arg = 1.0 - 2.0 * (rho + 1.0) * z * zp / (z + zp) ** 2
    # rounding can push the argument just below zero when rho = 1, z = z'
    root = np.sqrt(np.maximum(arg, 0.0))
    out = np.exp(-0.5 * (1.0 / z + 1.0 / zp) * (1.0 + root))
    return float(out) if out.ndim == 0 else out


def schlather_lambda(rho: float) -> float:
    """Spatial tail dependence of a Schlather pair, ``2 - theta = 1 - sqrt((1-rho)/2)``."""
    return 1.0 - math.sqrt(max(0.0, (1.0 - rho) / 2.0))


def lag1_overlap(rho: float) -> float:
    """``(1 - sqrt(1 - 4/9 (rho+1))) / 2``: lag-one X-layer coefficient."""
    return (1.0 - math.sqrt(max(0.0, 1.0 - 4.0 / 9.0 * (rho + 1.0)))) / 2.0


def spatial_overlap(rho: float) -> float:
    """``(1 - sqrt(1 - (rho+1)/2)) / 2`` as tabulated for the spatial case."""
    return (1.0 - math.sqrt(max(0.0, 1.0 - 0.5 * (rho + 1.0)))) / 2.0


def lambda_ex2(ctx: TailContext, corr: CorrelationModel, h: float | None = None) -> TailCoefficient:
    """Schlather innovations, weights (2/3, 1/3), common Z, tabulated values.

    The spatial branch uses :func:`spatial_overlap`, which is half the
    Schlather spatial coefficient implied by the bivariate distribution
    function; :func:`lambda_ex2_composed` gives the value the exact joint law
    converges to.
    """
    ctx.require_nondegenerate()
    h = ctx.h if h is None else h
    rho = corr.rho(h)
    a, ap = ctx.alpha_x, ctx.alpha_xp
    regime = ctx.regime
    note = ctx._boundary_note()
    if ctx.r > 1:
        return TailCoefficient("lambda", 0.0, f"ex2 {regime}: r>1" + note, regime)
    if ctx.r == 1:
        g = lag1_overlap(rho)
        value, branch = _by_alpha(a, 0.0, g / 2.0, g)
        return TailCoefficient("lambda", value, f"ex2 {regime} r=1: {branch}" + note, regime)
    s = spatial_overlap(rho)
    if a == 1 and ap < 1:
        value, branch = s / 2.0 + 0.5, "alpha(x)=1, alpha(x')<1"
    elif a == 1 and ap > 1:
        value, branch = s / 2.0, "alpha(x)=1, alpha(x')>1"
    elif a == 1:
        # no tabulated branch; composition rule with lambda_Z = 1
        value, branch = s / 2.0 + 0.5, "alpha(x)=alpha(x')=1 (via composition rule)"
    elif a < 1 and ap > a:
        value, branch = 0.0, "alpha(x)<1, alpha(x')>alpha(x)"
    elif a < 1:
        value, branch = 1.0, "alpha(x)<1, alpha(x')<=alpha(x)"
    else:
        value, branch = s, "alpha(x)>1"
    return TailCoefficient("lambda", value, f"ex2 {regime} (tabulated): {branch}" + note, regime)


def lambda_ex2_composed(ctx: TailContext, corr: CorrelationModel, h: float | None = None) -> TailCoefficient:
    """Schlather structure via :func:`lambda_prop31` with the exact X-layer coefficient."""
    ctx.require_nondegenerate()
    rho = corr.rho(ctx.h if h is None else h)
    if ctx.r > 1:
        lam_x = 0.0
    elif ctx.r == 1:
        lam_x = lag1_overlap(rho)
    else:
        lam_x = schlather_lambda(rho)
    lam_z = lambda_z_common(ctx.alpha_x, ctx.alpha_xp) if ctx.r == 0 else None
    out = lambda_prop31(ctx, lam_x, lam_z)
    return TailCoefficient("lambda", out.value, "ex2 composed " + out.derivation, out.regime)


def _check_eta(*values):
    for v in values:
        if v is not None and not 0.0 < v <= 1.0:
            raise DomainError(f"eta input {v} outside (0, 1]")


def eta_prop41(ctx: TailContext, eta_x: float, eta_z: float | None = None) -> TailCoefficient:
    """Residual dependence of the pMAX pair as the general proposition prints it."""
    ctx.require_nondegenerate()
    _check_eta(eta_x, eta_z)
    a, ap = ctx.alpha_x, ctx.alpha_xp
    if ctx.r > 0:
        if a < 1:
            value = a * max(eta_x, 1.0 / (1.0 + min(ap, 1.0)))
            branch = "r>0 alpha(x)<1"
        else:
            value = max(eta_x, 1.0 / (1.0 + a), 1.0 / (1.0 + ap))
            branch = "r>0 alpha(x)>=1"
    else:
        if eta_z is None:
            raise DomainError("eta_z is required when r = 0")
        value = min(1.0, a) * max(eta_x, eta_z, 1.0 / (1.0 + a), 1.0 / (1.0 + ap))
        branch = "r=0"
    return TailCoefficient(
        "eta", value, f"eta_prop41 verbatim {branch}" + ctx._boundary_note(), ctx.regime
    )


def eta_z_common(alpha_x: float, alpha_xp: float) -> float:
    """Residual coefficient of ``Z**(1/alpha_xp)`` against ``Z**(1/alpha_x)``, shared Z.

    The joint exceedance of level y is ``P(Z > y**max(alpha))``, which decays as
    the conditioning margin ``y**-alpha_x`` raised to ``max(alpha)/alpha_x``.
    """
    if not (alpha_x > 0 and alpha_xp > 0):
        raise DomainError("alpha values must be positive")
    return min(1.0, alpha_x / alpha_xp)


def eta_ex1(ctx: TailContext) -> TailCoefficient:
    """Residual dependence for the independent-innovation structure.

    Spatial branches are tried in tabulated order and the first match
    wins, so overlapping conditions resolve towards the earlier row.
    """
    ctx.require_nondegenerate()
    a, ap = ctx.alpha_x, ctx.alpha_xp
    regime = ctx.regime
    note = ctx._boundary_note()
    if regime == TEMPORAL:
        if ctx.r == 1 and a < 1:
            value, branch = max(0.5, a), "alpha(x)<1, r=1"
        elif ctx.r == 1:
            value, branch = 1.0, "alpha(x)>=1, r=1"
        else:
            value, branch = 0.5, "r>1"
        return TailCoefficient("eta", value, f"ex1 {regime}: {branch}" + note, regime)
    if regime == SPATIO_TEMPORAL:
        return TailCoefficient("eta", 0.5, f"ex1 {regime}: independence" + note, regime)

    table = (
        (lambda: ap <= a <= 1, lambda: 1.0, "alpha(x')<=alpha(x)<=1"),
        (lambda: a < 1 < ap, lambda: a / (1 + a), "alpha(x)<1<alpha(x')"),
        (lambda: a < 1 and a < ap < 1 + a, lambda: a / ap, "alpha(x)<1, alpha(x)<alpha(x')<1+alpha(x)"),
        (lambda: 1 < a < ap, lambda: max(0.5, 1 / ap), "1<alpha(x)<alpha(x')"),
        (lambda: ap < 1 < a, lambda: 1 / (1 + ap), "alpha(x')<1<alpha(x)"),
        (lambda: ap < 1 < a < 1 + ap, lambda: 1 / a, "alpha(x')<1<alpha(x)<1+alpha(x')"),
        (lambda: 1 < ap < a, lambda: max(0.5, 1 / a), "1<alpha(x')<alpha(x)"),
    )
    for cond, val, label in table:
        if cond():
            return TailCoefficient("eta", val(), f"ex1 {regime}: {label}" + note, regime)
    raise DomainError(
        f"no tabulated spatial eta branch covers alpha(x)={a}, alpha(x')={ap}"
    )
