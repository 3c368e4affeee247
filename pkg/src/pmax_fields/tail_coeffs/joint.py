"""
Exact bivariate laws of pMAX pairs, evaluated in extended precision.

Every distribution function here has the form ``exp(-V)``, so joint
survival probabilities come from inclusion-exclusion on ``expm1`` terms.
Working at 80 significant digits keeps the cancellation harmless even when
the joint survival is 1e-40 while each term is close to one.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import mpmath as mp

from ..fields import COMMON_Z, IndependentFrechet, ModelSpec, Schlather
from ..stats_core import DomainError
from .closed_form import TailContext

__all__ = [
    "DPS",
    "UnsupportedModelError",
    "JointSurvivalFn",
    "joint_from_log_cdfs",
    "independent_frechet_joint",
    "comonotone_frechet_joint",
    "gaussian_frechet_joint",
    "joint_cdf_builder",
    "x_layer_coefficients",
]

DPS = 80


class UnsupportedModelError(NotImplementedError):
    """No exact joint law is available for the requested model/context."""


@dataclass(frozen=True)
class JointSurvivalFn:
    """Exact joint and marginal survival functions of a pair ``(A, B)``.

    ``threshold_a(y)`` returns the level ``z`` with ``P(A <= z) = exp(-1/y)``,
    i.e. the unit Fréchet standardisation of ``A``.
    """

    survival_a: Callable
    survival_b: Callable
    survival_ab: Callable
    threshold_a: Callable
    threshold_b: Callable
    label: str = ""
    log_cdf_ab: Callable | None = None

    def cdf_ab(self, z, zp) -> float:
        if self.log_cdf_ab is None:
            raise UnsupportedModelError(f"{self.label}: no closed-form joint CDF")
        with mp.workdps(DPS):
            return float(mp.exp(self.log_cdf_ab(mp.mpf(z), mp.mpf(zp))))

    def standardized_survival(self, y):
        """``P(A > threshold_a(y), B > threshold_b(y))``."""
        return self.survival_ab(self.threshold_a(y), self.threshold_b(y))


def _invert_decreasing(v: Callable, target):
    """Solve ``v(z) = target`` for a decreasing positive ``v`` by log-scale bisection."""
    lo = hi = mp.mpf(1) / target
    while v(lo) < target:
        lo /= 2
    while v(hi) > target:
        hi *= 2
    llo, lhi = mp.log(lo), mp.log(hi)
    for _ in range(300):
        mid = (llo + lhi) / 2
        if v(mp.exp(mid)) > target:
            llo = mid
        else:
            lhi = mid
        if lhi - llo < mp.mpf(10) ** (-(DPS - 10)):
            break
    return mp.exp((llo + lhi) / 2)


def joint_from_log_cdfs(exponent_a, exponent_b, exponent_ab, label="") -> JointSurvivalFn:
    """Build from exponent functions ``V`` with ``P(...) = exp(-V)``.

    ``exponent_a(z)`` and ``exponent_b(z)`` must be decreasing in ``z``.
    """

    def surv_a(z):
        with mp.workdps(DPS):
            return -mp.expm1(-exponent_a(mp.mpf(z)))

    def surv_b(z):
        with mp.workdps(DPS):
            return -mp.expm1(-exponent_b(mp.mpf(z)))

    def surv_ab(z, zp):
        with mp.workdps(DPS):
            z, zp = mp.mpf(z), mp.mpf(zp)
            return (
                -mp.expm1(-exponent_a(z))
                - mp.expm1(-exponent_b(zp))
                + mp.expm1(-exponent_ab(z, zp))
            )

    def thr_a(y):
        with mp.workdps(DPS):
            return _invert_decreasing(exponent_a, 1 / mp.mpf(y))

    def thr_b(y):
        with mp.workdps(DPS):
            return _invert_decreasing(exponent_b, 1 / mp.mpf(y))

    return JointSurvivalFn(
        surv_a, surv_b, surv_ab, thr_a, thr_b, label,
        log_cdf_ab=lambda z, zp: -exponent_ab(z, zp),
    )


def independent_frechet_joint() -> JointSurvivalFn:
    return joint_from_log_cdfs(
        lambda z: 1 / z, lambda z: 1 / z, lambda z, zp: 1 / z + 1 / zp,
        label="independent Frechet pair",
    )


def comonotone_frechet_joint() -> JointSurvivalFn:
    return joint_from_log_cdfs(
        lambda z: 1 / z, lambda z: 1 / z, lambda z, zp: 1 / min(z, zp),
        label="comonotone Frechet pair",
    )


def gaussian_frechet_joint(rho: float) -> JointSurvivalFn:
    """Bivariate normal dependence with correlation ``rho`` on unit Fréchet margins.

    The joint survival is the one-dimensional integral
    ``int_a^inf phi(u) P(V > b | U = u) du`` evaluated by quadrature.
    """
    if not -1 < rho < 1:
        raise DomainError("rho must lie in (-1, 1)")

    def level(z):
        # normal upper-tail quantile of the Frechet upper tail 1 - exp(-1/z)
        p_up = -mp.expm1(-1 / mp.mpf(z))
        return mp.sqrt(2) * mp.erfinv(1 - 2 * p_up)

    def surv(z):
        with mp.workdps(DPS):
            return -mp.expm1(-1 / mp.mpf(z))

    def surv_ab(z, zp):
        with mp.workdps(DPS):
            a, b = level(z), level(zp)
            r = mp.mpf(rho)
            s = mp.sqrt(1 - r**2)

            def integrand(u):
                return mp.npdf(u) * mp.erfc((b - r * u) / (s * mp.sqrt(2))) / 2

            return mp.quad(integrand, [a, a + 1, a + 4, mp.inf])

    def thr(y):
        return mp.mpf(y)

    return JointSurvivalFn(surv, surv, surv_ab, thr, thr, label=f"Gaussian rho={rho}")


def _pair_exponent(u, v, rho):
    """Exponent of one innovation pair at rates ``u = w/z``, ``v = w'/z'``.

    ``rho=None`` means independent innovations; otherwise Schlather with
    correlation ``rho`` (which reduces to ``max(u, v)`` at ``rho = 1``).
    """
    if u == 0 or v == 0:
        return u + v
    if rho is None:
        return u + v
    arg = 1 - 2 * (rho + 1) * u * v / (u + v) ** 2
    return (u + v) * (1 + mp.sqrt(max(arg, 0))) / 2


def _x_exponent(weights, r, rho):
    q = len(weights) - 1
    w = [mp.mpf(x) for x in weights]
    offsets = range(-q, r + 1)

    def expo(z, zp):
        # renormalise at working precision so the weights sum to one exactly
        norm = sum(w)
        total = mp.mpf(0)
        for d in offsets:
            wa = w[-d] if 0 <= -d <= q else mp.mpf(0)
            wb = w[r - d] if 0 <= r - d <= q else mp.mpf(0)
            total += _pair_exponent(wa / (norm * z), wb / (norm * zp), rho)
        return total

    return expo


def joint_cdf_builder(spec: ModelSpec, ctx: TailContext) -> JointSurvivalFn:
    """Exact joint law of ``(Y_n(x), Y_{n+r}(x'))`` for the worked model structures.

    The X-layer exponent sums one pair term per innovation time overlapping
    the two moving-maxima windows; the Z-layer adds ``max`` of the two power
    terms for a shared ``Z_n`` and their sum otherwise.
    """
    for loc in (ctx.x, ctx.xp):
        if loc.id not in spec.location_ids:
            raise DomainError(f"location {loc.id!r} not in model")
    a, ap = ctx.alpha_x, ctx.alpha_xp
    if spec.alpha[ctx.x.id] != a or spec.alpha[ctx.xp.id] != ap:
        raise DomainError("context alpha values disagree with the model")

    same = ctx.same_location
    if isinstance(spec.innovation, Schlather):
        rho = mp.mpf(spec.innovation.correlation.rho(ctx.h)) if not same else mp.mpf(1)
        family = "schlather"
    elif isinstance(spec.innovation, IndependentFrechet):
        rho = mp.mpf(1) if same else None
        family = "independent"
    else:
        raise UnsupportedModelError(f"no exact joint law for {spec.innovation!r}")

    x_expo = _x_exponent(spec.temporal_weights, ctx.r, rho)
    shared_z = ctx.r == 0 and (same or spec.z_coupling == COMMON_Z)
    ma, mb = mp.mpf(a), mp.mpf(ap)

    def z_expo(z, zp):
        ta, tb = z ** (-ma), zp ** (-mb)
        return max(ta, tb) if shared_z else ta + tb

    return joint_from_log_cdfs(
        lambda z: 1 / z + z ** (-ma),
        lambda z: 1 / z + z ** (-mb),
        lambda z, zp: x_expo(z, zp) + z_expo(z, zp),
        label=f"pMAX {family} {ctx.regime} r={ctx.r} alpha=({a}, {ap})",
    )


def x_layer_coefficients(spec: ModelSpec, ctx: TailContext) -> tuple[float, float]:
    """``(lambda_X, eta_X)`` of the moving-maxima layer alone.

    On unit Fréchet margins ``lambda_X = 2 - V_X(1, 1)``.  When it vanishes
    the two windows share no dependent innovation and the pair is exactly
    independent, so ``eta_X = 1/2``; otherwise ``eta_X = 1``.
    """
    same = ctx.same_location
    if isinstance(spec.innovation, Schlather):
        rho = mp.mpf(1) if same else mp.mpf(spec.innovation.correlation.rho(ctx.h))
    elif isinstance(spec.innovation, IndependentFrechet):
        rho = mp.mpf(1) if same else None
    else:
        raise UnsupportedModelError(f"no exact joint law for {spec.innovation!r}")
    with mp.workdps(DPS):
        lam = float(2 - _x_exponent(spec.temporal_weights, ctx.r, rho)(mp.mpf(1), mp.mpf(1)))
    lam = min(max(lam, 0.0), 1.0)
    if lam < 1e-15:
        lam = 0.0
    return lam, (1.0 if lam > 0 else 0.5)
