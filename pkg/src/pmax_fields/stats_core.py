"""
Elementary distributions and random streams shared by the simulators.

The random number generator behind :class:`RngStream` is numpy's PCG64,
seeded through ``SeedSequence(seed, spawn_key=(stream_id,))``.  Two streams
with the same ``seed`` but different ``stream_id`` therefore draw from
statistically independent PCG64 states, and a given ``(seed, stream_id)``
reproduces the same draws on every run and platform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainError",
    "NumericalError",
    "RngStream",
    "EmpiricalCdf",
    "CorrelationModel",
    "GaussianSampler",
    "frechet_cdf",
    "frechet_quantile",
    "frechet_sample",
    "gaussian_vector",
    "percentile",
]

_JITTERS = (0.0, 1e-12, 1e-10, 1e-8)
_U64 = 2**64


class DomainError(ValueError):
    """Argument outside the domain of an operation."""


class NumericalError(ArithmeticError):
    """A numerical procedure failed (factorisation, precision loss, ...)."""


@dataclass
class RngStream:
    """Seedable, splittable random stream.

    Parameters
    ----------
    seed : int
        Master seed, unsigned 64-bit.
    stream_id : int
        Replicate index; distinct ids give independent streams.
    """

    seed: int
    stream_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (0 <= int(self.seed) < _U64) or not (0 <= int(self.stream_id) < _U64):
            raise DomainError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = int(self.seed)
        self.stream_id = int(self.stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def uniform(self, size=None):
        """Uniform draws on the open interval (0, 1)."""
        u = self.generator.random(size)
        # random() is on [0, 1); push exact zeros up by one ulp
        return np.maximum(u, np.nextafter(0.0, 1.0)) if size is not None else max(
            float(u), np.nextafter(0.0, 1.0)
        )

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def standard_exponential(self, size=None):
        return self.generator.standard_exponential(size)


def frechet_cdf(z):
    """Standard Fréchet distribution function ``exp(-1/z)``.

    Raises
    ------
    DomainError
        If any ``z <= 0``.
    """
    z_arr = np.asarray(z, dtype=float)
    if np.any(~(z_arr > 0)):
        raise DomainError("frechet_cdf requires z > 0")
    out = np.exp(-1.0 / z_arr)
    return float(out) if out.ndim == 0 else out


def frechet_quantile(p):
    """Inverse of :func:`frechet_cdf`, ``-1/log(p)`` for p in (0, 1)."""
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0) | (p_arr >= 1)):
        raise DomainError("frechet_quantile requires 0 < p < 1")
    out = -1.0 / np.log(p_arr)
    return float(out) if out.ndim == 0 else out


def frechet_sample(rng: RngStream, size=None):
    """Standard Fréchet draws by inverse transform ``-1/log(U)``."""
    u = rng.uniform(size)
    # U = 1 is impossible from uniform(); U = 0 was clamped above
    return -1.0 / np.log(u)


class EmpiricalCdf:
    """Right-continuous empirical distribution function of a sample."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            raise DomainError("empirical CDF of an empty sample")
        self.sorted_values = np.sort(values)
        self.n = values.size

    def __call__(self, y):
        return self.evaluate(y)

    def evaluate(self, y):
        counts = np.searchsorted(self.sorted_values, y, side="right")
        out = counts / self.n
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class CorrelationModel:
    """Powered exponential correlation ``rho(h) = exp(-(h/c2)**nu)``."""

    c2: float = 1.0
    nu: float = 1.0

    def __post_init__(self):
        if not self.c2 > 0:
            raise DomainError("range parameter c2 must be positive")
        if not 0 < self.nu <= 2:
            raise DomainError("smoothness nu must lie in (0, 2]")

    def rho(self, h):
        h = np.asarray(h, dtype=float)
        if np.any(h < 0):
            raise DomainError("distance must be non-negative")
        out = np.exp(-((h / self.c2) ** self.nu))
        return float(out) if out.ndim == 0 else out

    def matrix(self, coords) -> np.ndarray:
        """Correlation matrix for an (m, 2) array of coordinates."""
        coords = np.asarray(coords, dtype=float).reshape(-1, 2)
        diff = coords[:, None, :] - coords[None, :, :]
        return self.rho(np.sqrt((diff**2).sum(axis=-1)))


class GaussianSampler:
    """Zero-mean Gaussian vectors with a prescribed correlation matrix.

    Coordinates whose mutual correlation is exactly one are merged and share
    a single normal draw, so comonotone components come out identical.  The
    remaining matrix is Cholesky-factorised, adding diagonal jitter of
    1e-12, 1e-10 and 1e-8 in turn if the plain factorisation fails.
    """

    def __init__(self, corr):
        corr = np.atleast_2d(np.asarray(corr, dtype=float))
        m = corr.shape[0]
        if corr.shape != (m, m):
            raise DomainError("correlation matrix must be square")
        if not np.allclose(corr, corr.T, atol=1e-12, rtol=0):
            raise DomainError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(corr), 1.0, atol=1e-12, rtol=0):
            raise DomainError("correlation matrix must have unit diagonal")
        if np.any(np.abs(corr) > 1.0 + 1e-12):
            raise DomainError("correlations must lie in [-1, 1]")

        group = np.full(m, -1)
        reps = []
        for i in range(m):
            if group[i] >= 0:
                continue
            group[i] = len(reps)
            same = (corr[i] >= 1.0) & (group < 0)
            group[same] = len(reps)
            reps.append(i)
        self.groups = group
        reduced = corr[np.ix_(reps, reps)]

        self.jitter = None
        for jitter in _JITTERS:
            try:
                self.factor = np.linalg.cholesky(reduced + jitter * np.eye(len(reps)))
            except np.linalg.LinAlgError:
                continue
            self.jitter = jitter
            break
        if self.jitter is None:
            eig = np.linalg.eigvalsh(reduced)
            cond = np.inf if eig[0] <= 0 else eig[-1] / eig[0]
            raise NumericalError(
                f"Cholesky failed after jitter {_JITTERS[-1]:g}; "
                f"eigenvalue range [{eig[0]:.3e}, {eig[-1]:.3e}], condition {cond:.3e}"
            )

    @property
    def dim(self) -> int:
        return self.groups.size

    def draw(self, rng: RngStream, size=None) -> np.ndarray:
        """One vector, or ``size`` rows of vectors, shape ``(size, m)``."""
        k = self.factor.shape[0]
        n = 1 if size is None else int(size)
        z = rng.standard_normal((n, k)) @ self.factor.T
        out = z[:, self.groups]
        return out[0] if size is None else out


def gaussian_vector(rng: RngStream, corr, size=None) -> np.ndarray:
    """Draw from N(0, corr); see :class:`GaussianSampler`."""
    return GaussianSampler(corr).draw(rng, size)


def percentile(values, k: float) -> float:
    """Order-statistic percentile: the ``ceil(k n / 100)``-th smallest value."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise DomainError("percentile of an empty sequence")
    if not 0 < k < 100:
        raise DomainError("percentile level must lie in (0, 100)")
    n = values.size
    idx = min(max(math.ceil(k * n / 100.0), 1), n)
    return float(np.partition(values, idx - 1)[idx - 1])
