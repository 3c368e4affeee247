"""
Simulators for pMAX random fields and their building blocks.

A pMAX field is ``Y_n(x) = X_n(x) v Z_n(x)**(1/alpha(x))`` where ``X`` is a
moving-maxima filter of i.i.d. unit Fréchet innovation fields and ``Z`` is an
i.i.d. unit Fréchet sequence independent of ``X``.  Innovations are either
independent across locations or spatially dependent through the Schlather
max-stable model.
"""
from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np
from scipy.stats import norm

from .stats_core import (
    CorrelationModel,
    DomainError,
    GaussianSampler,
    NumericalError,
    RngStream,
    frechet_cdf,
    frechet_sample,
)

__all__ = [
    "SpecError",
    "TruncationError",
    "Location",
    "AlphaMap",
    "IndependentFrechet",
    "Schlather",
    "COMMON_Z",
    "INDEPENDENT_Z",
    "ModelSpec",
    "FieldSample",
    "SchlatherTruncation",
    "example_spec",
    "schlather_field",
    "schlather_fields",
    "simulate_innovations",
    "moving_max",
    "simulate_pmax",
    "lagged_pairs",
]

SCHLATHER_SCALE = math.sqrt(2.0 * math.pi)
DEFAULT_WEIGHTS = (2.0 / 3.0, 1.0 / 3.0)
COMMON_Z = "common"
INDEPENDENT_Z = "independent"


class SpecError(ValueError):
    """Invalid model specification."""


class TruncationError(NumericalError):
    """Spectral series did not meet its stopping rule within ``max_points``."""

    def __init__(self, message, achieved_bound):
        super().__init__(message)
        self.achieved_bound = achieved_bound


@dataclass(frozen=True)
class Location:
    id: str
    x1: float = 0.0
    x2: float = 0.0

    @property
    def coords(self) -> tuple[float, float]:
        return (self.x1, self.x2)

    def distance(self, other: "Location") -> float:
        return math.hypot(self.x1 - other.x1, self.x2 - other.x2)


class AlphaMap(Mapping):
    """Per-location power parameter; unknown ids raise :class:`SpecError`."""

    def __init__(self, values: Mapping[str, float]):
        self._values = {}
        for key, val in dict(values).items():
            val = float(val)
            if not (val > 0 and math.isfinite(val)):
                raise SpecError(f"alpha for location {key!r} must be positive, got {val}")
            self._values[str(key)] = val

    def __getitem__(self, key) -> float:
        key = key.id if isinstance(key, Location) else key
        try:
            return self._values[key]
        except KeyError:
            raise SpecError(f"no alpha value for location {key!r}") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __repr__(self):
        return f"AlphaMap({self._values!r})"


@dataclass(frozen=True)
class IndependentFrechet:
    """Innovations independent across locations (first worked example)."""


@dataclass(frozen=True)
class Schlather:
    """Schlather max-stable innovations with a powered exponential correlation."""

    correlation: CorrelationModel = field(default_factory=CorrelationModel)


Innovation = Union[IndependentFrechet, Schlather]


@dataclass(frozen=True)
class SchlatherTruncation:
    epsilon: float = 1e-4
    max_points: int = 100_000

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise SpecError("epsilon must lie in (0, 1)")
        if self.max_points < 1:
            raise SpecError("max_points must be at least 1")

    @property
    def bound(self) -> float:
        """Scaled Gaussian level exceeded with probability ``epsilon``."""
        return SCHLATHER_SCALE * float(norm.isf(self.epsilon))


@dataclass(frozen=True)
class ModelSpec:
    """Generative description of a pMAX field over a finite location set."""

    locations: tuple[Location, ...]
    alpha: AlphaMap
    innovation: Innovation = IndependentFrechet()
    temporal_weights: tuple[float, ...] = DEFAULT_WEIGHTS
    z_coupling: str = COMMON_Z
    truncation: SchlatherTruncation = SchlatherTruncation()

    def __post_init__(self):
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(self, "temporal_weights", tuple(float(w) for w in self.temporal_weights))
        if not isinstance(self.alpha, AlphaMap):
            object.__setattr__(self, "alpha", AlphaMap(self.alpha))
        if not self.locations:
            raise SpecError("at least one location is required")
        ids = [loc.id for loc in self.locations]
        if len(set(ids)) != len(ids):
            raise SpecError("location ids must be unique")
        for loc in self.locations:
            self.alpha[loc.id]
        w = np.asarray(self.temporal_weights)
        if w.size == 0 or np.any(w < 0) or not np.any(w > 0):
            raise SpecError("temporal weights must be non-negative with one positive entry")
        if abs(w.sum() - 1.0) > 1e-12:
            raise SpecError(f"temporal weights must sum to 1, got {float(w.sum())!r}")
        if self.z_coupling not in (COMMON_Z, INDEPENDENT_Z):
            raise SpecError(f"unknown z_coupling {self.z_coupling!r}")
        if not isinstance(self.innovation, (IndependentFrechet, Schlather)):
            raise SpecError(f"unknown innovation family {self.innovation!r}")

    @property
    def q(self) -> int:
        return len(self.temporal_weights) - 1

    @property
    def location_ids(self) -> list[str]:
        return [loc.id for loc in self.locations]

    def location(self, loc_id: str) -> Location:
        for loc in self.locations:
            if loc.id == loc_id:
                return loc
        raise SpecError(f"unknown location {loc_id!r}")

    def alphas(self) -> np.ndarray:
        return np.array([self.alpha[loc.id] for loc in self.locations])

    def coords(self) -> np.ndarray:
        return np.array([loc.coords for loc in self.locations], dtype=float)


def example_spec(example: int, alpha, locations=None, correlation=None) -> ModelSpec:
    """The two worked structures: 1 = independent innovations, 2 = Schlather.

    ``alpha`` is either a scalar applied to every location or a mapping.
    """
    if locations is None:
        locations = (Location("x"),)
    locations = tuple(locations)
    if not isinstance(alpha, Mapping):
        alpha = {loc.id: float(alpha) for loc in locations}
    if example == 1:
        innovation = IndependentFrechet()
    elif example == 2:
        innovation = Schlather(correlation or CorrelationModel())
    else:
        raise SpecError(f"unknown example structure {example!r}")
    return ModelSpec(locations=locations, alpha=AlphaMap(alpha), innovation=innovation)


@dataclass(frozen=True)
class FieldSample:
    """Panel of positive values, rows are time steps and columns locations."""

    values: np.ndarray
    location_ids: tuple[str, ...]
    layer: str
    spec: ModelSpec | None = None
    seed: int | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(self.location_ids):
            raise DomainError("values must be an (n_time, n_locations) matrix")
        if not np.all(np.isfinite(values) & (values > 0)):
            raise NumericalError(f"{self.layer} sample has non-positive or non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "location_ids", tuple(self.location_ids))

    @property
    def n_time(self) -> int:
        return self.values.shape[0]

    def column(self, loc) -> np.ndarray:
        loc_id = loc.id if isinstance(loc, Location) else loc
        try:
            return self.values[:, self.location_ids.index(loc_id)]
        except ValueError:
            raise DomainError(f"location {loc_id!r} not in sample") from None


def schlather_fields(
    locations: Sequence[Location],
    corr: CorrelationModel,
    trunc: SchlatherTruncation,
    rng: RngStream,
    size: int,
) -> np.ndarray:
    """``size`` independent Schlather field draws, shape ``(size, m)``.

    Each draw is ``max_i xi_i * max(0, c U_i(x))`` with ``xi_i = 1/Gamma_i``
    and ``c = sqrt(2 pi)``.  A draw stops once ``xi_i * B`` falls below its
    running minimum over locations, ``B`` being ``c`` times the standard
    normal ``1 - epsilon`` quantile.  Every step consumes random numbers
    for the whole batch so that two truncation levels share sample paths.
    """
    coords = np.array([loc.coords for loc in locations], dtype=float)
    if coords.size == 0:
        raise DomainError("at least one location is required")
    sampler = GaussianSampler(corr.matrix(coords))
    bound = trunc.bound
    out = np.zeros((size, len(locations)))
    gamma = np.zeros(size)
    active = np.ones(size, dtype=bool)
    for _ in range(trunc.max_points):
        gamma += rng.standard_exponential(size)
        u = sampler.draw(rng, size)
        xi = 1.0 / gamma
        cand = xi[:, None] * np.maximum(0.0, SCHLATHER_SCALE * u)
        np.maximum(out, np.where(active[:, None], cand, 0.0), out=out)
        active &= xi * bound >= out.min(axis=1)
        if not active.any():
            return out
    ratio = (bound / gamma[active]) / np.maximum(out[active].min(axis=1), 1e-300)
    raise TruncationError(
        f"{active.sum()} draws still open after {trunc.max_points} points",
        achieved_bound=float(ratio.max()),
    )


def schlather_field(locations, corr, trunc=SchlatherTruncation(), rng=None) -> np.ndarray:
    """A single Schlather field draw over ``locations``."""
    if rng is None:
        raise DomainError("an RngStream is required")
    return schlather_fields(locations, corr, trunc, rng, 1)[0]


def simulate_innovations(spec: ModelSpec, n_time: int, rng: RngStream) -> FieldSample:
    """Innovation field with ``n_time + q`` rows (``q`` warm-up rows first)."""
    if n_time < 1:
        raise DomainError("n_time must be at least 1")
    rows = n_time + spec.q
    m = len(spec.locations)
    if isinstance(spec.innovation, Schlather):
        values = schlather_fields(
            spec.locations, spec.innovation.correlation, spec.truncation, rng, rows
        )
    else:
        values = frechet_sample(rng, (rows, m))
    return FieldSample(values, spec.location_ids, layer="Xhat", spec=spec)


def moving_max(innovations: FieldSample, weights, n_time: int | None = None) -> FieldSample:
    """``X_n = max_i w_i Xhat_{n-i}``; consumes ``len(weights) - 1`` warm-up rows."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0 or np.any(w < 0):
        raise SpecError("weights must be a non-empty non-negative sequence")
    if abs(w.sum() - 1.0) > 1e-12:
        raise SpecError(f"weights must sum to 1, got {float(w.sum())!r}")
    q = w.size - 1
    xhat = innovations.values
    if n_time is None:
        n_time = xhat.shape[0] - q
    if n_time < 1 or xhat.shape[0] < n_time + q:
        raise DomainError(f"need {n_time + q} innovation rows, have {xhat.shape[0]}")
    out = np.zeros((n_time, xhat.shape[1]))
    for i, wi in enumerate(w):
        if wi > 0:
            np.maximum(out, wi * xhat[q - i : q - i + n_time], out=out)
    return FieldSample(out, innovations.location_ids, layer="X", spec=innovations.spec)


def _simulate_layers(spec: ModelSpec, n_time: int, rng: RngStream):
    x = moving_max(simulate_innovations(spec, n_time, rng), spec.temporal_weights, n_time)
    if spec.z_coupling == COMMON_Z:
        z = np.repeat(frechet_sample(rng, (n_time, 1)), len(spec.locations), axis=1)
    else:
        z = frechet_sample(rng, (n_time, len(spec.locations)))
    return x.values, z


def simulate_pmax(spec: ModelSpec, n_time: int, rng: RngStream) -> FieldSample:
    """Simulate ``Y_n(x) = X_n(x) v Z_n(x)**(1/alpha(x))`` for ``n_time`` steps."""
    x, z = _simulate_layers(spec, n_time, rng)
    y = np.maximum(x, z ** (1.0 / spec.alphas()))
    return FieldSample(y, spec.location_ids, layer="Y", spec=spec, seed=rng.seed)


def lagged_pairs(sample: FieldSample, r: int, x, xp, transform: bool = False) -> np.ndarray:
    """Pairs ``(Y_n(x), Y_{n+r}(x'))`` as an ``(n_time - r, 2)`` array.

    With ``transform=True`` both coordinates go through the standard Fréchet
    distribution function onto (0, 1)^2.
    """
    if r < 0 or r >= sample.n_time:
        raise DomainError(f"lag {r} outside [0, {sample.n_time})")
    a = sample.column(x)
    b = sample.column(xp)
    pairs = np.column_stack([a[: sample.n_time - r], b[r:]])
    return frechet_cdf(pairs) if transform else pairs
