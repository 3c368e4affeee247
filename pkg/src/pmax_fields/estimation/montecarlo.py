"""
Monte Carlo study of the alpha estimator over (alpha, n, percentile) cells.

Replicate ``r`` of cell ``c`` draws from ``RngStream(master_seed, c * R + r)``
and the per-cell aggregation runs in replicate order, so the report does not
depend on how replicates were spread over worker processes.
"""
from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..fields import example_spec, simulate_pmax
from ..stats_core import DomainError, RngStream
from .alpha import EstimationError, GridSpec, estimate_alpha

__all__ = [
    "DEFAULT_ALPHAS",
    "DEFAULT_SAMPLE_SIZES",
    "DEFAULT_PERCENTILES",
    "CSV_HEADER",
    "SD_CONVENTION",
    "McConfig",
    "McRow",
    "McReport",
    "simulate_location_sample",
    "mc_study",
]

DEFAULT_ALPHAS = (0.1, 0.5, 1.0, 1.5, 2.0)
DEFAULT_SAMPLE_SIZES = (100, 500, 1000, 5000)
DEFAULT_PERCENTILES = (95.0, 75.0)
MAX_FAILURE_SHARE = 0.01
SD_CONVENTION = "sd uses the R-1 denominator; rmse = sqrt(mean((estimate - alpha)^2))"
CSV_HEADER = ("alpha", "n", "percentile", "mean", "bias", "sd", "rmse", "failures")


@dataclass(frozen=True)
class McConfig:
    alphas: tuple = DEFAULT_ALPHAS
    sample_sizes: tuple = DEFAULT_SAMPLE_SIZES
    replicates: int = 1000
    percentiles: tuple = DEFAULT_PERCENTILES
    example: int = 1
    master_seed: int = 0
    grid_start: float = 1.1

    def __post_init__(self):
        for name in ("alphas", "sample_sizes", "percentiles"):
            vals = tuple(getattr(self, name))
            if not vals or any(not v > 0 for v in vals):
                raise DomainError(f"{name} must be a non-empty list of positive values")
            object.__setattr__(self, name, vals)
        if any(int(n) != n for n in self.sample_sizes):
            raise DomainError("sample sizes must be integers")
        if self.replicates < 2:
            raise DomainError("need at least 2 replicates")
        if self.example not in (1, 2):
            raise DomainError("example must be 1 or 2")

    def cells(self) -> list[tuple[float, int, float]]:
        return [
            (float(a), int(n), float(k))
            for a, n, k in itertools.product(self.alphas, self.sample_sizes, self.percentiles)
        ]


@dataclass(frozen=True)
class McRow:
    alpha: float
    n: int
    percentile: float
    mean: float
    bias: float
    sd: float
    rmse: float
    failures: int
    replicates: int

    @property
    def failed(self) -> bool:
        return self.failures > MAX_FAILURE_SHARE * self.replicates


@dataclass
class McReport:
    rows: list
    config: McConfig
    header_note: str = SD_CONVENTION
    estimates: dict = field(default_factory=dict, repr=False)

    def row(self, alpha, n, percentile) -> McRow:
        for row in self.rows:
            if (row.alpha, row.n, row.percentile) == (alpha, n, percentile):
                return row
        raise KeyError((alpha, n, percentile))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row in self.rows:
                writer.writerow([
                    f"{row.alpha:.10g}",
                    row.n,
                    f"{row.percentile:.10g}",
                    *(f"{v:.10g}" for v in (row.mean, row.bias, row.sd, row.rmse)),
                    row.failures,
                ])


def simulate_location_sample(example: int, alpha: float, n: int, rng: RngStream) -> np.ndarray:
    """``n`` consecutive values of the pMAX field at a single location."""
    spec = example_spec(example, alpha)
    return simulate_pmax(spec, n, rng).values[:, 0]


def _run_chunk(args):
    example, alpha, n, k, start, master_seed, stream_ids = args
    out = []
    grid = GridSpec(k=k, start=start)
    for sid in stream_ids:
        sample = simulate_location_sample(example, alpha, n, RngStream(master_seed, sid))
        try:
            out.append(estimate_alpha(sample, grid).value)
        except EstimationError:
            out.append(math.nan)
    return out


def _aggregate(alpha, n, k, estimates) -> McRow:
    est = np.asarray(estimates, dtype=float)
    ok = est[np.isfinite(est)]
    failures = int(est.size - ok.size)
    row_failed = failures > MAX_FAILURE_SHARE * est.size or ok.size < 2
    if row_failed:
        mean = bias = sd = rmse = math.nan
    else:
        mean = float(np.mean(ok))
        bias = mean - alpha
        sd = float(np.std(ok, ddof=1))
        rmse = float(np.sqrt(np.mean((ok - alpha) ** 2)))
    return McRow(alpha, n, k, mean, bias, sd, rmse, failures, int(est.size))


def mc_study(config: McConfig, workers: int = 1, chunk_size: int = 50) -> McReport:
    """Run every cell of ``config`` and aggregate mean, bias, sd and RMSE."""
    R = config.replicates
    jobs, owners = [], []
    for cell_index, (alpha, n, k) in enumerate(config.cells()):
        ids = range(cell_index * R, (cell_index + 1) * R)
        for lo in range(0, R, chunk_size):
            jobs.append((config.example, alpha, n, k, config.grid_start,
                         config.master_seed, list(ids[lo:lo + chunk_size])))
            owners.append(cell_index)

    if workers <= 1:
        results = [_run_chunk(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, jobs))

    per_cell = {i: [] for i in range(len(config.cells()))}
    for owner, chunk in zip(owners, results):
        per_cell[owner].extend(chunk)
    rows, estimates = [], {}
    for i, (alpha, n, k) in enumerate(config.cells()):
        rows.append(_aggregate(alpha, n, k, per_cell[i]))
        estimates[(alpha, n, k)] = np.asarray(per_cell[i])
    return McReport(rows, config, estimates=estimates)
