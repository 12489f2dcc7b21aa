"""Random-guessing baseline.

Random guessing predicts each target case with the actual outcome of another
case drawn uniformly from the remaining n - 1.  Repeating that over many runs
gives the distribution of MAR that any real predictor must beat.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataError

DEFAULT_RUNS = 1000
DEFAULT_BINS = 20

# Runs are drawn in fixed-size chunks, each with its own stream derived from
# (seed, chunk index), so the result never depends on how chunks are scheduled.
_CHUNK = 256


def _outcomes(sample) -> np.ndarray:
    y = np.array(sample, dtype=float).reshape(-1)
    if y.size < 2:
        raise DataError("random guessing needs at least two outcomes")
    if not np.all(np.isfinite(y)):
        raise DataError("outcomes must be finite")
    return y


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BaselineDistribution:
    """Monte Carlo characterisation of random guessing on one evaluation set.

    Attributes:
        runs: Number of guessing runs.
        mar_samples: One MAR per run, in run order.
        mean_mar: Mean of ``mar_samples``; the denominator of SA.
        sd_abs_residuals: SD of the per-case absolute residuals pooled over
            all runs; the control SD used for Glass's delta against guessing.
        seed: Master seed.
        actuals: The outcomes guessing was run on.
        mmre_samples: One MMRE (percent) per run, or ``None`` when some
            outcome is not positive.
    """

    runs: int
    mar_samples: np.ndarray
    mean_mar: float
    sd_abs_residuals: float
    seed: int
    actuals: np.ndarray
    mmre_samples: Optional[np.ndarray] = None
    sorted_mar: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "sorted_mar", _frozen(np.sort(self.mar_samples)))

    @property
    def n(self) -> int:
        return int(self.actuals.size)

    @property
    def median_mar(self) -> float:
        return quantile(self, 0.5)


def _guess_indices(rng: np.random.Generator, n: int, runs: int) -> np.ndarray:
    # uniform over the n - 1 indices other than the target
    r = rng.integers(0, n - 1, size=(runs, n))
    r += r >= np.arange(n)
    return r


def random_guess_run(sample: Sequence[float], rng: np.random.Generator) -> float:
    """MAR of a single random-guessing run over ``sample``."""
    y = _outcomes(sample)
    r = _guess_indices(rng, y.size, 1)[0]
    return float(np.mean(np.abs(y - y[r])))


def _simulate_chunk(y: np.ndarray, seed: int, chunk: int, size: int):
    rng = np.random.default_rng([seed, chunk])
    guesses = y[_guess_indices(rng, y.size, size)]
    ares = np.abs(y - guesses)
    mars = ares.mean(axis=1)
    mmres = (ares / y).mean(axis=1) * 100.0 if np.all(y > 0) else None
    mean = float(ares.mean())
    m2 = float(((ares - mean) ** 2).sum())
    return mars, mmres, ares.size, mean, m2


def simulate(
    sample: Sequence[float],
    runs: int = DEFAULT_RUNS,
    seed: int = 0,
    workers: Optional[int] = None,
) -> BaselineDistribution:
    """Run random guessing ``runs`` times.

    Output is identical for a fixed ``(sample, runs, seed)`` whatever the
    value of ``workers``.
    """
    y = _outcomes(sample)
    if runs < 1:
        raise ValueError(f"runs must be at least 1, got {runs}")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    sizes = [min(_CHUNK, runs - start) for start in range(0, runs, _CHUNK)]
    jobs = [(y, seed, i, size) for i, size in enumerate(sizes)]
    if workers and workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _simulate_chunk(*job), jobs))
    else:
        parts = [_simulate_chunk(*job) for job in jobs]

    # pooled SD via pairwise merge of (count, mean, M2) in chunk order
    count, mean, m2 = 0, 0.0, 0.0
    for _, _, c, m, s in parts:
        delta = m - mean
        total = count + c
        mean += delta * c / total
        m2 += s + delta * delta * count * c / total
        count = total
    mars = np.concatenate([p[0] for p in parts])
    mmres = None if parts[0][1] is None else np.concatenate([p[1] for p in parts])
    return BaselineDistribution(
        runs=runs,
        mar_samples=_frozen(mars),
        mean_mar=float(np.mean(mars)),
        sd_abs_residuals=float(np.sqrt(m2 / count)),
        seed=seed,
        actuals=_frozen(y.copy()),
        mmre_samples=None if mmres is None else _frozen(mmres),
    )


def exact_expected_mar(sample: Sequence[float]) -> tuple[float, float]:
    """Limit of the Monte Carlo baseline as runs grow.

    Returns the expected MAR (mean of |y_t - y_r| over all ordered pairs
    t != r) and the population SD of those pairwise absolute differences.
    """
    y = _outcomes(sample)
    n = y.size
    diffs = np.abs(y[:, None] - y[None, :])[~np.eye(n, dtype=bool)]
    return float(diffs.mean()), float(diffs.std())


def quantile(dist: BaselineDistribution, q: float) -> float:
    """Linearly interpolated quantile of the per-run MARs."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile must lie in (0, 1), got {q}")
    return float(np.quantile(dist.sorted_mar, q))


def mmre_quantile(dist: BaselineDistribution, q: float) -> Optional[float]:
    if dist.mmre_samples is None:
        return None
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile must lie in (0, 1), got {q}")
    return float(np.quantile(dist.mmre_samples, q))


def empirical_p(dist: BaselineDistribution, observed_mar: float) -> float:
    """Chance that guessing does at least as well as ``observed_mar``.

    Uses the (count + 1) / (runs + 1) estimator so the result is never zero.
    """
    count = int(np.searchsorted(dist.sorted_mar, observed_mar, side="right"))
    return (count + 1) / (dist.runs + 1)


def histogram(dist: BaselineDistribution, bins: int = DEFAULT_BINS) -> list[tuple[float, float, int]]:
    """``(lower, upper, count)`` rows over the per-run MARs."""
    if bins < 1:
        raise ValueError("bins must be at least 1")
    counts, edges = np.histogram(dist.mar_samples, bins=bins)
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(bins)]


def write_histogram_csv(dist: BaselineDistribution, path_or_file, bins: int = DEFAULT_BINS) -> None:
    rows = histogram(dist, bins)

    def _write(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_lower", "bin_upper", "count"])
        for lo, hi, c in rows:
            writer.writerow([repr(lo), repr(hi), c])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            _write(fh)
