"""Residual-based accuracy statistics for a single prediction run.

All statistics are computed internally as fractions; the MRE family and SA
are returned in percent, which is how effort-estimation tables report them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, DegenerateError, ZeroActualError

LOWER_IS_BETTER = "lower-is-better"
HIGHER_IS_BETTER = "higher-is-better"

DIRECTIONS = {
    "mar": LOWER_IS_BETTER,
    "mmre": LOWER_IS_BETTER,
    "mdmre": LOWER_IS_BETTER,
    "pred": HIGHER_IS_BETTER,
    "sa": HIGHER_IS_BETTER,
}

DEFAULT_PRED_LEVEL = 0.25


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PredictionRun:
    """Paired actual/predicted values of one prediction system.

    Pair order is significant: paired tests match runs position by position.
    ``case_ids`` and ``dataset`` are optional identity information used to
    decide whether two runs can be paired or compared at all.
    """

    system_id: str
    actual: np.ndarray
    predicted: np.ndarray
    case_ids: Optional[tuple] = None
    dataset: Optional[str] = None
    repeat: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        actual = _frozen_array(self.actual)
        predicted = _frozen_array(self.predicted)
        if actual.size < 1:
            raise DataError(f"run {self.system_id!r} is empty")
        if actual.shape != predicted.shape:
            raise DataError(
                f"run {self.system_id!r}: {actual.size} actuals but {predicted.size} predictions"
            )
        if not (np.all(np.isfinite(actual)) and np.all(np.isfinite(predicted))):
            raise DataError(f"run {self.system_id!r} contains non-finite values")
        object.__setattr__(self, "actual", actual)
        object.__setattr__(self, "predicted", predicted)
        if self.case_ids is not None:
            ids = tuple(self.case_ids)
            if len(ids) != actual.size:
                raise DataError(f"run {self.system_id!r}: case_ids length mismatch")
            object.__setattr__(self, "case_ids", ids)
        if self.repeat is not None:
            rep = np.array(self.repeat, dtype=int).reshape(-1)
            rep.setflags(write=False)
            object.__setattr__(self, "repeat", rep)

    @classmethod
    def from_pairs(cls, system_id: str, pairs: Sequence[tuple[float, float]], **kwargs) -> "PredictionRun":
        pairs = list(pairs)
        return cls(system_id, [p[0] for p in pairs], [p[1] for p in pairs], **kwargs)

    @property
    def n(self) -> int:
        return int(self.actual.size)

    @property
    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.actual.tolist(), self.predicted.tolist()))

    def scaled(self, factor: float) -> "PredictionRun":
        return PredictionRun(
            self.system_id,
            self.actual * factor,
            self.predicted * factor,
            case_ids=self.case_ids,
            dataset=self.dataset,
            repeat=self.repeat,
        )


@dataclass(frozen=True)
class AccuracyReport:
    """Accuracy statistics of one system. Missing statistics are ``None``."""

    system_id: str
    mar: float
    mmre: Optional[float] = None
    mdmre: Optional[float] = None
    pred_l: Optional[float] = None
    sa: Optional[float] = None
    pred_level: float = DEFAULT_PRED_LEVEL
    n: Optional[int] = None
    sd_abs_residuals: Optional[float] = None

    @property
    def direction(self) -> dict[str, str]:
        return dict(DIRECTIONS)


def absolute_residuals(run: PredictionRun) -> np.ndarray:
    return np.abs(run.actual - run.predicted)


def mar(run: PredictionRun) -> float:
    """Mean absolute residual."""
    return float(np.mean(absolute_residuals(run)))


def magnitude_relative_errors(run: PredictionRun) -> np.ndarray:
    """Per-case MRE as fractions. Requires every actual to be positive."""
    if np.any(run.actual <= 0):
        bad = int(np.flatnonzero(run.actual <= 0)[0])
        raise ZeroActualError(
            f"run {run.system_id!r}: actual at position {bad} is {run.actual[bad]:g}; "
            "relative errors need positive actuals"
        )
    return absolute_residuals(run) / run.actual


def mmre(run: PredictionRun) -> float:
    return float(np.mean(magnitude_relative_errors(run)) * 100.0)


def mdmre(run: PredictionRun) -> float:
    # np.median averages the two central values for even n
    return float(np.median(magnitude_relative_errors(run)) * 100.0)


def pred(run: PredictionRun, level: float = DEFAULT_PRED_LEVEL) -> float:
    """Fraction of cases whose MRE is at most ``level`` (e.g. 0.25)."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"pred level must lie in (0, 1), got {level}")
    return float(np.mean(magnitude_relative_errors(run) <= level))


def standardised_accuracy(mar_i: float, baseline_mean_mar: float) -> float:
    """Percentage improvement of ``mar_i`` over the mean MAR of random guessing.

    Zero means no better than guessing; negative values mean worse.
    """
    if baseline_mean_mar <= 0:
        raise DegenerateError(
            f"baseline mean MAR must be positive for SA, got {baseline_mean_mar:g}"
        )
    return (1.0 - mar_i / baseline_mean_mar) * 100.0


def accuracy_report(
    run: PredictionRun,
    baseline_mean_mar: Optional[float] = None,
    pred_level: float = DEFAULT_PRED_LEVEL,
) -> AccuracyReport:
    """All statistics for ``run``.

    The MRE family is left as ``None`` when some actual is not positive, and
    SA is only filled in when a baseline mean is supplied.
    """
    ares = absolute_residuals(run)
    mar_value = float(np.mean(ares))
    mmre_v = mdmre_v = pred_v = None
    if np.all(run.actual > 0):
        mmre_v, mdmre_v, pred_v = mmre(run), mdmre(run), pred(run, pred_level)
    sa_v = None
    if baseline_mean_mar is not None:
        sa_v = standardised_accuracy(mar_value, baseline_mean_mar)
    sd = float(np.std(ares, ddof=1)) if ares.size > 1 else 0.0
    return AccuracyReport(
        system_id=run.system_id,
        mar=mar_value,
        mmre=mmre_v,
        mdmre=mdmre_v,
        pred_l=pred_v,
        sa=sa_v,
        pred_level=pred_level,
        n=run.n,
        sd_abs_residuals=sd,
    )
