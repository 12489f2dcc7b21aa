"""Glass's delta effect size and Cohen's size categories."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

from .errors import DegenerateError

NEGLIGIBLE = "negligible"
SMALL = "small"
MEDIUM = "medium"
LARGE = "large"

# lower bounds, checked from largest down; a value on a boundary takes the larger category
_THRESHOLDS = ((0.8, LARGE), (0.5, MEDIUM), (0.2, SMALL))

SMALL_SAMPLE = 20


class SmallSampleWarning(UserWarning):
    """Glass's delta is biased for small samples."""


@dataclass(frozen=True)
class EffectSize:
    delta: float
    magnitude: float
    improved: bool
    category: str
    control_id: str = "control"
    treatment_id: str = "treatment"


def categorize(magnitude: float) -> str:
    if magnitude < 0 or math.isnan(magnitude):
        raise ValueError(f"effect magnitude must be non-negative, got {magnitude}")
    for bound, name in _THRESHOLDS:
        if magnitude >= bound:
            return name
    return NEGLIGIBLE


def glass_delta(
    treatment_mar: float,
    control_mean_mar: float,
    control_sd: float,
    *,
    treatment_id: str = "treatment",
    control_id: str = "control",
    n_treatment: Optional[int] = None,
    n_control: Optional[int] = None,
) -> EffectSize:
    """Standardised difference of a treatment MAR from a control.

    The difference is scaled by the control's SD only.  A negative delta
    means the treatment has the smaller MAR, i.e. it is the improvement.
    """
    if not control_sd > 0:
        raise DegenerateError(
            f"control {control_id!r} has SD {control_sd:g}; Glass's delta is undefined"
        )
    sizes = [s for s in (n_treatment, n_control) if s is not None]
    if sizes and min(sizes) < SMALL_SAMPLE:
        warnings.warn(
            f"sample size {min(sizes)} < {SMALL_SAMPLE}: Glass's delta is biased for small samples",
            SmallSampleWarning,
            stacklevel=2,
        )
    delta = (treatment_mar - control_mean_mar) / control_sd
    magnitude = abs(delta)
    return EffectSize(
        delta=delta,
        magnitude=magnitude,
        improved=treatment_mar < control_mean_mar,
        category=categorize(magnitude),
        control_id=control_id,
        treatment_id=treatment_id,
    )
