"""Evaluate continuous prediction systems against a random-guessing baseline.

Accuracy is measured by the mean absolute residual (MAR) and standardised
against random guessing (SA).  Competing systems are compared by
significance tests and Glass's delta, and the resulting preferences are
assembled into a partial order drawn as a Hasse diagram.
"""

from .accuracy import (
    AccuracyReport,
    PredictionRun,
    absolute_residuals,
    accuracy_report,
    mar,
    mdmre,
    mmre,
    pred,
    standardised_accuracy,
)
from .baseline import (
    BaselineDistribution,
    empirical_p,
    exact_expected_mar,
    histogram,
    quantile,
    random_guess_run,
    simulate,
)
from .effect import EffectSize, categorize, glass_delta
from .errors import (
    CycleError,
    DataError,
    DegenerateError,
    FoldError,
    MismatchError,
    PredevalError,
    ZeroActualError,
)
from .inference import TestResult, mann_whitney_u, wilcoxon_signed_rank
from .io import load_dataset, load_predictions, write_predictions
from .predictors import (
    Case,
    Dataset,
    PredictorSpec,
    fit,
    fit_stepwise,
    predict,
    select_cases_css,
    select_features_fss,
)
from .preference import (
    DecisionConfig,
    PairVerdict,
    PreferenceGraph,
    build_order,
    decide,
    emit_dot,
    evaluate_pair,
    guessing_verdicts,
    hasse_edges,
    q1_better_than_guessing,
)
from .report import BaselineSummary, RunTable, render_report
from .validation import StatsConfig, ValidationScheme, evaluate, run_validation

__version__ = "0.1.0"
