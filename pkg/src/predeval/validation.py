"""Cross-validation harness: turns (dataset, predictor, scheme) into prediction runs."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import baseline as _baseline
from .accuracy import DEFAULT_PRED_LEVEL, AccuracyReport, PredictionRun, accuracy_report
from .errors import DataError, FoldError
from .predictors import Dataset, PredictorSpec, fit, loocv_predictions

LOOCV = "loocv"
KFOLD = "repeated-kfold"
HOLDOUT = "holdout"


@dataclass(frozen=True)
class ValidationScheme:
    """How cases are held out.

    ``repeats`` applies to every kind: for LOOCV it only matters for
    randomised predictors such as ``guess``.
    """

    kind: str = LOOCV
    folds: int = 10
    repeats: int = 1
    holdout_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (LOOCV, KFOLD, HOLDOUT):
            raise ValueError(f"unknown validation scheme {self.kind!r}")
        if self.kind == KFOLD and self.folds < 2:
            raise ValueError("k-fold needs at least 2 folds")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ValueError("holdout_fraction must lie in (0, 1)")
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "ValidationScheme":
        """Parse ``loocv``, ``kfold:folds=5,repeats=2`` or ``holdout:fraction=0.3``."""
        kind, _, rest = text.partition(":")
        kind = {"kfold": KFOLD, "repeated-kfold": KFOLD, "loocv": LOOCV, "holdout": HOLDOUT}.get(kind.strip())
        if kind is None:
            raise ValueError(f"unknown validation scheme {text!r}")
        kwargs = {"kind": kind, "seed": seed}
        for item in filter(None, rest.split(",")):
            key, sep, value = item.partition("=")
            key = key.strip()
            if key in ("folds", "repeats", "seed"):
                kwargs[key] = int(value)
            elif key in ("fraction", "holdout_fraction"):
                kwargs["holdout_fraction"] = float(value)
            else:
                raise ValueError(f"bad scheme option {item!r}")
        return cls(**kwargs)


def _folds(n: int, scheme: ValidationScheme, repeat: int) -> list[np.ndarray]:
    if scheme.kind == LOOCV:
        return [np.array([t]) for t in range(n)]
    perm = np.random.default_rng([scheme.seed, repeat]).permutation(n)
    if scheme.kind == KFOLD:
        if scheme.folds > n:
            raise DataError(f"{scheme.folds} folds requested for {n} cases")
        # array_split gives the remainder to the first folds
        return [np.sort(f) for f in np.array_split(perm, scheme.folds)]
    n_test = int(round(n * scheme.holdout_fraction))
    if not 1 <= n_test <= n - 1:
        raise DataError(f"hold-out fraction {scheme.holdout_fraction} leaves no test or no training cases")
    return [np.sort(perm[:n_test])]


def _predict_fold(data: Dataset, spec: PredictorSpec, test: np.ndarray, rng, label):
    train_rows = np.setdiff1d(np.arange(data.n), test)
    try:
        fitted = fit(spec, data.subset(train_rows), rng=rng)
        return [fitted.predict(data.X[t]) for t in test]
    except (DataError, ValueError, np.linalg.LinAlgError) as exc:
        raise FoldError(label, exc) from exc


def run_validation(
    data: Dataset,
    spec: PredictorSpec,
    scheme: ValidationScheme = ValidationScheme(),
    workers: Optional[int] = None,
    fast: bool = True,
) -> PredictionRun:
    """Predict held-out cases under ``scheme``.

    Each repeat contributes the predicted cases in dataset order.  All
    fitting, normalisation and subset selection happen on training folds
    only.  ``fast`` allows closed-form leave-one-out paths where a predictor
    has one.
    """
    if data.n < 3:
        raise DataError(f"validation needs at least 3 cases, got {data.n}")
    actual, predicted, ids, repeats = [], [], [], []
    for rep in range(scheme.repeats):
        rng = np.random.default_rng([spec.seed, rep])
        preds = None
        if scheme.kind == LOOCV and fast:
            preds = loocv_predictions(spec, data, rng=rng)
        if preds is not None:
            rows = np.arange(data.n)
            values = np.asarray(preds, dtype=float)
        else:
            folds = _folds(data.n, scheme, rep)
            rngs = [np.random.default_rng([spec.seed, rep, i]) for i in range(len(folds))]
            jobs = [(data, spec, test, rngs[i], f"repeat {rep}, fold {i}") for i, test in enumerate(folds)]
            if workers and workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    results = list(pool.map(lambda j: _predict_fold(*j), jobs))
            else:
                results = [_predict_fold(*j) for j in jobs]
            rows = np.concatenate(folds)
            values = np.concatenate([np.asarray(r, dtype=float) for r in results])
            order = np.argsort(rows, kind="stable")
            rows, values = rows[order], values[order]
        actual.append(data.y[rows])
        predicted.append(values)
        ids.extend(data.ids[i] for i in rows)
        repeats.append(np.full(rows.size, rep))
    return PredictionRun(
        spec.label,
        np.concatenate(actual),
        np.concatenate(predicted),
        case_ids=tuple(ids),
        dataset=data.name,
        repeat=np.concatenate(repeats),
    )


@dataclass(frozen=True)
class StatsConfig:
    runs: int = _baseline.DEFAULT_RUNS
    seed: int = 0
    pred_level: float = DEFAULT_PRED_LEVEL
    alpha: float = 0.05


@dataclass(frozen=True)
class Evaluation:
    run: PredictionRun
    report: AccuracyReport
    baseline: _baseline.BaselineDistribution


def evaluation_actuals(run: PredictionRun) -> np.ndarray:
    """Outcomes of the cases predicted in the first repeat."""
    if run.repeat is None:
        return run.actual
    return run.actual[run.repeat == run.repeat[0]]


def evaluate(
    data: Dataset,
    spec: PredictorSpec,
    scheme: ValidationScheme = ValidationScheme(),
    config: StatsConfig = StatsConfig(),
    baseline: Optional[_baseline.BaselineDistribution] = None,
) -> Evaluation:
    """Validate ``spec`` and score it against random guessing on the same cases.

    Raises ``DegenerateError`` when guessing has zero MAR (all outcomes
    equal), since SA is then undefined.
    """
    run = run_validation(data, spec, scheme)
    if baseline is None:
        baseline = _baseline.simulate(evaluation_actuals(run), runs=config.runs, seed=config.seed)
    report = accuracy_report(run, baseline.mean_mar, config.pred_level)
    return Evaluation(run, report, baseline)
