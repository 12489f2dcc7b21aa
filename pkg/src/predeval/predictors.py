"""Prediction systems used to re-enact effort-estimation studies.

Estimation by analogy (EBA) is k-nearest-neighbour regression on min-max
normalised features with inverse-distance weighting.  Its two refinements
search, by leave-one-out error on the training set, for a better feature
subset (FSS) and then a better set of donor cases (CSS).  Stepwise regression
is forward-selected ordinary least squares.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import DataError

KINDS = ("mean", "median", "guess", "eba", "eba_fss", "eba_css", "stepwise")
INVERSE_DISTANCE = "inverse-distance"
UNIFORM = "uniform"

_LABELS = {
    "mean": "Mean",
    "median": "Median",
    "guess": "Guess",
    "eba": "EBA",
    "eba_fss": "EBA+",
    "eba_css": "EBA++",
    "stepwise": "SWR",
}


class SingularDesignWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Case:
    id: object
    features: tuple
    outcome: float


@dataclass(frozen=True, eq=False)
class Dataset:
    """Cases with numeric features and a positive outcome."""

    name: str
    ids: tuple
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if y.size > 1 or X.size == 1 else X.reshape(1, -1)
        if X.ndim != 2 or X.shape[0] != y.size:
            raise DataError(f"dataset {self.name!r}: {X.shape[0]} feature rows but {y.size} outcomes")
        ids = tuple(self.ids) if self.ids is not None else tuple(range(1, y.size + 1))
        if len(ids) != y.size:
            raise DataError(f"dataset {self.name!r}: {len(ids)} ids for {y.size} cases")
        if len(set(ids)) != len(ids):
            raise DataError(f"dataset {self.name!r}: case ids are not unique")
        names = tuple(self.feature_names) if self.feature_names is not None else tuple(
            f"x{i + 1}" for i in range(X.shape[1])
        )
        if len(names) != X.shape[1]:
            raise DataError(f"dataset {self.name!r}: {len(names)} names for {X.shape[1]} features")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError(f"dataset {self.name!r} contains non-finite values")
        if np.any(y <= 0):
            raise DataError(f"dataset {self.name!r}: outcomes must be positive")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "feature_names", names)

    @classmethod
    def from_cases(cls, name: str, cases: Sequence[Case], feature_names: Optional[Sequence[str]] = None) -> "Dataset":
        if not cases:
            raise DataError("no cases")
        width = {len(c.features) for c in cases}
        if len(width) != 1:
            raise DataError("cases have differing numbers of features")
        return cls(
            name,
            tuple(c.id for c in cases),
            np.array([c.features for c in cases], dtype=float).reshape(len(cases), width.pop()),
            [c.outcome for c in cases],
            feature_names,
        )

    @property
    def n(self) -> int:
        return int(self.y.size)

    @property
    def n_features(self) -> int:
        return int(self.X.shape[1])

    @property
    def cases(self) -> list[Case]:
        return [Case(i, tuple(row), float(out)) for i, row, out in zip(self.ids, self.X.tolist(), self.y)]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.name, tuple(self.ids[i] for i in rows), self.X[rows], self.y[rows], self.feature_names)

    def with_outcome(self, index: int, value: float) -> "Dataset":
        y = self.y.copy()
        y[index] = value
        return Dataset(self.name, self.ids, self.X, y, self.feature_names)


@dataclass(frozen=True)
class PredictorSpec:
    """Which predictor to build and how.

    ``greedy`` forces greedy forward feature selection even when exhaustive
    search would be feasible.  ``css_on_fss`` runs case selection on the
    FSS-selected features, which is what EBA++ means.
    """

    kind: str
    k: int = 2
    weighting: str = INVERSE_DISTANCE
    seed: int = 0
    alpha_in: float = 0.05
    floor: float = 1.0
    epsilon: float = 1e-9
    exhaustive_limit: int = 16
    greedy: bool = False
    css_on_fss: bool = True
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown predictor kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.weighting not in (INVERSE_DISTANCE, UNIFORM):
            raise ValueError(f"unknown weighting {self.weighting!r}")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        base = _LABELS[self.kind]
        return f"{base}(k={self.k})" if self.kind.startswith("eba") else base

    @classmethod
    def parse(cls, text: str) -> "PredictorSpec":
        """Parse ``kind[:key=value,...]``, e.g. ``eba_fss:k=2,greedy=true``."""
        kind, _, rest = text.partition(":")
        kwargs: dict = {}
        types = {"k": int, "seed": int, "exhaustive_limit": int, "alpha_in": float,
                 "floor": float, "epsilon": float, "weighting": str, "name": str,
                 "greedy": _parse_bool, "css_on_fss": _parse_bool}
        for item in filter(None, rest.split(",")):
            key, sep, value = item.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or key not in types:
                raise ValueError(f"bad predictor option {item!r}")
            kwargs[key] = types[key](value.strip())
        return cls(kind.strip(), **kwargs)


def _parse_bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# -- shared nearest-neighbour arithmetic -------------------------------------

def _ranges(X: np.ndarray) -> np.ndarray:
    return X.max(axis=0) - X.min(axis=0)


def _sq_dist_to(target: np.ndarray, donors: np.ndarray, ranges: np.ndarray, features) -> np.ndarray:
    out = np.zeros(donors.shape[0])
    for f in features:
        if ranges[f] > 0:
            out += ((target[f] - donors[:, f]) / ranges[f]) ** 2
    return out


def _combine(dist: np.ndarray, outcomes: np.ndarray, weighting: str, eps: float) -> float:
    if weighting == UNIFORM:
        return float(np.mean(outcomes))
    w = 1.0 / (dist + eps)
    return float(np.sum(w * outcomes) / np.sum(w))


def _knn_rows(dist: np.ndarray, y: np.ndarray, k: int, weighting: str, eps: float) -> np.ndarray:
    """Row-wise kNN estimates from a distance matrix (self excluded via inf)."""
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    d = np.take_along_axis(dist, order, axis=1)
    yy = y[order]
    if weighting == UNIFORM:
        return yy.mean(axis=1)
    w = 1.0 / (d + eps)
    return (w * yy).sum(axis=1) / w.sum(axis=1)


def _feature_sq_dists(X: np.ndarray, ranges: np.ndarray) -> np.ndarray:
    """Per-feature squared normalised differences, shape (f, n, n)."""
    n, f = X.shape
    out = np.zeros((f, n, n))
    for j in range(f):
        if ranges[j] > 0:
            out[j] = ((X[:, j][:, None] - X[:, j][None, :]) / ranges[j]) ** 2
    return out


def _loo_sar(sq: np.ndarray, y: np.ndarray, k: int, weighting: str, eps: float) -> float:
    dist = np.sqrt(sq)
    np.fill_diagonal(dist, np.inf)
    return float(np.sum(np.abs(y - _knn_rows(dist, y, k, weighting, eps))))


# -- fitted predictors --------------------------------------------------------

@dataclass(frozen=True)
class ConstantPredictor:
    kind: str
    value: float

    def predict(self, x) -> float:
        return self.value


@dataclass
class GuessPredictor:
    """Predicts the outcome of a uniformly drawn training case.

    Holds generator state, so a single instance must not be shared between
    threads.
    """

    outcomes: np.ndarray
    rng: np.random.Generator
    kind: str = "guess"

    def predict(self, x) -> float:
        return float(self.outcomes[self.rng.integers(self.outcomes.size)])


@dataclass(frozen=True, eq=False)
class AnalogyPredictor:
    """k-NN over the donor cases using the selected features.

    Normalisation ranges come from the whole training split, donors may be a
    subset of it after case selection.
    """

    kind: str
    donors_X: np.ndarray
    donors_y: np.ndarray
    ranges: np.ndarray
    features: tuple
    cases: tuple
    k: int
    weighting: str
    epsilon: float
    n_features: int

    def predict(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {x.size}")
        dist = np.sqrt(_sq_dist_to(x, self.donors_X, self.ranges, self.features))
        order = np.argsort(dist, kind="stable")[: self.k]
        return _combine(dist[order], self.donors_y[order], self.weighting, self.epsilon)


@dataclass(frozen=True)
class StepwiseModel:
    features: tuple
    intercept: float
    coefficients: tuple
    feature_names: tuple = ()


@dataclass(frozen=True)
class StepwisePredictor:
    model: StepwiseModel
    floor: float
    n_features: int
    kind: str = "stepwise"

    def predict(self, x) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.n_features:
            raise DataError(f"expected {self.n_features} features, got {x.size}")
        value = self.model.intercept + sum(c * x[f] for f, c in zip(self.model.features, self.model.coefficients))
        return max(float(value), self.floor)


# -- selection -----------------------------------------------------------------

def loocv_sar(train: Dataset, spec: PredictorSpec, features=None, cases=None) -> float:
    """Leave-one-out sum of absolute residuals of EBA over ``train``.

    This is the objective both subset searches minimise.  Normalisation is
    fixed over the whole of ``train``; ``cases`` restricts the evaluated
    cases, which are also the only donors.
    """
    features = tuple(range(train.n_features)) if features is None else tuple(features)
    rows = np.arange(train.n) if cases is None else np.asarray(cases, dtype=int)
    ranges = _ranges(train.X)
    X = train.X[rows]
    sq = np.zeros((rows.size, rows.size))
    for f in features:
        if ranges[f] > 0:
            sq += ((X[:, f][:, None] - X[:, f][None, :]) / ranges[f]) ** 2
    return _loo_sar(sq, train.y[rows], spec.k, spec.weighting, spec.epsilon)


def _better(candidate: float, incumbent: float) -> bool:
    if math.isinf(incumbent):
        return candidate < incumbent
    return candidate < incumbent - 1e-9 * max(abs(incumbent), 1.0)


def select_features_fss(train: Dataset, base_spec: PredictorSpec) -> tuple:
    """Feature subset with the smallest LOOCV SAR of the base EBA.

    Exhaustive over every non-empty subset when the feature count is at most
    ``base_spec.exhaustive_limit`` (and ``greedy`` is off), otherwise greedy
    forward selection.  Among equal scores the lexicographically smallest
    subset wins.  Never returns a subset worse than all features.
    """
    f = train.n_features
    if f < 1:
        raise DataError("feature selection needs at least one feature")
    if train.n < base_spec.k + 1:
        raise DataError(f"need more than k={base_spec.k} training cases, got {train.n}")
    sq = _feature_sq_dists(train.X, _ranges(train.X))
    y = train.y
    score = lambda acc: _loo_sar(acc, y, base_spec.k, base_spec.weighting, base_spec.epsilon)

    if f <= base_spec.exhaustive_limit and not base_spec.greedy:
        best = [math.inf, None]

        # depth-first in lexicographic order of index tuples, so the first
        # subset reaching a score is the lexicographically smallest one
        def walk(start: int, chosen: list, acc: np.ndarray):
            for j in range(start, f):
                nxt = acc + sq[j]
                chosen.append(j)
                s = score(nxt)
                if _better(s, best[0]):
                    best[0], best[1] = s, tuple(chosen)
                walk(j + 1, chosen, nxt)
                chosen.pop()

        walk(0, [], np.zeros_like(sq[0]))
        return best[1]

    chosen: list = []
    acc = np.zeros_like(sq[0])
    current = math.inf
    while len(chosen) < f:
        trial = [(score(acc + sq[j]), j) for j in range(f) if j not in chosen]
        s, j = min(trial, key=lambda t: (t[0], t[1]))
        if not _better(s, current):
            break
        chosen.append(j)
        acc = acc + sq[j]
        current = s
    everything = score(sq.sum(axis=0))
    if _better(everything, current):
        return tuple(range(f))
    return tuple(sorted(chosen))


def select_cases_css(train: Dataset, base_spec: PredictorSpec, features=None) -> tuple:
    """Greedy backward elimination of donor cases.

    Repeatedly drops the case whose removal most lowers the LOOCV SAR over
    the remaining cases, until nothing improves or fewer than k + 2 cases
    would remain.  Ties go to the case that comes first in ``train``.
    Returns the retained row positions.
    """
    k, weighting, eps = base_spec.k, base_spec.weighting, base_spec.epsilon
    n = train.n
    if n <= k + 2:
        return tuple(range(n))
    features = tuple(range(train.n_features)) if features is None else tuple(features)
    ranges = _ranges(train.X)
    sq = np.zeros((n, n))
    for f in features:
        if ranges[f] > 0:
            sq += ((train.X[:, f][:, None] - train.X[:, f][None, :]) / ranges[f]) ** 2
    dist = np.sqrt(sq)
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")[:, :-1]
    y = train.y
    active = np.ones(n, dtype=bool)

    def estimate(i, donors):
        return _combine(dist[i, donors], y[donors], weighting, eps)

    while active.sum() - 1 >= k + 2:
        err = np.zeros(n)
        gain = np.zeros(n)
        for i in np.flatnonzero(active):
            nb = order[i][active[order[i]]][: k + 1]
            top, spare = nb[:k], nb[k]
            err[i] = abs(y[i] - estimate(i, top))
            for pos, j in enumerate(top):
                alt = np.concatenate([np.delete(top, pos), [spare]])
                gain[j] += abs(y[i] - estimate(i, alt)) - err[i]
        sar = err[active].sum()
        candidates = np.flatnonzero(active)
        after = sar - err[candidates] + gain[candidates]
        pick = int(np.argmin(after))
        if not _better(float(after[pick]), float(sar)):
            break
        active[candidates[pick]] = False
    return tuple(int(i) for i in np.flatnonzero(active))


def fit_stepwise(train: Dataset, alpha_in: float = 0.05) -> StepwiseModel:
    """Forward stepwise OLS.

    Starting from the intercept-only model, adds the candidate whose
    coefficient has the smallest t-test p-value while that p-value is below
    ``alpha_in``.  Constant features, and candidates that would make the
    design singular, are skipped with a warning.
    """
    X, y = train.X, train.y
    n, p = X.shape
    if n < 3:
        raise DataError(f"stepwise regression needs at least 3 cases, got {n}")
    if p < 1:
        raise DataError("stepwise regression needs at least one candidate feature")
    candidates = []
    for j in range(p):
        if np.ptp(X[:, j]) > 0:
            candidates.append(j)
        else:
            warnings.warn(f"feature {train.feature_names[j]!r} is constant; skipped", SingularDesignWarning, stacklevel=2)

    def ols(cols):
        A = np.column_stack([np.ones(n)] + [X[:, c] for c in cols])
        scaled = A / np.linalg.norm(A, axis=0)
        if np.linalg.matrix_rank(scaled) < A.shape[1]:
            return None
        xtx = A.T @ A
        beta = np.linalg.solve(xtx, A.T @ y)
        resid = y - A @ beta
        return beta, float(resid @ resid), xtx

    selected: list = []
    tiny = 1e-20 * max(1.0, float(y @ y))
    current = ols(selected)
    rejected: set = set()
    while True:
        if current[1] <= tiny:
            break
        best = None
        for j in candidates:
            if j in selected or j in rejected:
                continue
            df = n - len(selected) - 2
            if df < 1:
                continue
            fit = ols(selected + [j])
            if fit is None:
                warnings.warn(
                    f"feature {train.feature_names[j]!r} is collinear with the selected set; skipped",
                    SingularDesignWarning,
                    stacklevel=2,
                )
                rejected.add(j)
                continue
            beta, sse, xtx = fit
            var = sse / df * np.linalg.inv(xtx)[-1, -1]
            if var <= 0:
                pval = 0.0 if beta[-1] != 0 else 1.0
            else:
                pval = float(2 * stats.t.sf(abs(beta[-1]) / math.sqrt(var), df))
            if best is None or pval < best[0]:
                best = (pval, j, fit)
        if best is None or not best[0] < alpha_in:
            break
        selected.append(best[1])
        current = best[2]
    beta = current[0]
    return StepwiseModel(
        features=tuple(selected),
        intercept=float(beta[0]),
        coefficients=tuple(float(b) for b in beta[1:]),
        feature_names=tuple(train.feature_names[j] for j in selected),
    )


# -- fit / predict ---------------------------------------------------------------

def fit(spec: PredictorSpec, train: Dataset, rng: Optional[np.random.Generator] = None):
    """Fit ``spec`` on ``train`` and return an immutable predictor.

    ``rng`` only matters for ``guess``; without it a generator is seeded from
    ``spec.seed``.
    """
    if train.n < 1:
        raise DataError("empty training set")
    kind = spec.kind
    if kind == "mean":
        return ConstantPredictor(kind, float(np.mean(train.y)))
    if kind == "median":
        return ConstantPredictor(kind, float(np.median(train.y)))
    if kind == "guess":
        return GuessPredictor(train.y.copy(), rng if rng is not None else np.random.default_rng(spec.seed))
    if kind == "stepwise":
        return StepwisePredictor(fit_stepwise(train, spec.alpha_in), spec.floor, train.n_features)

    if spec.k > train.n:
        raise DataError(f"k={spec.k} exceeds the {train.n} training cases")
    features = tuple(range(train.n_features))
    cases = tuple(range(train.n))
    if kind == "eba_fss" or (kind == "eba_css" and spec.css_on_fss):
        features = select_features_fss(train, spec)
    if kind == "eba_css":
        cases = select_cases_css(train, spec, features)
    rows = np.asarray(cases, dtype=int)
    return AnalogyPredictor(
        kind=kind,
        donors_X=train.X[rows],
        donors_y=train.y[rows],
        ranges=_ranges(train.X),
        features=features,
        cases=cases,
        k=spec.k,
        weighting=spec.weighting,
        epsilon=spec.epsilon,
        n_features=train.n_features,
    )


def predict(fitted, target_features) -> float:
    return fitted.predict(target_features)


def loocv_predictions(spec: PredictorSpec, data: Dataset, rng: Optional[np.random.Generator] = None) -> Optional[np.ndarray]:
    """Vectorised leave-one-out predictions, or ``None`` if not available.

    Gives the same predictions as fitting on every D minus {t} in turn (for
    ``guess``, the same distribution), including per-fold normalisation.
    """
    y = data.y
    n = data.n
    if spec.kind == "mean":
        return (y.sum() - y) / (n - 1)
    if spec.kind == "median":
        return np.array([np.median(np.delete(y, t)) for t in range(n)])
    if spec.kind == "guess":
        rng = rng if rng is not None else np.random.default_rng(spec.seed)
        r = rng.integers(0, n - 1, size=n)
        r += r >= np.arange(n)
        return y[r]
    if spec.kind == "eba":
        if spec.k > n - 1:
            return None
        X = data.X
        s = np.sort(X, axis=0)
        # min-max range of each feature with case t left out
        hi = np.where(X == s[-1], s[-2], s[-1])
        lo = np.where(X == s[0], s[1], s[0])
        rng_t = hi - lo
        sq = np.zeros((n, n))
        for f in range(data.n_features):
            r = rng_t[:, f]
            pos = r > 0
            if not pos.any():
                continue
            term = np.zeros((n, n))
            term[pos] = ((X[pos, f][:, None] - X[:, f][None, :]) / r[pos][:, None]) ** 2
            sq += term
        dist = np.sqrt(sq)
        np.fill_diagonal(dist, np.inf)
        return _knn_rows(dist, y, spec.k, spec.weighting, spec.epsilon)
    return None
