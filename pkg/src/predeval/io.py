"""CSV ingestion of datasets and externally produced predictions."""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .accuracy import PredictionRun
from .errors import DataError, MismatchError
from .predictors import Dataset

log = logging.getLogger(__name__)

MISSING = {"", "?", "na", "nan", "null", "none"}


def _read_table(path: Path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    """Header and (line number, cells) rows; ARFF files are converted."""
    if path.suffix.lower() == ".arff":
        from scipy.io import arff

        data, meta = arff.loadarff(path)
        header = list(meta.names())
        rows = []
        for i, rec in enumerate(data):
            cells = []
            for value in rec:
                if isinstance(value, bytes):
                    value = value.decode()
                elif isinstance(value, float) and np.isnan(value):
                    value = ""
                cells.append(str(value))
            rows.append((i + 1, cells))
        return header, rows

    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, a header row is required") from None
        rows = []
        for cells in reader:
            if not cells or all(not c.strip() for c in cells):
                continue
            if len(cells) != len(header):
                raise DataError(
                    f"{path}:{reader.line_num}: expected {len(header)} fields, found {len(cells)}"
                )
            rows.append((reader.line_num, [c.strip() for c in cells]))
    return header, rows


def _number(text: str, path, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"{path}:{line}: column {column!r} is not numeric: {text!r}") from None
    if not np.isfinite(value):
        raise DataError(f"{path}:{line}: column {column!r} is not finite: {text!r}")
    return value


def load_dataset(
    path,
    target_column: str,
    id_column: Optional[str] = None,
    features: Optional[Sequence[str]] = None,
    drop: Iterable[str] = (),
    name: Optional[str] = None,
) -> Dataset:
    """Read a dataset from CSV (or ARFF).

    Every column other than the target, the id column and ``drop`` is a
    feature unless ``features`` names them explicitly.  Rows missing a value
    in any used column are dropped and the count is logged.
    """
    path = Path(path)
    header, rows = _read_table(path)
    index = {h: i for i, h in enumerate(header)}
    for col in [target_column] + ([id_column] if id_column else []) + list(features or []):
        if col not in index:
            raise DataError(f"{path}: no column named {col!r}")
    drop = set(drop)
    if features is None:
        features = [h for h in header if h not in drop and h not in (target_column, id_column)]
    used = [target_column] + list(features)

    ids, X, y = [], [], []
    dropped = 0
    for line, cells in rows:
        if any(cells[index[c]].lower() in MISSING for c in used):
            dropped += 1
            continue
        values = [_number(cells[index[c]], path, line, c) for c in used]
        if values[0] <= 0:
            raise DataError(f"{path}:{line}: target {target_column!r} must be positive, got {cells[index[target_column]]}")
        y.append(values[0])
        X.append(values[1:])
        ids.append(cells[index[id_column]] if id_column else str(line - 1))
    if dropped:
        log.info("%s: dropped %d incomplete row(s)", path, dropped)
    if not y:
        raise DataError(f"{path}: no complete rows")
    return Dataset(
        name or path.stem,
        ids,
        np.array(X, dtype=float).reshape(len(y), len(features)),
        y,
        features,
    )


def load_predictions(path) -> list[PredictionRun]:
    """One run per system column of a ``case_id,actual,<system>...`` file."""
    path = Path(path)
    header, rows = _read_table(path)
    if len(header) < 3 or header[0] != "case_id" or header[1] != "actual":
        raise DataError(f"{path}: header must be case_id,actual,<system>[,<system>...]")
    systems = header[2:]
    if len(set(systems)) != len(systems):
        raise DataError(f"{path}: duplicate system columns")
    ids, actual, preds = [], [], [[] for _ in systems]
    seen = set()
    for line, cells in rows:
        cid = cells[0]
        if cid in seen:
            raise DataError(f"{path}:{line}: duplicate case_id {cid!r}")
        seen.add(cid)
        if any(c.lower() in MISSING for c in cells):
            raise DataError(f"{path}:{line}: missing value")
        ids.append(cid)
        actual.append(_number(cells[1], path, line, "actual"))
        for j, system in enumerate(systems):
            preds[j].append(_number(cells[2 + j], path, line, system))
    if not ids:
        raise DataError(f"{path}: no rows")
    return [PredictionRun(s, actual, p, case_ids=tuple(ids)) for s, p in zip(systems, preds)]


def align_runs(runs: Sequence[PredictionRun]) -> list[PredictionRun]:
    """Reorder runs (e.g. from several files) to the case order of the first.

    Raises ``MismatchError`` when the runs do not cover the same cases with
    the same actuals.
    """
    if not runs:
        return []
    ref = runs[0]
    if ref.case_ids is None:
        return list(runs)
    position = {cid: i for i, cid in enumerate(ref.case_ids)}
    out = [ref]
    for run in runs[1:]:
        if run.case_ids is None or set(run.case_ids) != set(position) or run.n != ref.n:
            raise MismatchError(f"run {run.system_id!r} does not cover the same case ids as {ref.system_id!r}")
        order = np.argsort([position[c] for c in run.case_ids], kind="stable")
        actual = run.actual[order]
        if not np.array_equal(actual, ref.actual):
            raise MismatchError(f"run {run.system_id!r} disagrees with {ref.system_id!r} on actual values")
        out.append(PredictionRun(run.system_id, actual, run.predicted[order], case_ids=ref.case_ids, dataset=run.dataset))
    ids = [r.system_id for r in out]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate system names across inputs")
    return out


def _fmt(value: float) -> str:
    return format(float(value), ".12g")


def write_predictions(runs: Sequence[PredictionRun], path_or_file) -> None:
    """Write runs sharing one evaluation set as a predictions CSV."""
    runs = list(runs)
    if not runs:
        raise DataError("no runs to write")
    ref = runs[0]
    for run in runs[1:]:
        if run.n != ref.n or not np.array_equal(run.actual, ref.actual) or run.case_ids != ref.case_ids:
            raise MismatchError("runs written to one file must share case ids and actuals")
    ids = ref.case_ids if ref.case_ids is not None else tuple(str(i + 1) for i in range(ref.n))
    if ref.repeat is not None and ref.repeat.max() > 0:
        # case ids recur once per repeat; keep rows unique
        ids = tuple(f"{cid}@{rep}" for cid, rep in zip(ids, ref.repeat.tolist()))

    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case_id", "actual"] + [r.system_id for r in runs])
        for i in range(ref.n):
            w.writerow([ids[i], _fmt(ref.actual[i])] + [_fmt(r.predicted[i]) for r in runs])

    if hasattr(path_or_file, "write"):
        _write(path_or_file)
    else:
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            _write(fh)
