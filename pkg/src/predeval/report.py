"""Accuracy tables and reports in text, markdown and JSON."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from . import baseline as _baseline
from .accuracy import AccuracyReport, standardised_accuracy
from .effect import EffectSize
from .preference import PairVerdict, PreferenceGraph, hasse_edges

SCHEMA = "predeval-report/1"
FORMATS = ("text", "markdown", "json")


@dataclass(frozen=True)
class BaselineSummary:
    """What a report needs to know about random guessing."""

    mean_mar: float
    quantile_mar: float
    alpha: float = 0.05
    sd: Optional[float] = None
    median_mar: Optional[float] = None
    mean_mmre: Optional[float] = None
    quantile_mmre: Optional[float] = None
    runs: Optional[int] = None
    seed: Optional[int] = None

    @classmethod
    def from_distribution(cls, dist: _baseline.BaselineDistribution, alpha: float = 0.05) -> "BaselineSummary":
        mmre = dist.mmre_samples
        return cls(
            mean_mar=dist.mean_mar,
            quantile_mar=_baseline.quantile(dist, alpha),
            alpha=alpha,
            sd=dist.sd_abs_residuals,
            median_mar=_baseline.quantile(dist, 0.5),
            mean_mmre=None if mmre is None else float(mmre.mean()),
            quantile_mmre=_baseline.mmre_quantile(dist, alpha),
            runs=dist.runs,
            seed=dist.seed,
        )

    @property
    def quantile_label(self) -> str:
        return f"P0 {self.alpha * 100:g}% quantile"


@dataclass(frozen=True)
class RunTable:
    """Rows for each system, preceded by the guessing rows when a baseline is known.

    SA is always recomputed from each row's MAR and the baseline mean.
    """

    systems: tuple = ()
    baseline: Optional[BaselineSummary] = None
    pred_level: float = 0.25
    rows: tuple = field(init=False)

    def __post_init__(self):
        rows = []
        b = self.baseline
        if b is not None:
            sa = lambda m: standardised_accuracy(m, b.mean_mar)
            rows.append(AccuracyReport("P0", b.mean_mar, mmre=b.mean_mmre, sa=sa(b.mean_mar), pred_level=self.pred_level))
            rows.append(
                AccuracyReport(b.quantile_label, b.quantile_mar, mmre=b.quantile_mmre, sa=sa(b.quantile_mar), pred_level=self.pred_level)
            )
            rows += [replace(r, sa=sa(r.mar)) for r in self.systems]
        else:
            rows += [replace(r, sa=None) for r in self.systems]
        object.__setattr__(self, "rows", tuple(rows))

    def check_consistency(self, tol: float = 1e-9) -> None:
        if self.baseline is None:
            return
        for r in self.rows:
            expected = (1.0 - r.mar / self.baseline.mean_mar) * 100.0
            if r.sa is None or abs(r.sa - expected) > tol * max(1.0, abs(expected)):
                raise AssertionError(f"SA of {r.system_id!r} disagrees with the baseline mean")


def _f1(v: Optional[float]) -> str:
    if v is None:
        return "-"
    if math.isinf(v):
        return "inf"
    return f"{v:.1f}"


def _f3(v: Optional[float]) -> str:
    if v is None:
        return "-"
    if math.isinf(v):
        return "inf"
    return f"{v:.3f}"


def _fp(v: Optional[float]) -> str:
    if v is None:
        return "-"
    return "<0.0001" if v < 1e-4 else f"{v:.4f}"


def _table_rows(table: RunTable) -> tuple[list[str], list[list[str]]]:
    head = ["System", "MAR", "MMRE(%)", "MdMRE(%)", f"pred({table.pred_level * 100:g})", "SA(%)"]
    body = [[r.system_id, _f1(r.mar), _f1(r.mmre), _f1(r.mdmre), _f3(r.pred_l), _f1(r.sa)] for r in table.rows]
    return head, body


def _effect_rows(effects: Sequence[EffectSize]):
    head = ["Treatment", "Control", "Delta", "|Delta|", "Improved", "Category"]
    body = [[e.treatment_id, e.control_id, _f3(e.delta), _f3(e.magnitude), "yes" if e.improved else "no", e.category] for e in effects]
    return head, body


def _verdict_rows(verdicts: Sequence[PairVerdict]):
    head = ["Left", "Relation", "Right", "p", "|Delta|", "Category", "Q1 left", "Q1 right", "Tags"]
    yn = lambda b: "-" if b is None else ("pass" if b else "fail")
    body = [
        [v.left_id, v.relation, v.right_id, _fp(v.p_value), _f3(v.delta_magnitude), v.delta_category or "-",
         yn(v.q1_left), yn(v.q1_right), ",".join(v.tags) or "-"]
        for v in verdicts
    ]
    return head, body


def _text_table(head, body) -> list[str]:
    widths = [max(len(str(x)) for x in col) for col in zip(head, *body)]
    fmt = lambda cells: "  ".join(
        str(c).ljust(w) if i == 0 else str(c).rjust(w) for i, (c, w) in enumerate(zip(cells, widths))
    ).rstrip()
    return [fmt(head), "  ".join("-" * w for w in widths)] + [fmt(r) for r in body]


def _md_table(head, body) -> list[str]:
    lines = ["| " + " | ".join(head) + " |", "|" + "|".join("---" for _ in head) + "|"]
    lines += ["| " + " | ".join(map(str, r)) + " |" for r in body]
    return lines


def _header(table: RunTable) -> str:
    b = table.baseline
    if b is None:
        return "baseline: none"
    parts = [f"baseline: runs={b.runs if b.runs is not None else '-'}", f"seed={b.seed if b.seed is not None else '-'}",
             f"mean MAR={b.mean_mar:.1f}"]
    if b.sd is not None:
        parts.append(f"sd={b.sd:.1f}")
    return " ".join(parts)


def report_dict(
    table: RunTable,
    effects: Sequence[EffectSize] = (),
    verdicts: Sequence[PairVerdict] = (),
    graph: Optional[PreferenceGraph] = None,
) -> dict:
    b = table.baseline
    base = None
    if b is not None:
        quantiles = {repr(b.alpha): b.quantile_mar}
        if b.median_mar is not None:
            quantiles["0.5"] = b.median_mar
        base = {"mean": b.mean_mar, "sd": b.sd, "quantiles": quantiles, "runs": b.runs, "seed": b.seed,
                "mean_mmre": b.mean_mmre, "quantile_mmre": b.quantile_mmre}
    return {
        "schema": SCHEMA,
        "systems": [r.system_id for r in table.systems],
        "table": [
            {"system": r.system_id, "mar": r.mar, "mmre": r.mmre, "mdmre": r.mdmre, "pred": r.pred_l,
             "pred_level": r.pred_level, "sa": r.sa, "n": r.n}
            for r in table.rows
        ],
        "baseline": base,
        "effects": [
            {"treatment": e.treatment_id, "control": e.control_id, "delta": e.delta, "magnitude": e.magnitude,
             "improved": e.improved, "category": e.category}
            for e in effects
        ],
        "verdicts": [v.to_dict() for v in verdicts],
        "hasse": [] if graph is None else [list(e) for e in sorted(hasse_edges(graph))],
    }


def json_safe(obj):
    # JSON has no infinities; emit them as strings
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    return obj


def render_report(
    table: RunTable,
    effects: Sequence[EffectSize] = (),
    verdicts: Sequence[PairVerdict] = (),
    graph: Optional[PreferenceGraph] = None,
    fmt: str = "text",
    title: str = "Accuracy",
) -> str:
    """Render a report. The output is byte-identical for identical inputs."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    table.check_consistency()
    if fmt == "json":
        return json.dumps(json_safe(report_dict(table, effects, verdicts, graph)), indent=2, allow_nan=False) + "\n"

    tab = _text_table if fmt == "text" else _md_table
    heading = (lambda s: [f"== {s} =="]) if fmt == "text" else (lambda s: [f"## {s}"])
    lines = heading(title) + [_header(table), ""] + tab(*_table_rows(table))
    if effects:
        lines += [""] + heading("Effect sizes (Glass's delta)") + tab(*_effect_rows(effects))
    if verdicts:
        lines += [""] + heading("Pairwise verdicts") + tab(*_verdict_rows(verdicts))
    if graph is not None:
        covers = sorted(hasse_edges(graph))
        lines += [""] + heading("Hasse covers (lower < upper)")
        lines += [f"{u} < {v}" for u, v in covers] or ["(none)"]
        if graph.indifferences:
            lines += [f"{a} ~ {b}" for a, b in sorted(graph.indifferences)]
    return "\n".join(lines) + "\n"
