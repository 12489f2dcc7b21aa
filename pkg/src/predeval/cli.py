"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 degenerate statistic,
4 preference cycle.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from dataclasses import replace
from typing import Optional, Sequence

from . import baseline as bl
from .accuracy import accuracy_report
from .effect import glass_delta
from .errors import DataError, PredevalError
from .io import align_runs, load_dataset, load_predictions, write_predictions
from .preference import (
    DecisionConfig,
    build_order,
    emit_dot,
    evaluate_pair,
    graph_to_dict,
    guessing_verdicts,
)
from .predictors import PredictorSpec
from .report import FORMATS, BaselineSummary, RunTable, json_safe, render_report
from .validation import ValidationScheme, evaluation_actuals, run_validation

log = logging.getLogger("predeval")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _global_options() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--runs", type=int, default=bl.DEFAULT_RUNS, help="random-guessing runs (default 1000)")
    g.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    g.add_argument("--alpha", type=float, default=0.05, help="significance level and baseline quantile (default 0.05)")
    g.add_argument("--delta-threshold", type=float, default=0.2, help="smallest effect worth a preference (default 0.2)")
    g.add_argument("--pred-level", type=float, default=0.25, help="pred(l) threshold (default 0.25)")
    g.add_argument("--format", choices=FORMATS, default="text")
    g.add_argument("--workers", type=int, default=None, help="threads for simulation and folds")
    g.add_argument("-v", "--verbose", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _global_options()
    parser = _Parser(prog="predeval", description="Evaluate continuous prediction systems against random guessing.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("evaluate", parents=[common], help="cross-validate predictors on a dataset")
    p.add_argument("dataset")
    _dataset_options(p, required=True)
    p.add_argument("--predictor", action="append", default=None,
                   help="predictor spec, repeatable (e.g. eba:k=2, eba_fss, eba_css, stepwise, mean)")
    p.add_argument("--scheme", default="loocv", help="loocv | kfold:folds=10,repeats=1 | holdout:fraction=0.3")
    p.add_argument("--fast-selection", action="store_true", help="greedy feature selection instead of exhaustive")
    p.add_argument("--predictions-out", help="write the prediction runs as CSV")
    p.add_argument("--json-out", help="also write the JSON report here")
    p.add_argument("--dot-out", help="write the Hasse diagram (DOT) here")

    p = sub.add_parser("baseline", parents=[common], help="random-guessing distribution")
    p.add_argument("input", help="dataset CSV (with --target) or predictions CSV")
    _dataset_options(p, required=False)
    p.add_argument("--quantile", type=float, default=None, help="quantile to report (default: --alpha)")
    p.add_argument("--bins", type=int, default=bl.DEFAULT_BINS)
    p.add_argument("--histogram", help="write the histogram CSV here instead of stdout")

    for name, helptext in (("compare", "pairwise verdicts"), ("rank", "preference graph as DOT and JSON"),
                           ("stats", "accuracy statistics only")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("predictions", nargs="+")
        if name in ("compare", "rank"):
            p.add_argument("--tail", choices=("auto", "two-sided", "one-sided"), default="auto")
            p.add_argument("--pairing", choices=("auto", "paired", "unpaired"), default="auto")
        if name == "rank":
            p.add_argument("--include-not-predicting", action="store_true")
            p.add_argument("--json-out")
            p.add_argument("--dot-out")
    return parser


def _dataset_options(p, required: bool):
    p.add_argument("--target", required=required, help="outcome column")
    p.add_argument("--id-column")
    p.add_argument("--features", help="comma-separated feature columns (default: all others)")
    p.add_argument("--drop", default="", help="comma-separated columns to ignore")


def _split(text: Optional[str]) -> list:
    return [t.strip() for t in text.split(",") if t.strip()] if text else []


def _load_data(args):
    return load_dataset(
        args.dataset if hasattr(args, "dataset") else args.input,
        args.target,
        id_column=args.id_column,
        features=_split(args.features) or None,
        drop=_split(args.drop),
    )


def _load_runs(paths):
    runs = []
    for path in paths:
        runs.extend(load_predictions(path))
    return align_runs(runs)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _pairwise(runs, baseline, config):
    return [evaluate_pair(a, b, baseline, config) for a, b in itertools.combinations(runs, 2)]


def _effects_vs_guessing(reports, dist):
    if dist.sd_abs_residuals <= 0:
        return []
    return [
        glass_delta(r.mar, dist.mean_mar, dist.sd_abs_residuals, treatment_id=r.system_id, control_id="P0")
        for r in reports
    ]


def cmd_evaluate(args, out) -> int:
    data = _load_data(args)
    scheme = ValidationScheme.parse(args.scheme, seed=args.seed)
    specs = [PredictorSpec.parse(s) for s in (args.predictor or ["eba:k=2"])]
    if args.fast_selection:
        specs = [replace(s, greedy=True) for s in specs]
    runs = [run_validation(data, s, scheme, workers=args.workers) for s in specs]
    if len({r.system_id for r in runs}) != len(runs):
        raise UsageError("predictors must have distinct labels (use name=...)")
    dist = bl.simulate(evaluation_actuals(runs[0]), runs=args.runs, seed=args.seed, workers=args.workers)
    reports = [accuracy_report(r, dist.mean_mar, args.pred_level) for r in runs]
    table = RunTable(tuple(reports), BaselineSummary.from_distribution(dist, args.alpha), args.pred_level)
    config = DecisionConfig(alpha=args.alpha, delta_threshold=args.delta_threshold)
    verdicts = guessing_verdicts(runs, dist, config) + _pairwise(runs, dist, config)
    graph = build_order(verdicts)
    effects = _effects_vs_guessing(reports, dist)
    title = f"{data.name}: {scheme.kind}, n={data.n}"
    out.write(render_report(table, effects, verdicts, graph, args.format, title=title))
    if args.json_out:
        _write(args.json_out, render_report(table, effects, verdicts, graph, "json"))
    if args.dot_out:
        _write(args.dot_out, emit_dot(graph))
    if args.predictions_out:
        with open(args.predictions_out, "w", newline="", encoding="utf-8") as fh:
            write_predictions(runs, fh)
    return 0


def cmd_baseline(args, out) -> int:
    if args.target:
        actuals = _load_data(args).y
    else:
        runs = load_predictions(args.input)
        actuals = runs[0].actual
    q = args.quantile if args.quantile is not None else args.alpha
    dist = bl.simulate(actuals, runs=args.runs, seed=args.seed, workers=args.workers)
    exact_mean, exact_sd = bl.exact_expected_mar(actuals)
    stats = {
        "n": dist.n,
        "runs": dist.runs,
        "seed": dist.seed,
        "mean_mar": dist.mean_mar,
        "sd_abs_residuals": dist.sd_abs_residuals,
        "median_mar": bl.quantile(dist, 0.5),
        "quantile": q,
        "quantile_mar": bl.quantile(dist, q),
        "exact_mean_mar": exact_mean,
        "exact_sd": exact_sd,
    }
    hist = bl.histogram(dist, args.bins)
    if args.format == "json":
        payload = dict(stats, histogram=[{"bin_lower": lo, "bin_upper": hi, "count": c} for lo, hi, c in hist])
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        out.write(f"== Random guessing baseline ==\nbaseline: runs={dist.runs} seed={dist.seed}\n")
        for key, value in stats.items():
            out.write(f"{key}: {value:.1f}\n" if isinstance(value, float) else f"{key}: {value}\n")
    if args.histogram:
        bl.write_histogram_csv(dist, args.histogram, args.bins)
    elif args.format != "json":
        out.write("\n")
        bl.write_histogram_csv(dist, out, args.bins)
    return 0


def _decision(args) -> DecisionConfig:
    return DecisionConfig(alpha=args.alpha, delta_threshold=args.delta_threshold, tail=args.tail, pairing=args.pairing)


def cmd_compare(args, out) -> int:
    runs = _load_runs(args.predictions)
    dist = bl.simulate(runs[0].actual, runs=args.runs, seed=args.seed, workers=args.workers)
    config = _decision(args)
    verdicts = guessing_verdicts(runs, dist, config) + _pairwise(runs, dist, config)
    reports = [accuracy_report(r, dist.mean_mar, args.pred_level) for r in runs]
    table = RunTable(tuple(reports), BaselineSummary.from_distribution(dist, args.alpha), args.pred_level)
    out.write(render_report(table, (), verdicts, None, args.format, title="Comparison"))
    return 0


def cmd_rank(args, out) -> int:
    runs = _load_runs(args.predictions)
    dist = bl.simulate(runs[0].actual, runs=args.runs, seed=args.seed, workers=args.workers)
    config = _decision(args)
    verdicts = guessing_verdicts(runs, dist, config) + _pairwise(runs, dist, config)
    graph = build_order(verdicts, include_not_predicting=args.include_not_predicting)
    dot = emit_dot(graph)
    payload = dict(graph_to_dict(graph), baseline={"runs": dist.runs, "seed": dist.seed, "mean": dist.mean_mar})
    text_json = json.dumps(json_safe(payload), indent=2, allow_nan=False) + "\n"
    out.write(text_json if args.format == "json" else dot)
    if args.json_out:
        _write(args.json_out, text_json)
    if args.dot_out:
        _write(args.dot_out, dot)
    return 0


def cmd_stats(args, out) -> int:
    runs = _load_runs(args.predictions)
    reports = [accuracy_report(r, None, args.pred_level) for r in runs]
    out.write(render_report(RunTable(tuple(reports), None, args.pred_level), fmt=args.format, title="Accuracy"))
    return 0


COMMANDS = {"evaluate": cmd_evaluate, "baseline": cmd_baseline, "compare": cmd_compare, "rank": cmd_rank, "stats": cmd_stats}


def main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        err.write(f"{exc}\n")
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=err,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"predeval: error: {exc}\n")
        return 1
    except PredevalError as exc:
        err.write(f"predeval: {type(exc).__name__}: {exc}\n")
        return exc.exit_code
    except FileNotFoundError as exc:
        err.write(f"predeval: {exc}\n")
        return DataError.exit_code
    except ValueError as exc:
        err.write(f"predeval: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
