"""Analogy-estimation replication pipeline shared by the acceptance suite."""

import os
from pathlib import Path

from predeval import baseline as bl
from predeval.accuracy import accuracy_report
from predeval.io import load_dataset
from predeval.preference import DecisionConfig, build_order, evaluate_pair, guessing_verdicts, q1_better_than_guessing
from predeval.predictors import PredictorSpec, loocv_sar, select_cases_css, select_features_fss
from predeval.validation import run_validation

DATA_DIR = Path(__file__).parent / "data"


def desharnais_path():
    env = os.environ.get("PREDEVAL_DESHARNAIS")
    if env:
        return Path(env)
    for name in ("desharnais.arff", "desharnais.csv"):
        if (DATA_DIR / name).exists():
            return DATA_DIR / name
    return None


def replicate(path, runs=1000, seed=0):
    data = load_dataset(path, "Effort", id_column="Project")
    specs = [PredictorSpec("eba", k=2), PredictorSpec("eba_fss", k=2, greedy=True),
             PredictorSpec("eba_css", k=2, greedy=True)]
    runs_ = [run_validation(data, s) for s in specs]
    dist = bl.simulate(data.y, runs=runs, seed=seed)
    reports = {r.system_id: accuracy_report(r, dist.mean_mar) for r in runs_}
    eba, fss, css = runs_
    config = DecisionConfig()
    verdicts = guessing_verdicts(runs_, dist, config)
    verdicts += [evaluate_pair(a, b, dist, config) for a, b in ((eba, fss), (eba, css), (fss, css))]
    graph = build_order(verdicts)

    # selection objective on the full data
    base = specs[0]
    features = select_features_fss(data, specs[1])
    cases = select_cases_css(data, base, features)
    objective = {
        "all": loocv_sar(data, base),
        "fss": loocv_sar(data, base, features=features),
        "css": loocv_sar(data, base, features=features, cases=cases),
    }
    return {
        "n": data.n,
        "q1_eba": q1_better_than_guessing(eba, dist).passed,
        "sa": {k: v.sa for k, v in reports.items()},
        "objective": objective,
        "graph": graph,
        "labels": [s.label for s in specs],
    }
