import csv

import numpy as np
import pytest

# criterion number -> (title, outcome, detail)
_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    number, title = marker.args
    detail = ""
    if report.failed:
        detail = str(report.longrepr.reprcrash.message) if hasattr(report.longrepr, "reprcrash") else str(report.longrepr)
        detail = detail.splitlines()[0][:160]
    _CRITERIA[number] = (title, "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL"), detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[number]
        line = f"[{status}] criterion {number}: {title}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)


def effort_like(n=77, seed=2024):
    """Synthetic project data shaped like a classic function-point effort set."""
    rng = np.random.default_rng(seed)
    team = rng.integers(0, 5, n)
    manager = rng.integers(0, 8, n)
    year = rng.integers(82, 89, n)
    length = rng.integers(1, 40, n)
    transactions = rng.lognormal(4.8, 0.6, n).round()
    entities = rng.lognormal(4.5, 0.5, n).round()
    raw = transactions + entities
    adjustment = rng.integers(5, 52, n)
    points = (raw * (0.65 + adjustment / 100)).round()
    language = rng.integers(1, 4, n)
    effort = (points * rng.lognormal(2.6, 0.35, n) * (1 + 0.15 * (language == 3)) * (1.1 - 0.03 * team)).round() + 500
    cols = {
        "Project": np.arange(1, n + 1), "TeamExp": team, "ManagerExp": manager, "YearEnd": year, "Length": length,
        "Effort": effort, "Transactions": transactions, "Entities": entities, "PointsNonAdjust": raw,
        "Adjustment": adjustment, "PointsAjust": points, "Language": language,
    }
    return cols


def _cell(value):
    if isinstance(value, str):
        return value
    return f"{value:g}" if isinstance(value, (float, np.floating)) else int(value)


def write_columns(path, cols):
    names = list(cols)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(len(cols[names[0]])):
            w.writerow([_cell(cols[c][i]) for c in names])
    return path


@pytest.fixture(scope="session")
def effort_csv(tmp_path_factory):
    return write_columns(tmp_path_factory.mktemp("data") / "effort.csv", effort_like())


@pytest.fixture
def asymmetry_csv(tmp_path):
    p = tmp_path / "asymmetry.csv"
    p.write_text("case_id,actual,P\n1,10,100\n2,100,10\n")
    return p


@pytest.fixture(scope="session")
def predictions_csv(tmp_path_factory):
    rng = np.random.default_rng(5)
    y = rng.lognormal(7, 0.8, 40)
    good = y * rng.lognormal(0, 0.2, 40)
    ok = y * rng.lognormal(0, 0.5, 40)
    p = tmp_path_factory.mktemp("pred") / "runs.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case_id", "actual", "good", "ok", "flat"])
        for i in range(40):
            w.writerow([f"c{i}", f"{y[i]:.6f}", f"{good[i]:.6f}", f"{ok[i]:.6f}", f"{y.mean() * 3:.6f}"])
    return p
