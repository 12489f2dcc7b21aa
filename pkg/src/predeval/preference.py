"""Pairwise decisions between prediction systems and the resulting partial order.

Three questions decide whether one system is preferred to another:

1. Does each system beat random guessing (its MAR lies below the alpha
   quantile of the guessing distribution)?
2. Is the difference in absolute residuals statistically significant?
3. Is the effect (Glass's delta) large enough to matter?

Strict preferences are collected into a graph whose transitive reduction is
the Hasse diagram.  Indifference is recorded alongside but is not assumed to
be transitive.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import baseline as _baseline
from .accuracy import PredictionRun, absolute_residuals, mar
from .effect import SmallSampleWarning, categorize, glass_delta
from .errors import CycleError, DataError, MismatchError
from .inference import GREATER, LESS, TWO_SIDED, mann_whitney_u, normalize_tail, wilcoxon_signed_rank

LEFT_PRECEDES = "left-precedes-right"
RIGHT_PRECEDES = "right-precedes-left"
INDIFFERENT = "indifferent"
INCOMPARABLE = "incomparable"

NOT_PREDICTING = "not-predicting"
GUESSING_ID = "P0"


@dataclass(frozen=True)
class DecisionConfig:
    """Thresholds for the decision procedure.

    ``tail`` is ``auto`` (one-sided for the paired test, in the direction of
    the observed MAR ordering; two-sided for the unpaired test),
    ``two-sided`` or ``one-sided``.  ``pairing`` is ``auto``, ``paired`` or
    ``unpaired``.
    """

    alpha: float = 0.05
    delta_threshold: float = 0.2
    tail: str = "auto"
    pairing: str = "auto"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.delta_threshold < 0:
            raise ValueError("delta_threshold must be non-negative")
        if self.tail not in ("auto", "two-sided", "one-sided"):
            raise ValueError(f"unknown tail policy {self.tail!r}")
        if self.pairing not in ("auto", "paired", "unpaired"):
            raise ValueError(f"unknown pairing policy {self.pairing!r}")


@dataclass(frozen=True)
class Q1Result:
    passed: bool
    mar: float
    threshold: float
    p_value: float


@dataclass(frozen=True)
class PairVerdict:
    left_id: str
    right_id: str
    relation: str
    q1_left: Optional[bool] = None
    q1_right: Optional[bool] = None
    p_value: Optional[float] = None
    delta_magnitude: Optional[float] = None
    delta_category: Optional[str] = None
    test: Optional[str] = None
    left_mar: Optional[float] = None
    right_mar: Optional[float] = None
    tags: tuple = ()

    def oriented(self) -> Optional[tuple[str, str]]:
        """``(worse, better)`` for a strict verdict, else ``None``."""
        if self.relation == LEFT_PRECEDES:
            return self.left_id, self.right_id
        if self.relation == RIGHT_PRECEDES:
            return self.right_id, self.left_id
        return None

    def swapped(self) -> "PairVerdict":
        flip = {LEFT_PRECEDES: RIGHT_PRECEDES, RIGHT_PRECEDES: LEFT_PRECEDES}
        return PairVerdict(
            left_id=self.right_id,
            right_id=self.left_id,
            relation=flip.get(self.relation, self.relation),
            q1_left=self.q1_right,
            q1_right=self.q1_left,
            p_value=self.p_value,
            delta_magnitude=self.delta_magnitude,
            delta_category=self.delta_category,
            test=self.test,
            left_mar=self.right_mar,
            right_mar=self.left_mar,
            tags=self.tags,
        )

    def to_dict(self) -> dict:
        return {
            "left": self.left_id,
            "right": self.right_id,
            "relation": self.relation,
            "q1_left": self.q1_left,
            "q1_right": self.q1_right,
            "p_value": self.p_value,
            "delta_magnitude": self.delta_magnitude,
            "delta_category": self.delta_category,
            "test": self.test,
            "left_mar": self.left_mar,
            "right_mar": self.right_mar,
            "tags": list(self.tags),
        }


def _same_evaluation_set(actuals: np.ndarray, reference: np.ndarray) -> bool:
    # repeated cross-validation predicts every case once per repeat
    if actuals.size % reference.size:
        return False
    factor = actuals.size // reference.size
    ref = Counter(reference.tolist())
    return Counter(actuals.tolist()) == Counter({k: v * factor for k, v in ref.items()})


def beats_guessing(mar_value: float, threshold: float) -> bool:
    """Q1 on summary values: strictly below the guessing quantile."""
    return mar_value < threshold


def q1_better_than_guessing(
    run: PredictionRun, baseline: _baseline.BaselineDistribution, alpha: float = 0.05
) -> Q1Result:
    if not _same_evaluation_set(run.actual, baseline.actuals):
        raise MismatchError(
            f"run {run.system_id!r} was not evaluated on the outcomes the baseline was built from"
        )
    value = mar(run)
    threshold = _baseline.quantile(baseline, alpha)
    return Q1Result(
        passed=beats_guessing(value, threshold),
        mar=value,
        threshold=threshold,
        p_value=_baseline.empirical_p(baseline, value),
    )


def decide(
    left_mar: float,
    right_mar: float,
    q1_left: bool,
    q1_right: bool,
    p_value: float,
    delta_magnitude: float,
    config: DecisionConfig = DecisionConfig(),
) -> tuple[str, tuple]:
    """Relation between two systems from already-computed evidence.

    Returns ``(relation, tags)``.  When neither system beats guessing the
    relation is still worked out from significance and effect size, and
    tagged ``not-predicting``.
    """
    tags = ()
    if not (q1_left or q1_right):
        tags = (NOT_PREDICTING,)
    if left_mar == right_mar:
        return INDIFFERENT, tags
    if not p_value < config.alpha or delta_magnitude < config.delta_threshold:
        return INDIFFERENT, tags
    left_better = left_mar < right_mar
    better_q1, worse_q1 = (q1_left, q1_right) if left_better else (q1_right, q1_left)
    if worse_q1 and not better_q1:
        return INDIFFERENT, tags
    return (RIGHT_PRECEDES if left_better else LEFT_PRECEDES), tags


def _paired(run1: PredictionRun, run2: PredictionRun, policy: str) -> bool:
    if policy == "unpaired":
        return False
    aligned = run1.n == run2.n and (
        run1.case_ids == run2.case_ids
        if run1.case_ids is not None and run2.case_ids is not None
        else np.array_equal(run1.actual, run2.actual)
    )
    if policy == "paired" and not aligned:
        raise MismatchError(
            f"runs {run1.system_id!r} and {run2.system_id!r} do not cover the same cases in the same order"
        )
    return aligned


def evaluate_pair(
    run1: PredictionRun,
    run2: PredictionRun,
    baseline: _baseline.BaselineDistribution,
    config: DecisionConfig = DecisionConfig(),
) -> PairVerdict:
    """Apply the three-question procedure to two runs."""
    if run1.dataset is not None and run2.dataset is not None and run1.dataset != run2.dataset:
        return PairVerdict(run1.system_id, run2.system_id, INCOMPARABLE)

    q1a = q1_better_than_guessing(run1, baseline, config.alpha)
    q1b = q1_better_than_guessing(run2, baseline, config.alpha)
    res1, res2 = absolute_residuals(run1), absolute_residuals(run2)
    mar1, mar2 = float(res1.mean()), float(res2.mean())
    # orient so that `better` has the smaller MAR
    swapped = mar2 < mar1
    better, worse = (res2, res1) if swapped else (res1, res2)
    one_sided = config.tail == "one-sided"

    if _paired(run1, run2, config.pairing):
        tail = GREATER if (config.tail == "auto" or one_sided) and mar1 != mar2 else TWO_SIDED
        diffs = worse - better
        if np.all(diffs == 0):
            p_value, test = 1.0, "wilcoxon:degenerate"
        else:
            result = wilcoxon_signed_rank(diffs, tail=tail)
            p_value, test = result.p_value, f"wilcoxon:{result.method}:{result.tail}"
    else:
        tail = LESS if one_sided and mar1 != mar2 else TWO_SIDED
        result = mann_whitney_u(better, worse, tail=tail)
        p_value, test = result.p_value, f"mann-whitney:{result.method}:{result.tail}"

    control_sd = float(np.std(worse, ddof=1)) if worse.size > 1 else 0.0
    mar_better, mar_worse = float(better.mean()), float(worse.mean())
    if control_sd > 0:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SmallSampleWarning)
            magnitude = glass_delta(mar_better, mar_worse, control_sd).magnitude
        if min(better.size, worse.size) < 20:
            warnings.warn(
                f"{run1.system_id} vs {run2.system_id}: fewer than 20 cases, Glass's delta is biased",
                SmallSampleWarning,
                stacklevel=2,
            )
    else:
        magnitude = 0.0 if mar_better == mar_worse else math.inf

    relation, tags = decide(mar1, mar2, q1a.passed, q1b.passed, p_value, magnitude, config)
    return PairVerdict(
        left_id=run1.system_id,
        right_id=run2.system_id,
        relation=relation,
        q1_left=q1a.passed,
        q1_right=q1b.passed,
        p_value=p_value,
        delta_magnitude=magnitude,
        delta_category=categorize(magnitude),
        test=test,
        left_mar=mar1,
        right_mar=mar2,
        tags=tags,
    )


def guessing_verdicts(
    runs: Iterable[PredictionRun],
    baseline: _baseline.BaselineDistribution,
    config: DecisionConfig = DecisionConfig(),
) -> list[PairVerdict]:
    """Verdicts of the guessing pseudo-system against each run.

    A run that passes Q1 is strictly preferred to guessing; otherwise the two
    are indifferent.  The p-value is the empirical one from the baseline.
    """
    out = []
    for run in runs:
        q1 = q1_better_than_guessing(run, baseline, config.alpha)
        magnitude = None
        if baseline.sd_abs_residuals > 0:
            magnitude = abs(q1.mar - baseline.mean_mar) / baseline.sd_abs_residuals
        out.append(
            PairVerdict(
                left_id=GUESSING_ID,
                right_id=run.system_id,
                relation=LEFT_PRECEDES if q1.passed else INDIFFERENT,
                q1_left=False,
                q1_right=q1.passed,
                p_value=q1.p_value,
                delta_magnitude=magnitude,
                delta_category=None if magnitude is None else categorize(magnitude),
                test="guessing-quantile",
                left_mar=baseline.mean_mar,
                right_mar=q1.mar,
            )
        )
    return out


@dataclass(frozen=True)
class PreferenceGraph:
    nodes: tuple
    strict_edges: frozenset
    indifferences: frozenset
    evidence: Mapping = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        cycle = _find_cycle(self.nodes, self.strict_edges)
        if cycle:
            raise CycleError(cycle)
        for pair in self.indifferences:
            a, b = tuple(pair)
            if (a, b) in self.strict_edges or (b, a) in self.strict_edges:
                raise DataError(f"pair {a!r}, {b!r} is both strictly ordered and indifferent")

    def closure(self) -> set[tuple]:
        return transitive_closure(self.nodes, self.strict_edges)

    def minimal_elements(self) -> list:
        better = {b for _, b in self.strict_edges}
        return [n for n in self.nodes if n not in better]

    def maximal_elements(self) -> list:
        worse = {w for w, _ in self.strict_edges}
        return [n for n in self.nodes if n not in worse]


def _successors(nodes: Sequence, edges: Iterable[tuple]) -> dict:
    succ = {n: [] for n in nodes}
    for u, v in sorted(edges):
        succ.setdefault(u, []).append(v)
        succ.setdefault(v, [])
    return succ


def _find_cycle(nodes: Sequence, edges: Iterable[tuple]) -> Optional[list]:
    succ = _successors(nodes, edges)
    state: dict = {}
    stack: list = []

    def visit(u):
        state[u] = 1
        stack.append(u)
        for v in succ[u]:
            if state.get(v) == 1:
                return stack[stack.index(v):] + [v]
            if v not in state:
                found = visit(v)
                if found:
                    return found
        stack.pop()
        state[u] = 2
        return None

    for n in sorted(succ):
        if n not in state:
            found = visit(n)
            if found:
                return found
    return None


def transitive_closure(nodes: Sequence, edges: Iterable[tuple]) -> set[tuple]:
    """All ``(u, v)`` with a directed path u -> v. Assumes no cycle."""
    succ = _successors(nodes, edges)
    reach: dict = {}

    def below(u):
        if u not in reach:
            acc = set()
            for v in succ[u]:
                acc.add(v)
                acc |= below(v)
            reach[u] = acc
        return reach[u]

    return {(u, v) for u in succ for v in below(u)}


def build_order(verdicts: Iterable[PairVerdict], include_not_predicting: bool = False) -> PreferenceGraph:
    """Collect verdicts into a preference graph.

    Strict verdicts tagged ``not-predicting`` are left out unless
    ``include_not_predicting`` is set.  Raises ``CycleError`` when the strict
    preferences are cyclic.
    """
    nodes: set = set()
    strict: set = set()
    indiff: set = set()
    evidence: dict = {}
    seen: dict = {}
    for v in verdicts:
        nodes.update((v.left_id, v.right_id))
        if v.left_id == v.right_id:
            continue
        key = frozenset((v.left_id, v.right_id))
        oriented = v.oriented()
        if oriented and NOT_PREDICTING in v.tags and not include_not_predicting:
            oriented = None
            outcome = INCOMPARABLE
        else:
            outcome = oriented or v.relation
        if key in seen and seen[key] != outcome:
            raise DataError(f"conflicting verdicts for {sorted(key)}")
        seen[key] = outcome
        if oriented:
            strict.add(oriented)
            evidence[oriented] = v
        elif v.relation == INDIFFERENT:
            pair = tuple(sorted(key))
            indiff.add(pair)
            evidence[pair] = v
    return PreferenceGraph(
        nodes=tuple(sorted(nodes)),
        strict_edges=frozenset(strict),
        indifferences=frozenset(indiff),
        evidence=evidence,
    )


def hasse_edges(graph: PreferenceGraph) -> set[tuple]:
    """Cover pairs ``(lower, upper)``: upper is preferred with nothing in between."""
    closure = graph.closure()
    succ: dict = {}
    for u, v in closure:
        succ.setdefault(u, set()).add(v)
    covers = set()
    for u, v in closure:
        if not any((w, v) in closure for w in succ[u] if w != v):
            covers.add((u, v))
    return covers


def _quote(label) -> str:
    return '"' + str(label).replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(graph: PreferenceGraph, name: str = "preferences") -> str:
    """Graphviz DOT text of the Hasse diagram, better systems drawn higher.

    Indifferences are dashed undirected edges.  Output is byte-stable.
    """
    lines = [f"digraph {name} {{", "  rankdir=BT;", "  node [shape=box];"]
    lines += [f"  {_quote(n)};" for n in graph.nodes]
    lines += [f"  {_quote(u)} -> {_quote(v)};" for u, v in sorted(hasse_edges(graph))]
    lines += [
        f"  {_quote(a)} -> {_quote(b)} [style=dashed, dir=none, constraint=false];"
        for a, b in sorted(graph.indifferences)
    ]
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_dict(graph: PreferenceGraph) -> dict:
    return {
        "nodes": list(graph.nodes),
        "strict_edges": [list(e) for e in sorted(graph.strict_edges)],
        "hasse": [list(e) for e in sorted(hasse_edges(graph))],
        "indifferences": [list(p) for p in sorted(graph.indifferences)],
        "evidence": [graph.evidence[k].to_dict() for k in sorted(graph.evidence)],
    }
