import itertools
import random
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from predeval import baseline as bl
from predeval.accuracy import PredictionRun
from predeval.effect import SmallSampleWarning
from predeval.errors import CycleError, DataError, MismatchError
from predeval.preference import (
    INCOMPARABLE,
    INDIFFERENT,
    LEFT_PRECEDES,
    NOT_PREDICTING,
    RIGHT_PRECEDES,
    DecisionConfig,
    PairVerdict,
    PreferenceGraph,
    beats_guessing,
    build_order,
    decide,
    emit_dot,
    evaluate_pair,
    graph_to_dict,
    guessing_verdicts,
    hasse_edges,
    q1_better_than_guessing,
    transitive_closure,
)

pytestmark = pytest.mark.filterwarnings("ignore::predeval.effect.SmallSampleWarning")


def strict(worse, better):
    return PairVerdict(worse, better, LEFT_PRECEDES)


def indiff(a, b):
    return PairVerdict(a, b, INDIFFERENT)


def graph_of(nodes, edges):
    return PreferenceGraph(tuple(sorted(nodes)), frozenset(edges), frozenset())


# --- brute-force oracles -------------------------------------------------

def reach_matrix(nodes, edges):
    idx = {n: i for i, n in enumerate(nodes)}
    m = np.zeros((len(nodes), len(nodes)), dtype=bool)
    for u, v in edges:
        m[idx[u], idx[v]] = True
    for k in range(len(nodes)):  # Warshall
        m |= m[:, [k]] & m[[k], :]
    return m


def brute_reduction(nodes, edges):
    """Keep an edge of the closure only if it cannot be reached without it."""
    closure = reach_matrix(nodes, edges)
    pairs = [(nodes[i], nodes[j]) for i, j in zip(*np.nonzero(closure))]
    keep = set()
    for e in pairs:
        rest = [p for p in pairs if p != e]
        m = reach_matrix(nodes, rest)
        if not m[nodes.index(e[0]), nodes.index(e[1])]:
            keep.add(e)
    return keep


def all_dags(n):
    nodes = [f"n{i}" for i in range(n)]
    slots = list(itertools.combinations(range(n), 2))
    for mask in range(2 ** len(slots)):
        yield nodes, [(nodes[i], nodes[j]) for b, (i, j) in enumerate(slots) if mask >> b & 1]


class TestHasse:
    def test_textbook(self):
        g = graph_of("ABC", {("A", "B"), ("B", "C"), ("A", "C")})
        assert hasse_edges(g) == {("A", "B"), ("B", "C")}

    def test_empty(self):
        assert hasse_edges(graph_of("AB", set())) == set()

    @pytest.mark.parametrize("n", range(1, 6))
    def test_exhaustive_small(self, n):
        rnd = random.Random(n)
        for nodes, edges in all_dags(n):
            # relabel so the topological order is not the lexicographic one
            perm = dict(zip(nodes, rnd.sample(nodes, n)))
            edges = [(perm[u], perm[v]) for u, v in edges]
            assert hasse_edges(graph_of(nodes, edges)) == brute_reduction(nodes, edges)

    def test_random_up_to_eight(self):
        rnd = random.Random(42)
        for _ in range(500):
            n = rnd.randint(1, 8)
            nodes = [f"s{i}" for i in range(n)]
            order = rnd.sample(nodes, n)
            p = rnd.random()
            edges = [(order[i], order[j]) for i in range(n) for j in range(i + 1, n) if rnd.random() < p]
            assert hasse_edges(graph_of(nodes, edges)) == brute_reduction(nodes, edges)

    def test_minimality(self):
        g = graph_of("ABCDE", {("A", "B"), ("B", "C"), ("A", "D"), ("D", "C"), ("A", "C"), ("C", "E")})
        covers = hasse_edges(g)
        assert transitive_closure(g.nodes, covers) == g.closure()
        for e in covers:
            assert transitive_closure(g.nodes, covers - {e}) != g.closure()


class TestBuildOrder:
    def test_transitivity_in_closure(self):
        g = build_order([strict("A", "B"), strict("B", "C")])
        assert ("A", "C") in g.closure()

    def test_two_cycle(self):
        with pytest.raises(CycleError) as info:
            build_order([strict("A", "B"), strict("B", "C"), strict("C", "A")])
        assert set(info.value.cycle) == {"A", "B", "C"}
        assert info.value.exit_code == 4

    def test_opposite_verdicts_conflict(self):
        with pytest.raises((CycleError, DataError)):
            build_order([strict("A", "B"), strict("B", "A")])

    def test_right_precedes_orientation(self):
        g = build_order([PairVerdict("B", "A", RIGHT_PRECEDES)])
        assert g.strict_edges == {("A", "B")}

    def test_analogy_variants_graph(self):
        verdicts = [strict("P0", "EBA"), strict("P0", "EBA+"), strict("P0", "EBA++"),
                    strict("EBA", "EBA++"), indiff("EBA", "EBA+"), indiff("EBA+", "EBA++")]
        g = build_order(verdicts)
        assert set(g.nodes) == {"P0", "EBA", "EBA+", "EBA++"}
        covers = hasse_edges(g)
        assert ("EBA", "EBA++") in covers
        assert ("EBA+", "EBA++") not in covers
        assert g.indifferences == {("EBA", "EBA+"), ("EBA+", "EBA++")}
        assert g.minimal_elements() == ["P0"]

    def test_indifference_not_transitive(self):
        g = build_order([indiff("A", "B"), indiff("B", "C"), strict("A", "C")])
        assert ("A", "C") in g.strict_edges

    def test_not_predicting_excluded_by_default(self):
        v = PairVerdict("A", "B", LEFT_PRECEDES, tags=(NOT_PREDICTING,))
        assert build_order([v]).strict_edges == frozenset()
        assert build_order([v], include_not_predicting=True).strict_edges == {("A", "B")}

    def test_strict_and_indifferent_rejected(self):
        with pytest.raises(DataError):
            PreferenceGraph(("A", "B"), frozenset({("A", "B")}), frozenset({("A", "B")}))


class TestDot:
    def test_single_node(self):
        text = emit_dot(graph_of("A", set()))
        assert '"A";' in text and "->" not in text and text.startswith("digraph")

    def test_one_edge(self):
        text = emit_dot(build_order([strict("A", "B")]))
        assert text.count("->") == 1 and '"A" -> "B";' in text

    def test_analogy_graph_edges(self):
        g = build_order([strict("P0", "EBA"), strict("P0", "EBA+"), strict("P0", "EBA++"),
                         strict("EBA", "EBA++"), indiff("EBA", "EBA+"), indiff("EBA+", "EBA++")])
        text = emit_dot(g)
        solid = {tuple(l.strip().rstrip(";").replace('"', "").split(" -> ")) for l in text.splitlines()
                 if "->" in l and "dashed" not in l}
        assert solid == hasse_edges(g)
        assert sum("dashed" in l for l in text.splitlines()) == 2
        assert "rankdir=BT" in text

    def test_quoting(self):
        text = emit_dot(graph_of(['a"b'], set()))
        assert '"a\\"b";' in text

    def test_byte_stable(self):
        vs = [strict("C", "A"), strict("B", "A"), indiff("B", "C")]
        assert emit_dot(build_order(vs)) == emit_dot(build_order(list(reversed(vs))))


def test_graph_json_shape():
    d = graph_to_dict(build_order([strict("A", "B"), indiff("B", "C")]))
    assert d["nodes"] == ["A", "B", "C"]
    assert d["hasse"] == [["A", "B"]] and d["indifferences"] == [["B", "C"]]
    assert len(d["evidence"]) == 2


# --- decision procedure --------------------------------------------------

class TestDecide:
    cfg = DecisionConfig()

    def test_not_significant(self):
        assert decide(124.7, 136.0, True, True, 0.714, 0.5, self.cfg)[0] == INDIFFERENT

    def test_significant_but_small(self):
        assert decide(2265, 1794, True, True, 0.035, 0.177, self.cfg)[0] == INDIFFERENT

    def test_strict(self):
        rel, tags = decide(2265, 1346, True, True, 0.00001, 0.345, self.cfg)
        assert rel == LEFT_PRECEDES and tags == ()

    def test_better_must_pass_q1(self):
        assert decide(10, 5, True, False, 0.001, 2.0, self.cfg)[0] == INDIFFERENT

    def test_better_passes_worse_fails(self):
        assert decide(10, 5, False, True, 0.001, 2.0, self.cfg)[0] == LEFT_PRECEDES

    def test_both_fail_tagged(self):
        rel, tags = decide(331.6, 291.6, False, False, 0.001, 2.0, self.cfg)
        assert NOT_PREDICTING in tags

    def test_threshold_inclusive(self):
        assert decide(2, 1, True, True, 0.01, 0.2, self.cfg)[0] == LEFT_PRECEDES
        assert decide(2, 1, True, True, 0.05, 0.9, self.cfg)[0] == INDIFFERENT

    def test_config_validation(self):
        for bad in (dict(alpha=0), dict(alpha=1), dict(delta_threshold=-1), dict(tail="x"), dict(pairing="x")):
            with pytest.raises(ValueError):
                DecisionConfig(**bad)


def make_runs(seed=0, n=30, gap=0.5, noise=0.1):
    rng = np.random.default_rng(seed)
    y = rng.lognormal(6, 0.8, n)
    good = y * (1 + rng.normal(0, noise, n))
    bad = y * (1 + rng.normal(0, noise + gap, n))
    return PredictionRun("good", y, np.abs(good) + 1), PredictionRun("bad", y, np.abs(bad) + 1)


class TestEvaluatePair:
    def test_good_beats_bad(self):
        good, bad = make_runs()
        base = bl.simulate(good.actual, runs=500)
        v = evaluate_pair(bad, good, base)
        assert v.relation == LEFT_PRECEDES
        assert v.test.startswith("wilcoxon") and v.q1_right

    def test_self_is_indifferent(self):
        good, _ = make_runs()
        base = bl.simulate(good.actual, runs=200)
        v = evaluate_pair(good, PredictionRun("copy", good.actual, good.predicted), base)
        assert v.relation == INDIFFERENT and v.p_value == 1.0

    def test_cross_dataset_incomparable(self):
        a = PredictionRun("a", [1, 2, 3], [1, 2, 3], dataset="x")
        b = PredictionRun("b", [1, 2, 3], [1, 2, 3], dataset="y")
        assert evaluate_pair(a, b, bl.simulate([1, 2, 3], runs=10)).relation == INCOMPARABLE

    def test_mismatched_baseline(self):
        good, bad = make_runs()
        with pytest.raises(MismatchError):
            evaluate_pair(good, bad, bl.simulate([1.0, 2.0, 3.0], runs=10))

    def test_forced_pairing_on_misaligned(self):
        good, _ = make_runs()
        other = PredictionRun("other", good.actual[::-1], good.predicted[::-1])
        base = bl.simulate(good.actual, runs=50)
        with pytest.raises(MismatchError):
            evaluate_pair(good, other, base, DecisionConfig(pairing="paired"))
        assert evaluate_pair(good, other, base).test.startswith("mann-whitney")

    @pytest.mark.parametrize("seed", range(5))
    def test_antisymmetry(self, seed):
        good, bad = make_runs(seed, gap=0.2)
        base = bl.simulate(good.actual, runs=300)
        v1, v2 = evaluate_pair(good, bad, base), evaluate_pair(bad, good, base)
        assert v2 == v1.swapped() or (v1.relation == v2.relation == INDIFFERENT)
        assert v1.p_value == v2.p_value and v1.delta_magnitude == pytest.approx(v2.delta_magnitude)

    @pytest.mark.parametrize("c", [0.01, 3.0, 1000.0])
    def test_scale_invariance(self, c):
        good, bad = make_runs(1, gap=0.3)
        v = evaluate_pair(good, bad, bl.simulate(good.actual, runs=300))
        gs, bs = good.scaled(c), bad.scaled(c)
        w = evaluate_pair(gs, bs, bl.simulate(gs.actual, runs=300))
        assert w.relation == v.relation
        assert w.delta_magnitude == pytest.approx(v.delta_magnitude)

    def test_small_sample_warns(self):
        good, bad = make_runs(n=8)
        with pytest.warns(SmallSampleWarning):
            evaluate_pair(good, bad, bl.simulate(good.actual, runs=100))


class TestQ1:
    def test_perfect_passes(self):
        y = [10.0, 20.0, 40.0, 80.0]
        r = q1_better_than_guessing(PredictionRun("p", y, y), bl.simulate(y, runs=200))
        assert r.passed and r.mar == 0

    def test_published_thresholds(self):
        assert not beats_guessing(291.6, 210.8)
        assert beats_guessing(136.0, 201.2)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.0, 1.0))
    def test_monotone(self, shrink):
        good, _ = make_runs(3, noise=0.6)
        base = bl.simulate(good.actual, runs=300)
        # move every prediction towards the actual
        closer = PredictionRun("c", good.actual, good.actual + (good.predicted - good.actual) * shrink)
        if q1_better_than_guessing(good, base).passed:
            assert q1_better_than_guessing(closer, base).passed

    def test_guessing_verdicts(self):
        good, bad = make_runs()
        base = bl.simulate(good.actual, runs=300)
        y = good.actual
        mean_run = PredictionRun("mean", y, np.full(y.size, y.mean() * 5))
        vs = {v.right_id: v for v in guessing_verdicts([good, mean_run], base)}
        assert vs["good"].relation == LEFT_PRECEDES and vs["good"].left_id == "P0"
        assert vs["mean"].relation == INDIFFERENT

    def test_repeated_runs_accepted(self):
        good, _ = make_runs()
        y2 = np.concatenate([good.actual, good.actual])
        run = PredictionRun("r", y2, np.concatenate([good.predicted, good.predicted]))
        assert q1_better_than_guessing(run, bl.simulate(good.actual, runs=100)).passed
