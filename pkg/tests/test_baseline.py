import io
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from predeval import baseline as bl
from predeval.errors import DataError


def brute_expected(y):
    # mean over targets of the mean |y_t - y_r| over the other cases
    n = len(y)
    per_target = [sum(abs(y[t] - y[r]) for r in range(n) if r != t) / (n - 1) for t in range(n)]
    diffs = [abs(y[t] - y[r]) for t, r in itertools.permutations(range(n), 2)]
    m = sum(diffs) / len(diffs)
    sd = (sum((d - m) ** 2 for d in diffs) / len(diffs)) ** 0.5
    return sum(per_target) / n, sd


class TestExact:
    def test_hand_enumeration(self):
        mean, _ = bl.exact_expected_mar([1, 2, 4])
        assert mean == pytest.approx(2.0)

    def test_two_points(self):
        assert bl.exact_expected_mar([0, 10]) == (10.0, 0.0)

    def test_constant(self):
        assert bl.exact_expected_mar([7, 7, 7]) == (0.0, 0.0)

    def test_rejects_single(self):
        with pytest.raises(DataError):
            bl.exact_expected_mar([3.0])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0.1, 1e4), min_size=2, max_size=12))
    def test_matches_brute_force(self, y):
        mean, sd = bl.exact_expected_mar(y)
        bm, bsd = brute_expected(y)
        assert mean == pytest.approx(bm, rel=1e-9, abs=1e-9)
        assert sd == pytest.approx(bsd, rel=1e-7, abs=1e-7)


class TestSimulate:
    def test_converges(self):
        d = bl.simulate([1, 2, 4], runs=100_000, seed=3)
        assert d.mean_mar == pytest.approx(2.0, rel=0.01)

    def test_sd_converges(self):
        y = np.random.default_rng(1).lognormal(7, 1, 30)
        d = bl.simulate(y, runs=5000, seed=0)
        _, sd = bl.exact_expected_mar(y)
        assert d.sd_abs_residuals == pytest.approx(sd, rel=0.02)

    def test_deterministic(self):
        a = bl.simulate([3, 9, 1, 22, 5], runs=700, seed=11)
        b = bl.simulate([3, 9, 1, 22, 5], runs=700, seed=11)
        assert np.array_equal(a.mar_samples, b.mar_samples)
        assert a.sd_abs_residuals == b.sd_abs_residuals

    @pytest.mark.parametrize("workers", [2, 4, 8])
    def test_workers_do_not_change_result(self, workers):
        y = np.arange(1, 40, dtype=float) ** 1.3
        a = bl.simulate(y, runs=1500, seed=5, workers=None)
        b = bl.simulate(y, runs=1500, seed=5, workers=workers)
        assert np.array_equal(a.mar_samples, b.mar_samples)
        assert a.mean_mar == b.mean_mar and a.sd_abs_residuals == b.sd_abs_residuals

    def test_seed_matters(self):
        a = bl.simulate([3, 9, 1, 22, 5], runs=50, seed=1)
        b = bl.simulate([3, 9, 1, 22, 5], runs=50, seed=2)
        assert not np.array_equal(a.mar_samples, b.mar_samples)

    def test_guesses_never_use_the_target(self):
        # with distinct outcomes a self-guess would give a zero residual
        y = [1.0, 100.0]
        d = bl.simulate(y, runs=300, seed=0)
        assert np.all(d.mar_samples == 99.0)

    def test_pooled_sd_equals_direct(self):
        # recompute the residual matrix from the same chunk streams
        y = np.array([2.0, 3.0, 5.0, 7.0, 11.0, 13.0])
        runs = 600
        d = bl.simulate(y, runs=runs, seed=9)
        ares = []
        for chunk, start in enumerate(range(0, runs, 256)):
            rng = np.random.default_rng([9, chunk])
            size = min(256, runs - start)
            r = rng.integers(0, y.size - 1, size=(size, y.size))
            r += r >= np.arange(y.size)
            ares.append(np.abs(y - y[r]))
        ares = np.concatenate(ares)
        assert np.allclose(d.mar_samples, ares.mean(axis=1))
        assert d.sd_abs_residuals == pytest.approx(ares.std(), rel=1e-12)

    def test_constant_sample(self):
        d = bl.simulate([5, 5, 5], runs=10)
        assert d.mean_mar == 0 and d.sd_abs_residuals == 0

    def test_mmre_absent_for_nonpositive(self):
        assert bl.simulate([0, 1, 2], runs=10).mmre_samples is None
        assert bl.simulate([1, 2, 3], runs=10).mmre_samples.shape == (10,)

    @pytest.mark.parametrize("bad", [dict(runs=0), dict(seed=-1)])
    def test_bad_arguments(self, bad):
        with pytest.raises(ValueError):
            bl.simulate([1, 2, 3], **bad)

    def test_rejects_nonfinite(self):
        with pytest.raises(DataError):
            bl.simulate([1, float("nan"), 3], runs=5)

    def test_random_guess_run_in_range(self):
        rng = np.random.default_rng(0)
        y = [1, 2, 4]
        v = bl.random_guess_run(y, rng)
        assert 1.0 <= v <= 3.0


def _dist(samples):
    s = np.asarray(samples, dtype=float)
    return bl.BaselineDistribution(len(s), s, float(s.mean()), 1.0, 0, np.array([1.0, 2.0]))


class TestQuantileAndP:
    def test_constant(self):
        assert bl.quantile(_dist([10] * 30), 0.05) == 10

    def test_interpolated_median(self):
        assert bl.quantile(_dist(range(1, 101)), 0.5) == 50.5

    @pytest.mark.parametrize("q", [0.0, 1.0, -0.2])
    def test_bad_q(self, q):
        with pytest.raises(ValueError):
            bl.quantile(_dist([1, 2]), q)

    def test_p_extremes(self):
        d = _dist(range(10, 20))
        assert bl.empirical_p(d, 0.0) == 1 / 11
        assert bl.empirical_p(d, 100.0) == 1.0

    def test_p_at_quantile(self):
        d = bl.simulate(np.random.default_rng(2).lognormal(5, 1, 25), runs=4000, seed=1)
        p = bl.empirical_p(d, bl.quantile(d, 0.05))
        assert abs(p - 0.05) <= 2 / d.runs

    @given(st.lists(st.floats(0, 1e3), min_size=1, max_size=50), st.floats(0.01, 0.98), st.floats(0.001, 0.5))
    def test_quantile_monotone(self, xs, q1, step):
        d = _dist(xs)
        assert bl.quantile(d, q1) <= bl.quantile(d, min(q1 + step, 0.99)) + 1e-9

    @given(st.lists(st.floats(0, 1e3), min_size=1, max_size=50), st.floats(0, 1e3), st.floats(0, 1e3))
    def test_p_monotone(self, xs, a, b):
        d = _dist(xs)
        lo, hi = sorted((a, b))
        assert bl.empirical_p(d, lo) <= bl.empirical_p(d, hi)

    def test_p_matches_count(self):
        xs = [5, 1, 3, 3, 9]
        d = _dist(xs)
        assert bl.empirical_p(d, 3) == (sum(x <= 3 for x in xs) + 1) / 6


class TestHistogram:
    def test_counts_sum_to_runs(self):
        d = bl.simulate([1, 5, 9, 13, 40], runs=333, seed=0)
        rows = bl.histogram(d, 7)
        assert len(rows) == 7 and sum(c for *_, c in rows) == 333
        assert all(rows[i][1] == rows[i + 1][0] for i in range(6))

    def test_csv(self):
        d = bl.simulate([1, 5, 9], runs=20, seed=0)
        buf = io.StringIO()
        bl.write_histogram_csv(d, buf, bins=3)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "bin_lower,bin_upper,count" and len(lines) == 4

    def test_bad_bins(self):
        with pytest.raises(ValueError):
            bl.histogram(bl.simulate([1, 2], runs=3), 0)


def test_distribution_immutable():
    d = bl.simulate([1, 2, 3], runs=5)
    with pytest.raises(ValueError):
        d.mar_samples[0] = 0.0
