"""Optimizer behavior on analytic objectives with known optima."""

import math

import numpy as np
import pytest

from thicket.direct import DirectResult, maximize_on_box


def quadratic(x, y):
    return -((x - 0.3) ** 2 + (y - 0.7) ** 2)


def two_peak(x, y):
    # global peak 10% higher than the local one, far enough apart that a
    # greedy descent from the wrong basin cannot cross over
    g = 1.1 * math.exp(-((x - 0.75) ** 2 + (y - 0.25) ** 2) / 0.02)
    l = 1.0 * math.exp(-((x - 0.2) ** 2 + (y - 0.8) ** 2) / 0.02)
    return g + l


class TestKnownOptima:
    def test_quadratic_argmax_within_tolerance(self):
        r = maximize_on_box(quadratic, (0.0, 0.0), (1.0, 1.0), 200)
        assert r.evaluations <= 200
        assert abs(r.point[0] - 0.3) <= 0.01
        assert abs(r.point[1] - 0.7) <= 0.01

    def test_constant_objective_returns_box_center(self):
        r = maximize_on_box(lambda x, y: 7.25, (2.0, -1.0), (6.0, 3.0), 100)
        assert r.point == (4.0, 1.0)
        assert r.value == 7.25

    def test_two_peak_finds_global_not_local(self):
        r = maximize_on_box(two_peak, (0.0, 0.0), (1.0, 1.0), 500,
                            min_box_diag=0.0)
        assert r.evaluations <= 500
        assert abs(r.point[0] - 0.75) <= 0.01
        assert abs(r.point[1] - 0.25) <= 0.01

    def test_value_matches_objective_at_returned_point(self):
        r = maximize_on_box(quadratic, (0.0, 0.0), (1.0, 1.0), 150)
        assert r.value == pytest.approx(quadratic(*r.point), abs=0.0)

    def test_rectangular_box_denormalization(self):
        # optimum off-center in a box with very different spans per axis
        f = lambda x, y: -((x - 40.0) ** 2 / 100.0 + (y - 0.02) ** 2 * 1e4)
        r = maximize_on_box(f, (0.0, 0.0), (90.0, 0.1), 300)
        assert abs(r.point[0] - 40.0) <= 0.9
        assert abs(r.point[1] - 0.02) <= 0.001


class TestDeterminism:
    def test_identical_runs_identical_evaluation_sequences(self):
        seqs = []
        for _ in range(2):
            calls = []

            def f(x, y):
                calls.append((x, y))
                return two_peak(x, y)

            r = maximize_on_box(f, (0.0, 0.0), (1.0, 1.0), 300)
            seqs.append((r, tuple(calls)))
        assert seqs[0][0] == seqs[1][0]
        assert seqs[0][1] == seqs[1][1]

    def test_result_independent_of_worker_count(self):
        results = []
        points = []
        for workers in (1, 4):
            calls = []

            def f(x, y):
                calls.append((x, y))
                return quadratic(x, y)

            r = maximize_on_box(f, (0.0, 0.0), (1.0, 1.0), 200,
                                workers=workers)
            results.append(r)
            points.append(sorted(calls))
        assert results[0] == results[1]
        assert points[0] == points[1]


class TestBudgetAndStopping:
    def test_never_exceeds_budget(self):
        for budget in (3, 10, 50, 137, 200):
            calls = []

            def f(x, y):
                calls.append(1)
                return two_peak(x, y)

            r = maximize_on_box(f, (0.0, 0.0), (1.0, 1.0), budget,
                                min_box_diag=0.0)
            assert r.evaluations == len(calls)
            assert r.evaluations <= budget

    def test_min_box_diag_stops_refinement_early(self):
        coarse = maximize_on_box(quadratic, (0.0, 0.0), (1.0, 1.0), 500,
                                 min_box_diag=0.3)
        fine = maximize_on_box(quadratic, (0.0, 0.0), (1.0, 1.0), 500,
                               min_box_diag=1e-4)
        assert coarse.evaluations < fine.evaluations

    def test_budget_below_first_trisection_returns_center(self):
        r = maximize_on_box(quadratic, (0.0, 0.0), (1.0, 1.0), 3)
        assert r.point == (0.5, 0.5)
        assert r.evaluations == 1


class TestErrors:
    def test_tiny_budget_rejected(self):
        with pytest.raises(ValueError):
            maximize_on_box(quadratic, (0.0, 0.0), (1.0, 1.0), 2)

    def test_degenerate_box_rejected(self):
        with pytest.raises(ValueError):
            maximize_on_box(quadratic, (0.0, 0.0), (0.0, 1.0), 100)
        with pytest.raises(ValueError):
            maximize_on_box(quadratic, (0.0, 1.0), (1.0, 1.0), 100)

    def test_non_finite_objective_raises(self):
        def f(x, y):
            if x > 0.6:
                return float("nan")
            return -(x ** 2 + y ** 2)

        with pytest.raises(ValueError, match="non-finite"):
            maximize_on_box(f, (0.0, 0.0), (1.0, 1.0), 200)


class TestDominanceOverRandomSampling:
    """At equal budget the split strategy should never lose to blind luck."""

    @pytest.mark.parametrize("budget", [50, 200])
    @pytest.mark.parametrize("func", [quadratic, two_peak],
                             ids=["quadratic", "two_peak"])
    def test_beats_uniform_random_baseline(self, budget, func):
        r = maximize_on_box(func, (0.0, 0.0), (1.0, 1.0), budget,
                            min_box_diag=0.0)
        for seed in range(5):
            rng = np.random.default_rng(seed)
            xs = rng.uniform(0.0, 1.0, (budget, 2))
            best_random = max(func(x, y) for x, y in xs)
            assert r.value >= best_random
