import math

import numpy as np
import pytest
from scipy import stats

from chunglu_cutoff.data.models import NicePathParams
from chunglu_cutoff.graphs.structures import MassTree
from chunglu_cutoff.utils.errors import BudgetExceededError, ParameterError
from chunglu_cutoff.walks.quenched import (
    Q_COLUMNS,
    WalkTrace,
    classify_trace,
    default_ell,
    estimate_Q,
    estimate_Q_bar,
    exact_Q,
    exact_Q_bar,
    iter_paths,
    nice_mass_deficit,
    nice_mass_deficit_exact,
    path_law,
    q_rows,
    simulate_trace,
    support_threshold,
    unique_short_path,
)

from .conftest import cycle

BINARY_TREE_EDGES = [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)]


def _within(est, value, sigmas=4.5):
    sd = math.sqrt(max(value * (1 - value), 1e-12) / est.samples)
    return abs(est.value - value) <= sigmas * sd


def _nice_params(n: int) -> NicePathParams:
    return NicePathParams(n=n, eps=0.5, gamma=0.5 / 80, h_eps=1, s=2, t=4, H_bar=1.0, c_degree=10.0)


class TestTraces:
    def test_cycle_trace_has_unit_mass(self):
        trace = simulate_trace(cycle(6), 2, 7, seed=1)
        assert list(trace.vertices) == [2, 3, 4, 5, 0, 1, 2, 3]
        assert trace.log_mass == 0.0

    def test_complete_graph_mass(self, k4):
        trace = simulate_trace(k4, 0, 2, seed=9)
        assert trace.t == 2
        assert trace.log_mass == pytest.approx(-2 * math.log(3))
        assert trace.is_path_of(k4)

    def test_same_stream_same_trace(self, three_vertex):
        a = simulate_trace(three_vertex, 0, 20, seed=4, index=3)
        b = simulate_trace(three_vertex, 0, 20, seed=4, index=3)
        assert np.array_equal(a.vertices, b.vertices)

    def test_trace_law(self, three_vertex):
        law = path_law(three_vertex, 0, 4)
        assert sum(law.values()) == pytest.approx(1.0)
        reps = 4000
        counts = {}
        for i in range(reps):
            key = tuple(int(v) for v in simulate_trace(three_vertex, 0, 4, seed=17, index=i).vertices)
            counts[key] = counts.get(key, 0) + 1
        assert set(counts) <= set(law)
        keys = sorted(law)
        observed = [counts.get(k, 0) for k in keys]
        expected = [law[k] * reps for k in keys]
        assert stats.chisquare(observed, expected).pvalue > 0.001


class TestQ:
    def test_complete_graph_thresholds(self, k4):
        assert estimate_Q(k4, 0, 2, 0.1, 500, seed=1).value == 1.0
        assert estimate_Q(k4, 0, 2, 0.2, 500, seed=1).value == 0.0

    def test_exact_three_vertex(self, three_vertex):
        # paths 0-1-2 and 0-2-0, each of mass 1/2
        assert exact_Q(three_vertex, 0, 2, 0.4) == 1.0
        assert exact_Q(three_vertex, 0, 2, 0.5) == 0.0

    @pytest.mark.parametrize("theta", [1.0, 3.0])
    def test_theta_at_least_one(self, three_vertex, theta):
        assert exact_Q(three_vertex, 0, 3, theta) == 0.0
        assert estimate_Q(three_vertex, 0, 3, theta, 200, seed=0).value == 0.0

    def test_theta_below_smallest_mass(self, k4):
        assert exact_Q(k4, 0, 3, 0.5 * 3.0 ** -3) == pytest.approx(1.0)

    def test_theta_must_be_positive(self, k4):
        with pytest.raises(ParameterError):
            estimate_Q(k4, 0, 2, 0.0, 10, seed=0)

    def test_monotone_in_theta(self, three_vertex):
        values = [estimate_Q(three_vertex, 0, 6, theta, 3000, seed=8).value for theta in (0.01, 0.05, 0.1, 0.2)]
        assert values == sorted(values, reverse=True)

    def test_monte_carlo_matches_exact(self, three_vertex):
        exact = exact_Q(three_vertex, 0, 6, 0.2)
        assert 0.0 < exact < 1.0
        assert _within(estimate_Q(three_vertex, 0, 6, 0.2, 20_000, seed=5), exact)

    def test_budget(self, k4):
        with pytest.raises(BudgetExceededError):
            exact_Q(k4, 0, 6, 1e-9, budget=50)


class TestQBar:
    def test_zero_free_steps_is_q(self, three_vertex):
        a = estimate_Q_bar(three_vertex, 0, 4, 0.1, 0, 1000, seed=3)
        b = estimate_Q(three_vertex, 0, 4, 0.1, 1000, seed=3)
        assert a == b

    @pytest.mark.parametrize("ell", [0, 1, 5])
    def test_cycle_ignores_free_steps(self, ell):
        assert estimate_Q_bar(cycle(5), 0, 3, 0.5, ell, 100, seed=0).value == 1.0
        assert exact_Q_bar(cycle(5), 0, 3, 0.5, ell) == 1.0

    def test_exact_composition(self, three_vertex):
        first = exact_Q_bar(three_vertex, 0, 3, 0.2, 1)
        manual = 0.5 * exact_Q(three_vertex, 1, 3, 0.2) + 0.5 * exact_Q(three_vertex, 2, 3, 0.2)
        assert first == pytest.approx(manual)

    def test_monte_carlo_matches_exact(self, three_vertex):
        exact = exact_Q_bar(three_vertex, 0, 4, 0.3, 2)
        est = estimate_Q_bar(three_vertex, 0, 4, 0.3, 2, 20_000, seed=6)
        assert _within(est, exact)

    def test_negative_ell(self, k4):
        with pytest.raises(ParameterError):
            estimate_Q_bar(k4, 0, 2, 0.1, -1, 10, seed=0)


def test_default_ell():
    assert default_ell(1000) == round(3 * math.log(math.log(1000)))
    assert default_ell(2) == 0


def test_support_threshold():
    assert support_threshold(100, 0.5) == pytest.approx(100 ** -0.75)
    assert support_threshold(100, 0.0) == pytest.approx(0.01)


class TestUniqueShortPath:
    def test_two_routes(self, three_vertex):
        assert unique_short_path(three_vertex, 0, 2, 1)
        assert not unique_short_path(three_vertex, 0, 2, 2)

    def test_cycle_return(self, cycle3):
        assert unique_short_path(cycle3, 0, 0, 2)
        assert not unique_short_path(cycle3, 0, 0, 3)

    def test_unreachable(self):
        g = cycle(6)
        assert not unique_short_path(g, 0, 4, 2)


def test_iter_paths_counts(k4):
    assert len(list(iter_paths(k4, 0, 3))) == 27


class TestNicePaths:
    @pytest.fixture
    def full_tree(self, binary_tree):
        return MassTree.from_tree_edges(binary_tree, 0, 2, BINARY_TREE_EDGES)

    def test_only_mass_condition_fails(self, binary_tree, full_tree):
        trace = simulate_trace(binary_tree, 0, 4, seed=3)
        assert trace.log_mass == pytest.approx(math.log(1 / 8))
        verdict = classify_trace(binary_tree, trace, _nice_params(7), full_tree)
        assert not verdict.mass_small
        assert verdict.tree_prefix and verdict.unique_suffix and verdict.degree_bound
        assert not verdict.nice

    def test_off_tree_prefix(self, binary_tree):
        tree = MassTree.from_tree_edges(binary_tree, 0, 2, BINARY_TREE_EDGES[:-1])
        trace = WalkTrace(vertices=np.array([0, 2, 6, 0, 1]), log_mass=math.log(1 / 8), seed=0)
        assert not classify_trace(binary_tree, trace, _nice_params(3), tree).tree_prefix

    def test_length_mismatch(self, binary_tree, full_tree):
        trace = simulate_trace(binary_tree, 0, 3, seed=0)
        with pytest.raises(ParameterError):
            classify_trace(binary_tree, trace, _nice_params(7), full_tree)

    def test_all_paths_nice(self, binary_tree, full_tree):
        # a floor of 1/(3 ln^3 3) ~ 0.25 admits the mass-1/8 paths
        params = _nice_params(3)
        assert nice_mass_deficit_exact(binary_tree, 0, params, full_tree) == pytest.approx(0.0)
        assert nice_mass_deficit(binary_tree, 0, params, full_tree, 2000, seed=1).value == 0.0

    def test_deficit_from_missing_tree_edge(self, binary_tree):
        tree = MassTree.from_tree_edges(binary_tree, 0, 2, BINARY_TREE_EDGES[:-1])
        params = _nice_params(3)
        exact = nice_mass_deficit_exact(binary_tree, 0, params, tree)
        assert exact == pytest.approx(0.25)
        assert _within(nice_mass_deficit(binary_tree, 0, params, tree, 20_000, seed=2), exact)

    def test_mass_floor_failure(self, binary_tree, full_tree):
        assert nice_mass_deficit_exact(binary_tree, 0, _nice_params(7), full_tree) == pytest.approx(1.0)

    def test_tree_root_must_match(self, binary_tree):
        tree = MassTree.from_tree_edges(binary_tree, 1, 2, [(1, 3), (1, 4)])
        with pytest.raises(ParameterError):
            nice_mass_deficit(binary_tree, 0, _nice_params(3), tree, 10, seed=0)

    def test_exact_size_guard(self):
        g = cycle(13)
        tree = MassTree.from_tree_edges(g, 0, 2, [(0, 1), (1, 2)])
        with pytest.raises(ParameterError):
            nice_mass_deficit_exact(g, 0, _nice_params(13), tree)


class TestRows:
    def test_exact_rows(self, three_vertex):
        rows = q_rows(three_vertex, [0, 1], 2, [0.4, 0.6], 0, seed=0, exact=True)
        assert len(rows) == 4
        assert list(rows[0]) == Q_COLUMNS
        assert rows[0]["estimate"] == 1.0 and rows[0]["method"] == "exact"
        assert rows[1]["estimate"] == 0.0

    def test_monte_carlo_rows(self, k4):
        rows = q_rows(k4, [0], 2, [0.1], 100, seed=0)
        assert rows[0]["method"] == "monte_carlo"
        assert rows[0]["samples"] == 100
        assert rows[0]["ci_lo"] <= rows[0]["estimate"] <= rows[0]["ci_hi"]
