import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from chunglu_cutoff.analyzers.profile_analyzer import connection_row, expected_out_degrees
from chunglu_cutoff.data.models import WeightProfile
from chunglu_cutoff.data.profiles import constant_profile, two_class_profile
from chunglu_cutoff.graphs.generator import RowSampler, sample_digraph, sample_digraph_naive
from chunglu_cutoff.utils.errors import ParameterError
from chunglu_cutoff.utils.rng import derive_seed, replica_seeds, row_generator


class TestDegenerateProfiles:
    def test_certain_edges_give_two_cycle(self):
        profile = constant_profile(2, 10.0)
        for seed in range(5):
            g = sample_digraph(profile, seed)
            assert g.edge_count == 2 and g.has_edge(0, 1) and g.has_edge(1, 0)

    def test_saturated_profile_is_complete(self):
        profile = constant_profile(10, 10.0)
        assert sample_digraph(profile, 1).edge_count == 90
        assert sample_digraph_naive(profile, 1).edge_count == 90

    def test_vanishing_weights_give_no_edges(self):
        profile = constant_profile(50, 1e-9)
        assert sample_digraph(profile, 3).edge_count == 0
        assert sample_digraph_naive(profile, 3).edge_count == 0


class TestDeterminism:
    def test_same_seed_same_graph(self, two_class):
        a = sample_digraph(two_class, 42)
        b = sample_digraph(two_class, 42)
        assert a.identical(b)
        assert a.seed == 42 and a.profile_digest == two_class.digest()

    def test_different_seeds_differ(self, two_class):
        assert not sample_digraph(two_class, 1).identical(sample_digraph(two_class, 2))

    def test_rows_independent_of_order(self, two_class):
        sampler = RowSampler(two_class)
        forward = sampler.rows(range(20), seed=5)
        backward = RowSampler(two_class).rows(range(19, -1, -1), seed=5)[::-1]
        assert all(np.array_equal(a, b) for a, b in zip(forward, backward))

    @pytest.mark.slow
    def test_worker_count_does_not_matter(self):
        profile = two_class_profile(5000, 3.0, 1.5, 0.3)
        assert sample_digraph(profile, 7, workers=1).identical(sample_digraph(profile, 7, workers=2))


def test_row_generator_keys_on_seed_and_row():
    a = row_generator(1, 2).random(4)
    assert np.array_equal(a, row_generator(1, 2).random(4))
    assert not np.array_equal(a, row_generator(1, 3).random(4))
    assert len(set(replica_seeds(10, 50))) == 50
    assert derive_seed(10, 2, 0) == replica_seeds(10, 1)[0]


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(min_value=0.05, max_value=20.0), min_size=2, max_size=30),
    st.integers(min_value=0, max_value=2 ** 63),
)
def test_structural_invariants(weights, seed):
    w = np.array(weights)
    profile = WeightProfile(w_plus=w, w_minus=w[::-1].copy())
    g = sample_digraph(profile, seed)
    edges = g.edges()
    assert np.all(edges[:, 0] != edges[:, 1])
    for x in range(g.n):
        assert np.all(np.diff(g.out_neighbors(x)) > 0)
    assert g.in_degree.sum() == g.edge_count
    # certain edges are always present
    row = connection_row(profile, 0)
    for y in np.flatnonzero(row >= 1.0):
        assert g.has_edge(0, int(y))


def test_naive_sampler_guard():
    with pytest.raises(ParameterError):
        sample_digraph_naive(constant_profile(6000, 2.0), 0)


def test_edge_count_near_expectation():
    profile = constant_profile(500, 2.0)
    p = 4 * math.log(500) / 500
    mean = 500 * 499 * p
    sd = math.sqrt(500 * 499 * p * (1 - p))
    counts = [sample_digraph(profile, seed).edge_count for seed in (11, 12)]
    assert all(abs(c - mean) <= 4 * sd for c in counts)
    assert counts[0] != counts[1]


@pytest.mark.slow
def test_pair_frequencies_match_probabilities():
    profile = two_class_profile(20, 4.0, 1.5, 0.3)
    reps = 4000
    counts = np.zeros((20, 20))
    for seed in range(reps):
        counts += sample_digraph(profile, seed).adjacency().toarray()
    p = np.array([connection_row(profile, x) for x in range(20)])
    sd = np.sqrt(p * (1 - p) / reps)
    off_diagonal = ~np.eye(20, dtype=bool)
    assert np.all(np.abs(counts / reps - p)[off_diagonal] <= 4.5 * sd[off_diagonal] + 1e-12)
    assert np.all(np.diag(counts) == 0)


@pytest.mark.slow
def test_fast_and_naive_samplers_agree_in_law():
    profile = two_class_profile(200, 3.0, 1.5, 0.3)
    fast = [sample_digraph(profile, derive_seed(1, 0, r)) for r in range(300)]
    naive = [sample_digraph_naive(profile, derive_seed(1, 1, r)) for r in range(300)]
    p_edges = stats.ks_2samp([g.edge_count for g in fast], [g.edge_count for g in naive]).pvalue
    p_max = stats.ks_2samp([g.out_degree.max() for g in fast], [g.out_degree.max() for g in naive]).pvalue
    assert p_edges > 0.001 and p_max > 0.001


@pytest.mark.slow
def test_mean_out_degree_matches_expectation():
    profile = two_class_profile(100, 3.0, 1.5, 0.3)
    reps = 2000
    total = np.zeros(100)
    for seed in range(reps):
        total += sample_digraph(profile, seed).out_degree
    expected = expected_out_degrees(profile)
    var = np.array([np.sum(r * (1 - r)) for r in (connection_row(profile, x) for x in range(100))])
    assert np.all(np.abs(total / reps - expected) <= 5 * np.sqrt(var / reps))
