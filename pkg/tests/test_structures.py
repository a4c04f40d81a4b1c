import math

import networkx as nx
import numpy as np
import pytest

from chunglu_cutoff.analyzers.entropy_analyzer import entropy_stats_exact
from chunglu_cutoff.data.models import EntropicStats, EstimationMethod, NicePathParams
from chunglu_cutoff.data.profiles import constant_profile
from chunglu_cutoff.graphs.degrees import degree_summary
from chunglu_cutoff.graphs.digraph import Digraph
from chunglu_cutoff.graphs.generator import sample_digraph
from chunglu_cutoff.graphs.structures import (
    IN,
    MassTree,
    ball,
    build_mass_tree,
    dump_mass_tree,
    escape_profile,
    in_ball_size_check,
    is_root,
    nice_params,
    root_radius,
    roots,
    tree_excess,
    tree_excess_values,
    tree_mass_coverage,
    write_roots,
)
from chunglu_cutoff.utils.errors import ParameterError

from .conftest import cycle

OUT_TREE = [(0, 1), (0, 2), (1, 3)]


def _params(n: int = 8, s: int = 2, h_eps: int = 1, H_bar: float = 1.0, c_degree: float = 10.0) -> NicePathParams:
    return NicePathParams(n=n, eps=0.5, gamma=0.5 / 80, h_eps=h_eps, s=s, t=s + h_eps + 1,
                          H_bar=H_bar, c_degree=c_degree)


@pytest.fixture
def fan_graph() -> Digraph:
    """Root 0 with children 1, 2; each child has out-degree 3; leaves return to 0."""
    edges = [(0, 1), (0, 2), (1, 3), (1, 4), (1, 5), (2, 6), (2, 7), (2, 0)]
    edges += [(leaf, 0) for leaf in range(3, 8)]
    return Digraph.from_edges(8, edges)


class TestBall:
    def test_radius_zero(self, k4):
        nb = ball(k4, 2, 0)
        assert nb.vertices == [2]
        assert nb.internal_edge_count == 0

    def test_out_star(self):
        star = Digraph.from_edges(3, [(0, 1), (0, 2)])
        nb = ball(star, 0, 1)
        assert sorted(nb.vertices) == [0, 1, 2]
        assert nb.internal_edge_count == 2
        assert 1 in nb and nb.distance[2] == 1

    def test_in_ball(self, cycle5):
        nb = ball(cycle5, 0, 2, IN)
        assert sorted(nb.vertices) == [0, 3, 4]

    def test_matches_networkx_distances(self):
        g = sample_digraph(constant_profile(300, 1.6), 3)
        reference = nx.DiGraph()
        reference.add_nodes_from(range(g.n))
        reference.add_edges_from(map(tuple, g.edges()))
        for x in (0, 17, 150):
            expected = nx.single_source_shortest_path_length(reference, x, cutoff=3)
            assert ball(g, x, 3).distance == expected

    def test_bad_arguments(self, k4):
        with pytest.raises(ParameterError):
            ball(k4, 0, -1)
        with pytest.raises(ParameterError):
            ball(k4, 0, 1, "sideways")


class TestTreeExcess:
    @pytest.mark.parametrize(
        "extra, expected",
        [([], 0), ([(2, 3)], 1), ([(2, 3), (2, 1)], 2)],
    )
    def test_counts_extra_edges(self, extra, expected):
        g = Digraph.from_edges(4, OUT_TREE + extra)
        assert tree_excess(ball(g, 0, 2)) == expected

    def test_values_for_many_vertices(self, cycle3):
        assert list(tree_excess_values(cycle3, 3, [0, 1, 2])) == [1, 1, 1]
        assert list(tree_excess_values(cycle3, 2, [0])) == [0]


class TestRoots:
    def test_tree_vertices_are_roots(self):
        g = Digraph.from_edges(4, OUT_TREE)
        assert all(is_root(g, x, 2) for x in range(4))

    def test_short_cycle_is_not_a_root(self, cycle3):
        assert not is_root(cycle3, 0, 3)
        assert is_root(cycle3, 0, 2)

    def test_root_set(self, binary_tree):
        found = set(roots(binary_tree, 2))
        assert 0 in found
        assert 1 not in found
        assert list(roots(binary_tree, 2, [1, 0])) == [0]

    def test_radius_must_be_positive(self, k4):
        with pytest.raises(ParameterError):
            is_root(k4, 0, 0)


class TestInBall:
    def test_cycle(self, cycle5):
        ok, largest = in_ball_size_check(cycle5, 2, 0.5)
        assert largest == 3 and ok

    def test_hub(self):
        n = 50
        g = Digraph.from_edges(n, [(i, 0) for i in range(1, n)] + [(0, 1)])
        ok, largest = in_ball_size_check(g, 1, 0.1)
        assert largest == n and not ok


def test_escape_profile(binary_tree):
    root_set = roots(binary_tree, 2)
    profile = escape_profile(binary_tree, 0, root_set, 3)
    assert profile[0] == 0.0
    # after one step the walk sits on 1 or 2, neither a root
    assert profile[1] == pytest.approx(1.0)
    assert np.all((profile >= 0) & (profile <= 1))


class TestMassTree:
    def test_hand_example(self, fan_graph):
        tree = build_mass_tree(fan_graph, 0, _params())
        assert list(map(tuple, tree.graph_edges[:2])) == [(0, 1), (0, 2)]
        assert list(tree.selected_mass[:2]) == [0.5, 0.5]
        assert np.allclose(tree.selected_mass[2:], 1 / 6)
        assert tree.kappa == 8
        assert tree.discarded_mass == pytest.approx(1 / 6)
        assert not tree.is_tree_edge[5]
        assert tuple(tree.graph_edges[5]) == (2, 0)
        assert max(tree.node_depth.values()) == 2

    def test_full_tree_below_threshold(self, binary_tree):
        tree = build_mass_tree(binary_tree, 0, _params(n=7, s=2, H_bar=1.0))
        assert tree.kappa == 6
        assert tree.discarded_mass == 0.0
        assert sorted(tree.node_mass) == list(range(7))
        assert tree_mass_coverage(binary_tree, 0, tree, 2) == pytest.approx(1.0)

    def test_threshold_stops_growth(self, fan_graph):
        # exp(-2 * 0.5) = 0.37 keeps only the root edges
        tree = build_mass_tree(fan_graph, 0, _params(H_bar=0.5))
        assert tree.kappa == 2

    def test_coverage_of_partial_tree(self):
        star = Digraph.from_edges(3, [(0, 1), (0, 2), (1, 0), (2, 0)])
        tree = MassTree.from_tree_edges(star, 0, 1, [(0, 1)])
        assert tree_mass_coverage(star, 0, tree, 1) == pytest.approx(0.5)

    def test_coverage_of_fan(self, fan_graph):
        tree = build_mass_tree(fan_graph, 0, _params())
        assert tree_mass_coverage(fan_graph, 0, tree, 2) == pytest.approx(5 / 6)

    def test_selection_bounds_on_sampled_graph(self):
        g = sample_digraph(constant_profile(300, 2.5), 8)
        assert degree_summary(g, 10.0).delta_plus >= 2
        params = _params(n=300, s=3, H_bar=2.0)
        tree = build_mass_tree(g, 0, params)
        masses = tree.selected_mass
        assert np.all(np.diff(masses) <= 1e-15)
        ell = np.arange(1, masses.size + 1)
        assert np.all(masses <= 2.0 / (2.0 + ell) + 1e-15)
        assert tree.kappa <= 2.0 * math.exp(params.H_bar * params.s)
        assert np.all(masses >= params.tree_threshold)

    def test_dump(self, tmp_path, fan_graph):
        tree = build_mass_tree(fan_graph, 0, _params())
        lines = dump_mass_tree(tree, tmp_path / "tree.txt").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 8
        assert lines[0].split() == ["1", "0", "1", "0.5", "1"]
        assert lines[5].split()[-1] == "0"


def test_write_roots(tmp_path):
    path = write_roots(np.array([3, 1, 4]), tmp_path / "roots.txt")
    assert path.read_text(encoding="utf-8") == "3\n1\n4\n"


class TestNiceParams:
    def _stats(self, n: float, H: float) -> EntropicStats:
        return EntropicStats.from_moments(int(n), H, 1.0, EstimationMethod.EXACT)

    def test_root_radius(self):
        assert root_radius(10 ** 6, 0.5, 0.05) == 6
        assert root_radius(100, 0.5, 2.0) == 0
        with pytest.raises(ParameterError):
            root_radius(100, 0.5, 0.0)

    def test_radius_rounding_to_zero_is_an_error(self):
        n = int(math.exp(20))
        with pytest.raises(ParameterError):
            nice_params(n, 0.8, self._stats(n, 2.0))

    def test_identity_with_explicit_radius(self):
        n = 100_000
        params = nice_params(n, 0.5, self._stats(n, 2.4), h_eps=2)
        assert params.t == params.s + params.h_eps + 1
        assert params.s == math.floor((1 - 0.5 / 80) * math.log(n) / 2.4)
        assert params.H_bar == pytest.approx((1 + 0.5 / 80) * 2.4)

    def test_derived_radius(self):
        n = 10 ** 12
        params = nice_params(n, 0.9, self._stats(n, 0.5))
        assert params.h_eps == math.floor(0.9 * math.log(n) / 10.0)

    def test_window_mode(self):
        n = 100_000
        es = self._stats(n, 2.4)
        t_lam = int(round(es.t_ent + 2 * es.w_n))
        params = nice_params(n, 0.5, es, h_eps=1, t_lambda=t_lam)
        assert params.s == t_lam - 1

    def test_eps_range(self):
        with pytest.raises(ParameterError):
            nice_params(1000, 1.5, self._stats(1000, 2.0), h_eps=1)

    def test_from_exact_stats(self):
        profile = constant_profile(500, 2.0)
        params = nice_params(500, 0.5, entropy_stats_exact(profile), h_eps=1)
        assert params.s >= 1
        assert params.c_degree == 10.0


def test_cycle_helper_ball_wraps():
    assert ball(cycle(4), 0, 10).size == 4
