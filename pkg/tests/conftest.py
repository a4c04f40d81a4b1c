"""Shared fixtures: small hand-checkable graphs and profiles."""

import itertools

import numpy as np
import pytest
from loguru import logger

from chunglu_cutoff.data.profiles import constant_profile, two_class_profile
from chunglu_cutoff.graphs.digraph import Digraph


def cycle(n: int) -> Digraph:
    return Digraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n: int) -> Digraph:
    return Digraph.from_edges(n, [(i, j) for i, j in itertools.permutations(range(n), 2)])


@pytest.fixture
def cycle3() -> Digraph:
    return cycle(3)


@pytest.fixture
def cycle5() -> Digraph:
    return cycle(5)


@pytest.fixture
def k4() -> Digraph:
    return complete(4)


@pytest.fixture
def three_vertex() -> Digraph:
    """0->1, 1->2, 2->0, 0->2: out-degrees (2, 1, 1)."""
    return Digraph.from_edges(3, [(0, 1), (1, 2), (2, 0), (0, 2)])


@pytest.fixture
def binary_tree() -> Digraph:
    """Complete binary out-tree of depth 2 with the leaves pointing back to the root."""
    edges = [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)]
    edges += [(leaf, 0) for leaf in (3, 4, 5, 6)]
    return Digraph.from_edges(7, edges)


@pytest.fixture
def const_profile():
    return constant_profile(200, 2.0)


@pytest.fixture
def two_class():
    return two_class_profile(200, 3.0, 1.5, 0.3)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _quiet_logs():
    """Keep loguru output to warnings during tests."""
    logger.remove()
    logger.add(lambda _: None, level="WARNING")
    yield
    # commands under test may have installed their own handlers
    logger.remove()
