"""
Degree statistics and strong connectivity of a sampled graph.
"""

import math
from typing import Tuple

import numpy as np
from scipy.sparse.csgraph import connected_components

from ..data.models import DegreeSummary
from .digraph import Digraph


def empirical_c(g: Digraph) -> float:
    """Smallest C with max out-degree <= C ln n."""
    if g.n < 2:
        return 0.0
    return float(g.out_degree.max(initial=0)) / math.log(g.n)


def degree_summary(g: Digraph, c: float) -> DegreeSummary:
    """Extreme degrees and the bounded-degree event for the given C."""
    out_deg, in_deg = g.out_degree, g.in_degree
    delta_plus = int(out_deg.min())
    Delta_plus = int(out_deg.max(initial=0))
    return DegreeSummary(
        delta_plus=delta_plus,
        delta_minus=int(in_deg.min()),
        Delta_plus=Delta_plus,
        Delta_minus=int(in_deg.max(initial=0)),
        e_plus_holds=bool(delta_plus >= 2 and Delta_plus <= c * math.log(g.n)),
        c_used=float(c),
        c_empirical=empirical_c(g),
    )


def scc_labels(g: Digraph) -> Tuple[int, np.ndarray]:
    """Strongly connected components: count and per-vertex label."""
    count, labels = connected_components(g.adjacency(), directed=True, connection="strong")
    return int(count), labels


def strongly_connected(g: Digraph) -> Tuple[bool, int]:
    """(is strongly connected, number of components)."""
    count, _ = scc_labels(g)
    return count == 1, count


def degree_histogram(degrees: np.ndarray, k_max: int) -> np.ndarray:
    """Counts of degrees 0..k_max; larger degrees land in the last bin."""
    return np.bincount(np.minimum(degrees, k_max), minlength=k_max + 1)
