"""
Quenched path-mass statistics on a fixed graph.

A trace is a simple random walk path together with its log-mass, the sum of
-ln D over its non-terminal vertices. Q_{x,t}(theta) is the probability that
the t-step trace from x has mass strictly above theta.
"""

import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..data.models import Estimate, NicePathParams, NicePathVerdict
from ..graphs.digraph import Digraph
from ..graphs.structures import MassTree, is_root
from ..utils.errors import ParameterError, SinkVertexError
from ..utils.rng import TAG_WALK, stream
from .kernel import DEFAULT_BUDGET, iter_heavy_paths, t_step_distribution

Q_COLUMNS = ["x", "t", "theta", "estimate", "ci_lo", "ci_hi", "method", "samples"]

EXACT_MAX_N = 12
EXACT_MAX_T = 6


@dataclass(frozen=True, eq=False)
class WalkTrace:
    """One quenched trajectory of length t."""

    vertices: np.ndarray
    log_mass: float
    seed: int

    @property
    def t(self) -> int:
        return int(self.vertices.size) - 1

    def is_path_of(self, g: Digraph) -> bool:
        return all(g.has_edge(int(u), int(v)) for u, v in zip(self.vertices[:-1], self.vertices[1:]))


def default_ell(n: int) -> int:
    """3 ln ln n free steps, at least 0."""
    return max(0, int(round(3.0 * math.log(math.log(n))))) if n > 2 else 0


def support_threshold(n: int, beta: float) -> float:
    """theta = n^-(1 - beta^2), the mass level of the lower-bound support set."""
    return float(n) ** (-(1.0 - beta * beta))


def simulate_traces(
    g: Digraph, starts: np.ndarray, t: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """Walk every start for t steps at once.

    Returns the (m, t+1) vertex matrix and the per-step log-degrees, shape
    (m, t), so callers can sum any window of the mass.
    """
    if t < 0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    starts = np.asarray(starts, dtype=np.int64)
    deg = g.out_degree
    indptr, indices = g.out_indptr, g.out_indices
    paths = np.empty((starts.size, t + 1), dtype=np.int64)
    log_deg = np.empty((starts.size, t))
    paths[:, 0] = starts
    pos = starts
    for step in range(t):
        d = deg[pos]
        if np.any(d == 0):
            raise SinkVertexError(int(pos[np.argmax(d == 0)]))
        idx = np.minimum((rng.random(pos.size) * d).astype(np.int64), d - 1)
        log_deg[:, step] = np.log(d)
        pos = indices[indptr[pos] + idx]
        paths[:, step + 1] = pos
    return paths, log_deg


def simulate_trace(g: Digraph, x: int, t: int, seed: int, index: int = 0) -> WalkTrace:
    """One trace from x on the stream (seed, walk, index)."""
    paths, log_deg = simulate_traces(g, np.array([x]), t, stream(seed, TAG_WALK, index))
    return WalkTrace(vertices=paths[0], log_mass=float(-log_deg[0].sum()), seed=seed)


def _validate_theta(theta: float) -> None:
    if not theta > 0.0:
        raise ParameterError(f"theta must be positive, got {theta}")


def estimate_Q(g: Digraph, x: int, t: int, theta: float, n_samples: int, seed: int) -> Estimate:
    """Monte Carlo Q_{x,t}(theta) with a Wilson interval."""
    return estimate_Q_bar(g, x, t, theta, 0, n_samples, seed)


def estimate_Q_bar(
    g: Digraph, x: int, t: int, theta: float, ell: int, n_samples: int, seed: int
) -> Estimate:
    """Q after ``ell`` unrecorded steps: sum_y P^ell(x, y) Q_{y,t}(theta)."""
    _validate_theta(theta)
    if ell < 0:
        raise ParameterError(f"ell must be nonnegative, got {ell}")
    rng = stream(seed, TAG_WALK, x)
    _, log_deg = simulate_traces(g, np.full(n_samples, x, dtype=np.int64), ell + t, rng)
    log_mass = -log_deg[:, ell:].sum(axis=1)
    hits = int(np.count_nonzero(log_mass > math.log(theta)))
    return Estimate.from_counts(hits, n_samples)


def exact_Q(g: Digraph, x: int, t: int, theta: float, budget: int = DEFAULT_BUDGET) -> float:
    """Total mass of t-paths from x with mass > theta, by pruned enumeration."""
    _validate_theta(theta)
    return float(min(1.0, sum(m for _, m in iter_heavy_paths(g, x, t, theta, strict=True, budget=budget))))


def exact_Q_bar(g: Digraph, x: int, t: int, theta: float, ell: int) -> float:
    """sum_y P^ell(x, y) exact_Q(y, t, theta)."""
    first = t_step_distribution(g, x, ell)
    return float(sum(first[y] * exact_Q(g, int(y), t, theta) for y in np.flatnonzero(first)))


def iter_paths(g: Digraph, x: int, t: int) -> Iterator[Tuple[Tuple[int, ...], float]]:
    """Every t-step path from x with its mass; small graphs only."""
    deg = g.out_degree

    def walk(prefix: Tuple[int, ...], mass: float) -> Iterator[Tuple[Tuple[int, ...], float]]:
        if len(prefix) == t + 1:
            yield prefix, mass
            return
        v = prefix[-1]
        if deg[v] == 0:
            raise SinkVertexError(v)
        for w in g.out_neighbors(v):
            yield from walk(prefix + (int(w),), mass / deg[v])

    yield from walk((int(x),), 1.0)


def path_law(g: Digraph, x: int, t: int) -> Dict[Tuple[int, ...], float]:
    """Exact law of the t-step trace from x."""
    return dict(iter_paths(g, x, t))


def unique_short_path(g: Digraph, a: int, y: int, h: int) -> bool:
    """True iff exactly one path of length 0..h runs from a to y.

    Counts backwards from y over in-edges; counts are capped at 2.
    """
    counts = {int(y): 1}
    total = 1 if a == y else 0
    for _ in range(h):
        nxt: Dict[int, int] = {}
        for w, c in counts.items():
            for v in g.in_neighbors(w):
                v = int(v)
                nxt[v] = min(2, nxt.get(v, 0) + c)
        counts = nxt
        total += counts.get(int(a), 0)
        if total >= 2:
            return False
    return total == 1


def _check_tree(tree: MassTree, root: int, params: NicePathParams) -> None:
    if tree.root != root or tree.s != params.s:
        raise ParameterError(
            f"mass tree built for (x={tree.root}, s={tree.s}), needed (x={root}, s={params.s})"
        )


def _flags(
    g: Digraph,
    paths: np.ndarray,
    log_mass: np.ndarray,
    params: NicePathParams,
    tree: MassTree,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n, s, h = g.n, params.s, params.h_eps
    mass_small = log_mass <= math.log(params.mass_floor)

    codes = paths[:, :s] * n + paths[:, 1 : s + 1]
    tree_prefix = np.isin(codes, tree.tree_edge_codes(n)).all(axis=1)

    cache: Dict[Tuple[int, int], bool] = {}
    unique = np.empty(paths.shape[0], dtype=bool)
    for i, (a, y) in enumerate(zip(paths[:, params.t - h], paths[:, params.t])):
        key = (int(a), int(y))
        if key not in cache:
            cache[key] = unique_short_path(g, key[0], key[1], h)
        unique[i] = cache[key]

    degree_bound = g.out_degree[paths[:, s]] <= params.c_degree * math.log(n)
    return mass_small, tree_prefix, unique, degree_bound


def classify_trace(
    g: Digraph, trace: WalkTrace, params: NicePathParams, tree: MassTree
) -> NicePathVerdict:
    """Check the four nice-path conditions on one trace."""
    if trace.t != params.t:
        raise ParameterError(f"trace has length {trace.t}, nice paths have length {params.t}")
    _check_tree(tree, int(trace.vertices[0]), params)
    flags = _flags(g, trace.vertices[None, :], np.array([trace.log_mass]), params, tree)
    return NicePathVerdict(
        mass_small=bool(flags[0][0]),
        tree_prefix=bool(flags[1][0]),
        unique_suffix=bool(flags[2][0]),
        degree_bound=bool(flags[3][0]),
    )


def nice_mass_deficit(
    g: Digraph, x: int, params: NicePathParams, tree: MassTree, n_samples: int, seed: int
) -> Estimate:
    """Monte Carlo probability that the length-t trace from x is not nice."""
    _check_tree(tree, x, params)
    if not is_root(g, x, params.h_eps):
        logger.warning(f"Vertex {x} is not an h_eps-root; the deficit may be large")
    rng = stream(seed, TAG_WALK, x)
    paths, log_deg = simulate_traces(g, np.full(n_samples, x, dtype=np.int64), params.t, rng)
    flags = _flags(g, paths, -log_deg.sum(axis=1), params, tree)
    nice = np.logical_and.reduce(flags)
    return Estimate.from_counts(int(n_samples - np.count_nonzero(nice)), n_samples)


def nice_mass_deficit_exact(g: Digraph, x: int, params: NicePathParams, tree: MassTree) -> float:
    """1 minus the total mass of nice paths, by full enumeration."""
    if g.n > EXACT_MAX_N or params.t > EXACT_MAX_T:
        raise ParameterError(
            f"exact enumeration needs n <= {EXACT_MAX_N} and t <= {EXACT_MAX_T}, "
            f"got n={g.n}, t={params.t}"
        )
    _check_tree(tree, x, params)
    law = path_law(g, x, params.t)
    if not law:
        return 1.0
    paths = np.array(list(law), dtype=np.int64)
    masses = np.array(list(law.values()))
    nice = np.logical_and.reduce(_flags(g, paths, np.log(masses), params, tree))
    return float(max(0.0, 1.0 - masses[nice].sum()))


def q_rows(
    g: Digraph,
    starts: Sequence[int],
    t: int,
    thetas: Sequence[float],
    n_samples: int,
    seed: int,
    exact: bool = False,
) -> List[dict]:
    """Rows for the Q table, one per (start, theta)."""
    rows = []
    for x in starts:
        for theta in thetas:
            if exact:
                est = Estimate.exact(exact_Q(g, int(x), t, theta))
            else:
                est = estimate_Q(g, int(x), t, theta, n_samples, seed)
            rows.append(
                {
                    "x": int(x), "t": t, "theta": theta, "estimate": est.value,
                    "ci_lo": est.ci_lo, "ci_hi": est.ci_hi, "method": est.method,
                    "samples": est.samples,
                }
            )
    return rows
