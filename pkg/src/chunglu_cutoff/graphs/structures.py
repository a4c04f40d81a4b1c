"""
Local exploration structures: directed balls, tree excess, tree roots,
in-ball sizes, the greedy mass tree and nice-path parameters.
"""

import heapq
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from ..data.models import EntropicStats, NicePathParams
from ..utils.errors import ParameterError
from .digraph import Digraph

OUT = "out"
IN = "in"


@dataclass(frozen=True)
class Neighborhood:
    """Vertices within ``depth`` steps of ``center`` and their distances."""

    center: int
    depth: int
    direction: str
    distance: Dict[int, int]
    internal_edge_count: int

    @property
    def vertices(self) -> List[int]:
        return list(self.distance)

    @property
    def size(self) -> int:
        return len(self.distance)

    def __contains__(self, v: int) -> bool:
        return v in self.distance


def _neighbors(g: Digraph, v: int, direction: str) -> np.ndarray:
    return g.out_neighbors(v) if direction == OUT else g.in_neighbors(v)


def ball(g: Digraph, x: int, h: int, direction: str = OUT) -> Neighborhood:
    """Breadth-first ball of radius h around x.

    Edges counted as internal are those leaving (entering, for in-balls) a
    vertex at distance <= h-1 whose other end lies in the ball.
    """
    if h < 0:
        raise ParameterError(f"radius must be nonnegative, got {h}")
    if direction not in (OUT, IN):
        raise ParameterError(f"direction must be '{OUT}' or '{IN}'")
    distance = {int(x): 0}
    frontier = [int(x)]
    for d in range(1, h + 1):
        nxt = []
        for v in frontier:
            for w in _neighbors(g, v, direction):
                w = int(w)
                if w not in distance:
                    distance[w] = d
                    nxt.append(w)
        frontier = nxt
        if not frontier:
            break
    edges = 0
    for v, d in distance.items():
        if d <= h - 1:
            edges += sum(1 for w in _neighbors(g, v, direction) if int(w) in distance)
    return Neighborhood(int(x), h, direction, distance, edges)


def tree_excess(nb: Neighborhood) -> int:
    """1 + |E| - |V|, clamped at 0."""
    if nb.size == 0:
        raise ParameterError("empty neighbourhood")
    return max(0, 1 + nb.internal_edge_count - nb.size)


def is_root(g: Digraph, x: int, h_eps: int) -> bool:
    """True iff the out-ball of radius h_eps is a directed tree."""
    if h_eps < 1:
        raise ParameterError(f"h_eps must be at least 1, got {h_eps}")
    return tree_excess(ball(g, x, h_eps, OUT)) == 0


def roots(g: Digraph, h_eps: int, vertices: Optional[Iterable[int]] = None) -> np.ndarray:
    """The vertices (among ``vertices``, default all) that are h_eps-roots."""
    candidates = range(g.n) if vertices is None else vertices
    return np.array([v for v in candidates if is_root(g, int(v), h_eps)], dtype=np.int64)


def tree_excess_values(g: Digraph, h: int, vertices: Iterable[int]) -> np.ndarray:
    """Tree excess of the out-ball of radius h for each given vertex."""
    return np.array([tree_excess(ball(g, int(v), h, OUT)) for v in vertices], dtype=np.int64)


def in_ball_size_check(g: Digraph, h_eps: int, eps: float) -> Tuple[bool, int]:
    """max_x |in-ball of radius h_eps| against n^(1/2 + eps)."""
    largest = max(ball(g, x, h_eps, IN).size for x in range(g.n))
    return largest <= g.n ** (0.5 + eps), largest


def escape_profile(g: Digraph, x: int, root_set: np.ndarray, t_max: int) -> np.ndarray:
    """P_x(X_t is not a root) for t = 0..t_max."""
    is_root_mask = np.zeros(g.n, dtype=bool)
    is_root_mask[np.asarray(root_set, dtype=np.int64)] = True
    mu = np.zeros(g.n)
    mu[x] = 1.0
    out = np.empty(t_max + 1)
    for t in range(t_max + 1):
        if t:
            mu = g.transition_matrix_t @ mu
        out[t] = mu[~is_root_mask].sum()
    return out


@dataclass(frozen=True, eq=False)
class MassTree:
    """Greedy exploration from ``root`` keeping edges of mass >= exp(-H_bar s).

    ``graph_edges`` lists every selected edge in selection order with its
    mass; ``tree_edges`` is the subset whose head was new.
    """

    root: int
    s: int
    H_bar: float
    graph_edges: np.ndarray
    selected_mass: np.ndarray
    is_tree_edge: np.ndarray
    node_mass: Dict[int, float]
    node_depth: Dict[int, int]
    discarded_mass: float

    @property
    def kappa(self) -> int:
        return int(self.graph_edges.shape[0])

    @property
    def tree_edges(self) -> np.ndarray:
        return self.graph_edges[self.is_tree_edge]

    @property
    def threshold(self) -> float:
        return math.exp(-self.H_bar * self.s)

    def tree_edge_codes(self, n: int) -> np.ndarray:
        """tail * n + head for every tree edge, sorted."""
        tree = self.tree_edges
        return np.sort(tree[:, 0] * n + tree[:, 1])

    def children(self) -> Dict[int, List[int]]:
        kids: Dict[int, List[int]] = {}
        for u, v in self.tree_edges:
            kids.setdefault(int(u), []).append(int(v))
        return kids

    @classmethod
    def from_tree_edges(cls, g: Digraph, root: int, s: int, edges: Iterable[Tuple[int, int]]) -> "MassTree":
        """A tree given explicitly; masses follow the graph degrees."""
        edges = np.array(list(edges), dtype=np.int64).reshape(-1, 2)
        mass = {int(root): 1.0}
        depth = {int(root): 0}
        selected = []
        for u, v in edges:
            selected.append(mass[int(u)] / g.out_degree[u])
            mass[int(v)] = selected[-1]
            depth[int(v)] = depth[int(u)] + 1
        return cls(
            root=int(root), s=s, H_bar=0.0, graph_edges=edges,
            selected_mass=np.array(selected), is_tree_edge=np.ones(len(edges), dtype=bool),
            node_mass=mass, node_depth=depth, discarded_mass=0.0,
        )


def build_mass_tree(g: Digraph, x: int, params: NicePathParams) -> MassTree:
    """Grow the mass tree of x.

    Repeatedly select the unselected edge of largest mass among edges whose
    tail is explored and has tree depth <= s-1; ties go to the smallest
    (tail, head). Stop when the best mass is below exp(-H_bar s). A selected
    edge joins the tree iff its head is new; otherwise its mass is discarded.
    """
    g.require_no_sinks()
    s, threshold = params.s, params.tree_threshold
    deg = g.out_degree
    mass = {int(x): 1.0}
    depth = {int(x): 0}
    heap: List[Tuple[float, int, int]] = []

    def push_edges(u: int) -> None:
        if depth[u] <= s - 1:
            m_hat = mass[u] / deg[u]
            for v in g.out_neighbors(u):
                heapq.heappush(heap, (-m_hat, u, int(v)))

    push_edges(int(x))
    edges: List[Tuple[int, int]] = []
    selected: List[float] = []
    tree_flags: List[bool] = []
    discarded = 0.0
    while heap:
        neg, u, v = heap[0]
        m_hat = -neg
        if m_hat < threshold:
            break
        heapq.heappop(heap)
        edges.append((u, v))
        selected.append(m_hat)
        if v not in mass:
            mass[v] = m_hat
            depth[v] = depth[u] + 1
            tree_flags.append(True)
            push_edges(v)
        else:
            tree_flags.append(False)
            discarded += m_hat

    logger.debug(f"Mass tree of {x}: kappa={len(edges)}, discarded={discarded:.3g}")
    return MassTree(
        root=int(x),
        s=s,
        H_bar=params.H_bar,
        graph_edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        selected_mass=np.array(selected),
        is_tree_edge=np.array(tree_flags, dtype=bool),
        node_mass=mass,
        node_depth=depth,
        discarded_mass=discarded,
    )


def tree_mass_coverage(g: Digraph, x: int, mt: MassTree, s: int) -> float:
    """Probability that an s-step walk from x uses only tree edges."""
    kids = mt.children()
    deg = g.out_degree
    current = {int(x): 1.0}
    for _ in range(s):
        nxt: Dict[int, float] = {}
        for v, m in current.items():
            step = m / deg[v] if deg[v] else 0.0
            for c in kids.get(v, ()):
                nxt[c] = nxt.get(c, 0.0) + step
        current = nxt
        if not current:
            return 0.0
    return float(sum(current.values()))


def root_radius(n: int, eps: float, H: float) -> int:
    """h_eps = floor(eps ln n / (20 H)); may be 0 at simulation sizes."""
    if not H > 0:
        raise ParameterError(f"the root radius needs positive entropy, got H={H}")
    return int(math.floor(eps * math.log(n) / (20.0 * H)))


def nice_params(
    n: int,
    eps: float,
    es: EntropicStats,
    h_eps: Optional[int] = None,
    t_lambda: Optional[int] = None,
    c_degree: float = 10.0,
) -> NicePathParams:
    """Lengths of nice paths.

    gamma = eps/80, h_eps = floor(eps ln n / (20 H)) unless given,
    s = floor((1 - gamma) t_ent) (or t_lambda - h_eps in window mode),
    t = s + h_eps + 1, H_bar = (1 + gamma) H.
    """
    if not 0.0 < eps < 1.0:
        raise ParameterError(f"eps must be in (0, 1), got {eps}")
    gamma = eps / 80.0
    if h_eps is None:
        h_eps = root_radius(n, eps, es.H)
        if h_eps < 1:
            raise ParameterError(
                f"h_eps rounds to {h_eps} at n={n}, eps={eps}; use a larger n or eps, "
                "or pass h_eps explicitly"
            )
    elif h_eps < 1:
        raise ParameterError(f"h_eps must be at least 1, got {h_eps}")
    if t_lambda is None:
        s = int(math.floor((1.0 - gamma) * es.t_ent))
    else:
        s = int(t_lambda) - h_eps
    if s < 1:
        raise ParameterError(f"tree depth s={s} must be at least 1")
    return NicePathParams(
        n=n, eps=eps, gamma=gamma, h_eps=h_eps, s=s, t=s + h_eps + 1,
        H_bar=(1.0 + gamma) * es.H, c_degree=c_degree,
    )


def dump_mass_tree(mt: MassTree, path: Union[str, Path]) -> Path:
    """Selection log, one line "l tail head mass is_tree_edge" per selected edge."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for ell, ((u, v), m, tree) in enumerate(
            zip(mt.graph_edges, mt.selected_mass, mt.is_tree_edge), start=1
        ):
            f.write(f"{ell} {int(u)} {int(v)} {m:.17g} {int(tree)}\n")
    return path


def write_roots(root_set: Iterable[int], path: Union[str, Path]) -> Path:
    """Newline-separated vertex ids."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{int(v)}\n" for v in root_set), encoding="utf-8")
    return path
