"""
Simple random walk kernel: t-step laws, stationary measure, TV distance and
mixing curves.

Distributions are dense float64 vectors of length n. One step is mu @ P,
computed as P.T @ mu on the cached sparse transpose.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from scipy import linalg

from ..graphs.degrees import strongly_connected
from ..graphs.digraph import Digraph
from ..utils.errors import (
    BudgetExceededError,
    ConnectivityError,
    ConvergenceError,
    ParameterError,
    SinkVertexError,
    SolverError,
)

EXCEEDED = "exceeded"
DIRECT_MAX_N = 2000
DEFAULT_BUDGET = 100_000_000
MONOTONE_TOL = 1e-9

MixingTime = Union[int, str]


def delta(n: int, x: int) -> np.ndarray:
    """Point mass at x."""
    mu = np.zeros(n)
    mu[x] = 1.0
    return mu


def tv_distance(mu: np.ndarray, nu: np.ndarray) -> float:
    """Total variation distance, half the L1 distance."""
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    if mu.shape != nu.shape:
        raise ParameterError(f"length mismatch: {mu.shape} vs {nu.shape}")
    return float(0.5 * np.abs(mu - nu).sum())


def step_distribution(g: Digraph, mu: np.ndarray) -> np.ndarray:
    """mu P; fails if a sink carries mass."""
    mu = np.asarray(mu, dtype=np.float64)
    sinks = g.sinks()
    if sinks.size:
        loaded = sinks[mu[sinks] > 0]
        if loaded.size:
            raise SinkVertexError(int(loaded[0]))
    return g.transition_matrix_t @ mu


def t_step_distribution(g: Digraph, x: int, t: int) -> np.ndarray:
    """P^t(x, .)."""
    if t < 0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    mu = delta(g.n, x)
    for _ in range(t):
        mu = step_distribution(g, mu)
    return mu


def in_degree_start(g: Digraph) -> np.ndarray:
    """Empirical in-degrees, normalised; the power-iteration start when none is given."""
    deg = g.in_degree.astype(np.float64)
    total = deg.sum()
    return deg / total if total > 0 else np.full(g.n, 1.0 / g.n)


def _require_strongly_connected(g: Digraph) -> None:
    ok, count = strongly_connected(g)
    if not ok:
        raise ConnectivityError(count)


def stationary_power(
    g: Digraph,
    tol: float = 1e-12,
    max_iter: int = 100_000,
    start: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Stationary law by averaged power iteration.

    Each round replaces mu by (mu + mu P)/2, the mean of the last two
    iterates, which removes periodic oscillation. Stops once TV(mu P, mu) <= tol.
    """
    _require_strongly_connected(g)
    mu = in_degree_start(g) if start is None else np.array(start, dtype=np.float64)
    mu /= mu.sum()
    residual = math.inf
    for iteration in range(1, max_iter + 1):
        nxt = step_distribution(g, mu)
        residual = tv_distance(nxt, mu)
        if residual <= tol:
            logger.debug(f"Power iteration converged after {iteration} rounds")
            return nxt / nxt.sum()
        mu = 0.5 * (mu + nxt)
    raise ConvergenceError(residual, max_iter)


def stationary_direct(g: Digraph) -> np.ndarray:
    """Solve pi (P - I) = 0 with sum(pi) = 1 densely; small graphs only."""
    if g.n > DIRECT_MAX_N:
        raise ParameterError(f"direct solve is limited to n <= {DIRECT_MAX_N}, got {g.n}")
    _require_strongly_connected(g)
    system = g.transition_matrix.T.toarray() - np.eye(g.n)
    system[-1, :] = 1.0
    rhs = np.zeros(g.n)
    rhs[-1] = 1.0
    try:
        pi = linalg.solve(system, rhs)
    except linalg.LinAlgError as e:
        raise SolverError(f"stationary system is singular: {e}") from e
    residual = tv_distance(step_distribution(g, pi), pi)
    if residual > 1e-9 or np.any(pi < -1e-12):
        raise SolverError(f"stationary solve left residual {residual:.3e}")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def mixing_time(
    g: Digraph,
    x: int,
    eps: float,
    t_max: int,
    pi: Optional[np.ndarray] = None,
) -> MixingTime:
    """Least t in 1..t_max with TV(P^t(x, .), pi) <= eps, else ``"exceeded"``."""
    if not 0.0 < eps < 1.0:
        raise ParameterError(f"eps must be in (0, 1), got {eps}")
    pi = stationary_power(g) if pi is None else pi
    mu = delta(g.n, x)
    for t in range(1, t_max + 1):
        mu = step_distribution(g, mu)
        if tv_distance(mu, pi) <= eps:
            return t
    return EXCEEDED


@dataclass(frozen=True, eq=False)
class MixingCurve:
    """TV distance to stationarity for several starts and t = 0..t_max."""

    start_vertices: np.ndarray
    t_max: int
    tv: np.ndarray
    t_ent_ref: float = math.nan

    def __post_init__(self) -> None:
        if self.tv.shape != (len(self.start_vertices), self.t_max + 1):
            raise ValueError("tv table shape does not match starts and t_max")
        if np.any(self.tv < -MONOTONE_TOL) or np.any(self.tv > 1 + MONOTONE_TOL):
            raise ValueError("tv entries must lie in [0, 1]")
        if np.any(np.diff(self.tv, axis=1) > MONOTONE_TOL):
            raise ValueError("tv rows must be non-increasing in t")

    def to_frame(self) -> pd.DataFrame:
        """Long format with columns start, t, tv."""
        k, width = self.tv.shape
        return pd.DataFrame(
            {
                "start": np.repeat(self.start_vertices, width),
                "t": np.tile(np.arange(width), k),
                "tv": self.tv.ravel(),
            }
        )

    def at(self, t: int) -> np.ndarray:
        return self.tv[:, t]


def tv_curve(
    g: Digraph,
    starts: Sequence[int],
    t_max: int,
    pi: Optional[np.ndarray] = None,
    t_ent_ref: float = math.nan,
) -> MixingCurve:
    """TV(P^t(x, .), pi) for every start x and t = 0..t_max."""
    pi = stationary_power(g) if pi is None else pi
    starts = np.asarray(starts, dtype=np.int64)
    mus = np.zeros((g.n, starts.size))
    mus[starts, np.arange(starts.size)] = 1.0
    table = np.empty((starts.size, t_max + 1))
    for t in range(t_max + 1):
        if t:
            sinks = g.sinks()
            if sinks.size and np.any(mus[sinks] > 0):
                raise SinkVertexError(int(sinks[np.any(mus[sinks] > 0, axis=1)][0]))
            mus = g.transition_matrix_t @ mus
        table[:, t] = 0.5 * np.abs(mus - pi[:, None]).sum(axis=0)
    return MixingCurve(starts, t_max, table, t_ent_ref)


def pi_tilde(g: Digraph, h: int, mu_in: np.ndarray) -> np.ndarray:
    """mu_in P^h, with mu_in the profile in-weight law."""
    if h < 0:
        raise ParameterError(f"h must be nonnegative, got {h}")
    mu = np.asarray(mu_in, dtype=np.float64)
    if mu.shape != (g.n,):
        raise ParameterError(f"mu_in has shape {mu.shape}, graph has n={g.n}")
    for _ in range(h):
        mu = step_distribution(g, mu)
    return mu


def averaged_distribution(g: Digraph, t: int) -> np.ndarray:
    """(1/n) sum_x P^t(x, .)."""
    mu = np.full(g.n, 1.0 / g.n)
    for _ in range(t):
        mu = step_distribution(g, mu)
    return mu


def iter_heavy_paths(
    g: Digraph,
    x: int,
    t: int,
    theta: float,
    strict: bool = True,
    budget: int = DEFAULT_BUDGET,
) -> Iterator[Tuple[int, float]]:
    """Endpoints and masses of t-step paths from x whose mass beats theta.

    Mass only decreases along a path, so a prefix at or below theta (below,
    when ``strict`` is false) is pruned without loss. Raises
    BudgetExceededError after ``budget`` node visits.
    """
    deg = g.out_degree
    indptr, indices = g.out_indptr, g.out_indices

    def heavy(mass: float) -> bool:
        return mass > theta if strict else mass >= theta

    if not heavy(1.0):
        return
    visited = 0
    stack: List[Tuple[int, int, float]] = [(x, 0, 1.0)]
    while stack:
        v, depth, mass = stack.pop()
        visited += 1
        if visited > budget:
            raise BudgetExceededError(visited, budget)
        if depth == t:
            yield v, mass
            continue
        d = deg[v]
        if d == 0:
            raise SinkVertexError(int(v))
        child_mass = mass / d
        if not heavy(child_mass):
            continue
        for w in indices[indptr[v]:indptr[v + 1]][::-1]:
            stack.append((int(w), depth + 1, child_mass))


def mass_support_set(g: Digraph, x: int, t: int, theta: float) -> Tuple[np.ndarray, float]:
    """Endpoints of t-paths with mass >= theta, and their P^t(x, .) mass."""
    ends = sorted({y for y, _ in iter_heavy_paths(g, x, t, theta, strict=False)})
    support = np.array(ends, dtype=np.int64)
    mass = float(t_step_distribution(g, x, t)[support].sum()) if support.size else 0.0
    return support, mass


def heavy_set_mass(pi: np.ndarray, delta_: float) -> Dict[str, Any]:
    """pi-mass of the ceil(n^(1-6 delta)) heaviest vertices against n^(-delta/2)."""
    n = pi.size
    k = min(n, int(math.ceil(n ** (1.0 - 6.0 * delta_))))
    mass = float(np.sort(pi)[::-1][:k].sum())
    bound = n ** (-delta_ / 2.0)
    return {"set_size": k, "mass": mass, "bound": bound, "holds": bool(mass <= bound)}


def collision_mass(pi: np.ndarray) -> float:
    """sum_x pi(x)^2."""
    return float(np.dot(pi, pi))
