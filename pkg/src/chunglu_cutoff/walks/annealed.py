"""
Annealed K-walk process on a lazily generated environment.

Out-neighbour rows are sampled the first time a walk stands on a vertex and
stored for later visits. Row contents come from the same per-row Philox
streams as the graph sampler, so the environment a run explores is a piece
of ``sample_digraph(profile, seed)`` whatever order the walks visit it in.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from ..analyzers.profile_analyzer import in_degree_distribution
from ..data.models import Estimate, WeightProfile
from ..graphs.generator import RowSampler
from ..utils.errors import ParameterError, SinkVertexError
from ..utils.rng import TAG_ANNEALED_RUN, derive_seed, stream


@dataclass
class AnnealedState:
    """The part of the environment generated so far."""

    sampler: RowSampler
    seed: int
    rows: Dict[int, np.ndarray] = field(default_factory=dict)
    visit_log: List[Tuple[int, int, int]] = field(default_factory=list)

    @property
    def profile(self) -> WeightProfile:
        return self.sampler.profile

    def row(self, v: int) -> np.ndarray:
        """Out-neighbours of v, sampled on first request."""
        if v not in self.rows:
            self.rows[v] = self.sampler.row(v, self.seed)
        return self.rows[v]


@dataclass(frozen=True, eq=False)
class AnnealedTrace:
    """K walk paths of horizon T with their freshness flags.

    ``fresh[k, t-1]`` says whether walk k stood at t on a vertex that no
    earlier walk and no earlier step of walk k had visited.
    """

    K: int
    T: int
    paths: np.ndarray
    fresh: np.ndarray
    tau: Optional[int]
    seed: int

    def record(self) -> Dict[str, Any]:
        """JSON-lines run record."""
        return {
            "seed": self.seed,
            "K": self.K,
            "T": self.T,
            "tau": self.tau,
            "fresh_flags": self.fresh.astype(int).tolist(),
        }


def first_self_intersection(path: np.ndarray) -> Optional[int]:
    """Least t >= 1 with path[t] among path[0..t-1]."""
    seen = {int(path[0])}
    for t in range(1, path.size):
        v = int(path[t])
        if v in seen:
            return t
        seen.add(v)
    return None


def _run(
    state: AnnealedState, mu0: np.ndarray, K: int, T: int, rng: np.random.Generator
) -> AnnealedTrace:
    n = state.sampler.n
    paths = np.empty((K, T + 1), dtype=np.int64)
    fresh = np.zeros((K, T), dtype=bool)
    visited_before: set = set()
    for k in range(K):
        v = int(rng.choice(n, p=mu0))
        paths[k, 0] = v
        state.visit_log.append((k, 0, v))
        own = {v}
        for t in range(1, T + 1):
            row = state.row(v)
            if row.size == 0:
                raise SinkVertexError(v, f"annealed walk {k} is stuck at vertex {v} (step {t})")
            v = int(row[int(rng.integers(row.size))])
            paths[k, t] = v
            fresh[k, t - 1] = v not in own and v not in visited_before
            own.add(v)
            state.visit_log.append((k, t, v))
        visited_before |= own
    return AnnealedTrace(
        K=K, T=T, paths=paths, fresh=fresh,
        tau=first_self_intersection(paths[0]), seed=state.seed,
    )


def _start_law(profile: WeightProfile, mu0: Optional[np.ndarray]) -> np.ndarray:
    if mu0 is None:
        return np.full(profile.n, 1.0 / profile.n)
    mu0 = np.asarray(mu0, dtype=np.float64)
    if mu0.shape != (profile.n,) or np.any(mu0 < 0) or not math.isclose(mu0.sum(), 1.0, rel_tol=1e-9):
        raise ParameterError("start law must be a probability vector of length n")
    return mu0 / mu0.sum()


def run_annealed(
    profile: WeightProfile,
    mu0: Optional[np.ndarray],
    K: int,
    T: int,
    seed: int,
    sampler: Optional[RowSampler] = None,
) -> Tuple[AnnealedTrace, AnnealedState]:
    """Run K walks of horizon T one after another on a shared lazy environment.

    ``mu0`` defaults to the uniform law. Pass ``sampler`` to reuse the sorted
    profile across many runs.
    """
    if K < 1 or T < 1:
        raise ParameterError(f"need K >= 1 and T >= 1, got K={K}, T={T}")
    state = AnnealedState(sampler=sampler or RowSampler(profile), seed=seed)
    trace = _run(state, _start_law(profile, mu0), K, T, stream(seed, TAG_ANNEALED_RUN))
    return trace, state


def _runs(
    profile: WeightProfile, mu0: np.ndarray, K: int, T: int, n_runs: int, seed: int
) -> Tuple[List[AnnealedTrace], int]:
    """Independent runs, each on its own environment; stuck runs are counted."""
    sampler = RowSampler(profile)
    traces, stuck = [], 0
    for r in range(n_runs):
        run_seed = derive_seed(seed, TAG_ANNEALED_RUN, r)
        state = AnnealedState(sampler=sampler, seed=run_seed)
        try:
            traces.append(_run(state, mu0, K, T, stream(run_seed, TAG_ANNEALED_RUN)))
        except SinkVertexError as e:
            stuck += 1
            logger.debug(str(e))
    if stuck:
        logger.warning(f"{stuck} of {n_runs} annealed runs hit an empty row and were dropped")
    if not traces:
        raise SinkVertexError(-1, "every annealed run got stuck")
    return traces, stuck


def fresh_vertex_law(
    profile: WeightProfile,
    s: int,
    n_runs: int,
    seed: int,
    mu0: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, float]:
    """Empirical law of X_s over runs where X_s is fresh, and the fresh rate."""
    if s < 1 or s > math.sqrt(profile.n):
        raise ParameterError(f"s must lie in [1, sqrt(n)] = [1, {math.sqrt(profile.n):.1f}], got {s}")
    traces, _ = _runs(profile, _start_law(profile, mu0), 1, s, n_runs, seed)
    counts = np.zeros(profile.n)
    fresh_runs = 0
    for tr in traces:
        if tr.fresh[0, s - 1]:
            fresh_runs += 1
            counts[tr.paths[0, s]] += 1
    law = counts / fresh_runs if fresh_runs else counts
    return law, fresh_runs / len(traces)


def self_intersection_stats(
    profile: WeightProfile, T: int, n_runs: int, seed: int
) -> Tuple[Estimate, np.ndarray]:
    """P(a uniform-start walk self-intersects within T steps) and the tau counts.

    ``tau_counts[t]`` is the number of runs whose first self-intersection
    happened at step t.
    """
    if T < 1:
        raise ParameterError(f"T must be at least 1, got {T}")
    traces, _ = _runs(profile, _start_law(profile, None), 1, T, n_runs, seed)
    tau_counts = np.zeros(T + 1, dtype=np.int64)
    for tr in traces:
        if tr.tau is not None:
            tau_counts[tr.tau] += 1
    return Estimate.from_counts(int(tau_counts.sum()), len(traces)), tau_counts


def meeting_probability(
    profile: WeightProfile, h: int, n_runs: int, seed: int
) -> Tuple[Estimate, np.ndarray]:
    """P(two annealed walks from mu_in sit on the same vertex at time h).

    Also returns the counts of first meeting times 0..h.
    """
    if h < 0:
        raise ParameterError(f"h must be nonnegative, got {h}")
    mu_in = in_degree_distribution(profile)
    if h == 0:
        rng = stream(seed, TAG_ANNEALED_RUN)
        a = rng.choice(profile.n, size=n_runs, p=mu_in)
        b = rng.choice(profile.n, size=n_runs, p=mu_in)
        meets = int(np.count_nonzero(a == b))
        return Estimate.from_counts(meets, n_runs), np.array([meets], dtype=np.int64)
    traces, _ = _runs(profile, mu_in, 2, h, n_runs, seed)
    first = np.zeros(h + 1, dtype=np.int64)
    meets = 0
    for tr in traces:
        same = tr.paths[0] == tr.paths[1]
        if same.any():
            first[int(np.argmax(same))] += 1
        meets += int(same[h])
    return Estimate.from_counts(meets, len(traces)), first


def collision_at_start(profile: WeightProfile) -> float:
    """sum_z mu_in(z)^2, the meeting probability at time 0."""
    mu_in = in_degree_distribution(profile)
    return float(np.dot(mu_in, mu_in))


def run_records(profile: WeightProfile, K: int, T: int, n_runs: int, seed: int) -> List[Dict[str, Any]]:
    """JSON-lines records of independent K-walk runs from the uniform law."""
    traces, _ = _runs(profile, _start_law(profile, None), K, T, n_runs, seed)
    return [tr.record() for tr in traces]
