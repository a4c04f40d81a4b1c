"""
Shared plumbing for experiment runners: profiles, replica graphs, start
vertices and the ordered worker pool.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Iterable, List, Optional, Sequence, TypeVar

import numpy as np
from loguru import logger

from ..data.models import EntropicStats, ExperimentConfig, WeightProfile
from ..data.profiles import parse_weight_spec, read_profile_file
from ..graphs.degrees import strongly_connected
from ..graphs.digraph import Digraph
from ..graphs.generator import sample_digraph
from ..graphs.structures import root_radius
from ..utils.errors import EnsembleError, ParameterError
from ..utils.rng import TAG_STARTS, replica_seeds, stream

T = TypeVar("T")
R = TypeVar("R")


def build_profile(config: ExperimentConfig, n: int) -> WeightProfile:
    """Profile for size n; a profile file wins over the weight spec."""
    if config.profile_path:
        return read_profile_file(config.profile_path)
    constants = {"eta": config.eta, "m0": config.m0, "m1": config.m1, "m2": config.m2}
    return parse_weight_spec(config.weights, n, config.seed, constants)


def sizes(config: ExperimentConfig) -> List[int]:
    """The vertex counts to run; a profile file fixes a single size."""
    if config.profile_path:
        return [read_profile_file(config.profile_path).n]
    return list(config.n_list)


def seeds_for(config: ExperimentConfig, n: int) -> Sequence[int]:
    """Replica graph seeds; distinct sizes get distinct streams."""
    return replica_seeds(config.seed + n, config.replicas)


def map_ordered(fn: Callable[[T], R], tasks: Iterable[T], workers: int) -> List[R]:
    """map over tasks, in a process pool when workers > 1; order is preserved."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def choose_starts(n: int, count: int, seed: int, replica: int) -> np.ndarray:
    """Distinct start vertices for one replica."""
    rng = stream(seed, TAG_STARTS, replica)
    return np.sort(rng.choice(n, size=min(count, n), replace=False))


@dataclass
class Replica:
    """One sampled graph of an ensemble."""

    index: int
    seed: int
    graph: Digraph
    strongly_connected: bool
    components: int


def sample_replica(profile: WeightProfile, index: int, seed: int) -> Replica:
    g = sample_digraph(profile, seed)
    ok, count = strongly_connected(g)
    if not ok:
        logger.warning(f"Replica {index} (seed {seed}) has {count} strong components; skipped")
    return Replica(index, seed, g, ok, count)


def require_some(results: Sequence[Optional[Any]], n: int) -> List[Any]:
    """Drop skipped replicas; fail when none are left."""
    kept = [r for r in results if r is not None]
    if not kept:
        raise EnsembleError(n, len(results))
    skipped = len(results) - len(kept)
    if skipped:
        logger.warning(f"n={n}: {skipped} of {len(results)} replicas skipped (not strongly connected)")
    return kept


def radius_for(config: ExperimentConfig, n: int, es: EntropicStats) -> Optional[int]:
    """The root radius h_eps: the config override, else derived from H.

    None when H is 0 and no override is set.
    """
    if config.h_eps is not None:
        return config.h_eps
    try:
        return root_radius(n, config.eps, es.H)
    except ParameterError as e:
        logger.warning(f"n={n}: no root radius ({e})")
        return None
