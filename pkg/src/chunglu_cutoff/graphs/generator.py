"""
Chung-Lu digraph samplers.

The fast sampler visits the targets of each source in order of decreasing
in-weight. Targets are grouped into blocks whose in-weights lie within a
factor two of the block head; inside a block, candidates are proposed by
geometric jumps at the block's largest probability and kept with the ratio
of their own probability to it. This is exact for the capped kernel and
costs O(blocks + edges) per row.

Every row draws from its own Philox stream keyed by (seed, source), so row
contents do not depend on build order or worker count. The annealed walk
reuses :class:`RowSampler` to grow the same environment lazily.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from ..data.models import WeightProfile
from ..utils.errors import ParameterError
from ..utils.rng import TAG_NAIVE_SAMPLER, row_generator, stream
from .digraph import Digraph

NAIVE_MAX_N = 5000
BLOCK_RATIO = 2.0


class RowSampler:
    """Samples out-neighbour rows of a fixed profile."""

    def __init__(self, profile: WeightProfile):
        self.profile = profile
        self.n = profile.n
        self.scale = profile.scale
        # stable sort keeps ties in vertex order
        self.order = np.argsort(-profile.w_minus, kind="stable")
        self.sorted_w = profile.w_minus[self.order]
        self.block_starts = self._blocks(self.sorted_w)
        self.digest = profile.digest()

    @staticmethod
    def _blocks(sorted_w: np.ndarray) -> np.ndarray:
        starts = [0]
        head = sorted_w[0]
        for i in range(1, sorted_w.size):
            if sorted_w[i] * BLOCK_RATIO < head:
                starts.append(i)
                head = sorted_w[i]
        starts.append(sorted_w.size)
        return np.array(starts, dtype=np.int64)

    def row(self, x: int, seed: int) -> np.ndarray:
        """Sorted out-neighbours of ``x`` in the graph with this seed."""
        rng = row_generator(seed, x)
        c = self.profile.w_plus[x] * self.scale
        picked: List[np.ndarray] = []
        for a, b in zip(self.block_starts[:-1], self.block_starts[1:]):
            bound = min(c * self.sorted_w[a], 1.0)
            if bound <= 0.0:
                break
            length = b - a
            if bound >= 1.0:
                positions = np.arange(a, b)
            else:
                positions = a + self._bernoulli_positions(rng, bound, length)
            if positions.size == 0:
                continue
            probs = np.minimum(c * self.sorted_w[positions], 1.0)
            keep = rng.random(positions.size) * bound < probs
            picked.append(positions[keep])
        if not picked:
            return np.zeros(0, dtype=np.int64)
        targets = self.order[np.concatenate(picked)]
        targets = targets[targets != x]
        targets.sort()
        return targets.astype(np.int64)

    @staticmethod
    def _bernoulli_positions(rng: np.random.Generator, p: float, length: int) -> np.ndarray:
        """Success positions of ``length`` Bernoulli(p) trials via geometric gaps."""
        expected = length * p
        chunk = int(expected + 5.0 * np.sqrt(expected) + 8)
        log_q = np.log1p(-p)

        def gaps() -> np.ndarray:
            # float gaps: tiny p gives jumps far beyond the int64 range
            u = 1.0 - rng.random(chunk)
            return np.floor(np.log(u) / log_q) + 1.0

        positions = np.cumsum(gaps()) - 1.0
        while positions[-1] < length:
            positions = np.concatenate((positions, np.cumsum(gaps()) + positions[-1]))
        return positions[: np.searchsorted(positions, length)].astype(np.int64)

    def rows(self, sources: Sequence[int], seed: int) -> List[np.ndarray]:
        return [self.row(int(x), seed) for x in sources]


def _sample_chunk(args: tuple) -> List[np.ndarray]:
    profile, seed, lo, hi = args
    return RowSampler(profile).rows(range(lo, hi), seed)


def sample_digraph(profile: WeightProfile, seed: int, workers: int = 1) -> Digraph:
    """Sample one Chung-Lu digraph; identical output for any worker count."""
    n = profile.n
    logger.debug(f"Sampling digraph n={n} seed={seed} workers={workers}")
    if workers <= 1 or n < 4096:
        rows = RowSampler(profile).rows(range(n), seed)
    else:
        bounds = np.linspace(0, n, 4 * workers + 1).astype(int)
        tasks = [(profile, seed, int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:])]
        rows = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(_sample_chunk, tasks):
                rows.extend(chunk)
    g = Digraph.from_rows(n, rows, seed=seed, profile_digest=profile.digest())
    logger.debug(f"Sampled {g.edge_count} edges")
    return g


def sample_digraph_naive(profile: WeightProfile, seed: int, max_n: Optional[int] = None) -> Digraph:
    """One Bernoulli per ordered pair, rows in increasing x, targets in increasing y."""
    n = profile.n
    limit = NAIVE_MAX_N if max_n is None else max_n
    if n > limit:
        raise ParameterError(f"naive sampler is limited to n <= {limit}, got n={n}")
    rng = stream(seed, TAG_NAIVE_SAMPLER)
    others = np.ones(n, dtype=bool)
    rows = []
    for x in range(n):
        others[x] = False
        probs = np.minimum(profile.w_plus[x] * profile.w_minus[others] * profile.scale, 1.0)
        hits = rng.random(n - 1) < probs
        rows.append(np.flatnonzero(others)[hits].astype(np.int64))
        others[x] = True
    return Digraph.from_rows(n, rows, seed=seed, profile_digest=profile.digest())
