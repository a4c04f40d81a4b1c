"""
Small-instance oracle sweep.

Each oracle compares a fast computation against an independent slow one and
reports a metric with its acceptance level. A fault can be injected into one
oracle by name; it shifts the compared quantity by one, which must make that
oracle, and only that one, fail.
"""

from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy import stats

from ..analyzers.entropy_analyzer import degree_law_exact
from ..analyzers.profile_analyzer import connection_row
from ..data.models import ExperimentConfig
from ..data.profiles import constant_profile, two_class_profile
from ..graphs.degrees import strongly_connected
from ..graphs.digraph import Digraph
from ..graphs.generator import sample_digraph, sample_digraph_naive
from ..utils.errors import ConfigError
from ..utils.outputs import OutputWriter
from ..utils.rng import TAG_MONTE_CARLO, derive_seed, stream
from ..walks.kernel import stationary_direct, stationary_power, tv_distance
from ..walks.quenched import estimate_Q, exact_Q, path_law, simulate_traces

P_LEVEL = 0.01
MAX_DRAWS_PER_GRAPH = 5


@dataclass
class OracleResult:
    name: str
    metric: float
    tolerance: float
    upper: bool
    detail: str

    @property
    def passed(self) -> bool:
        return self.metric <= self.tolerance if self.upper else self.metric >= self.tolerance


def _pooled_chisquare(observed: np.ndarray, expected_prob: np.ndarray) -> float:
    """Chi-square p-value after merging cells with expected count below 5."""
    expected = expected_prob / expected_prob.sum() * observed.sum()
    order = np.argsort(expected)
    obs_bins, exp_bins = [], []
    acc_o = acc_e = 0.0
    for i in order:
        acc_o += observed[i]
        acc_e += expected[i]
        if acc_e >= 5.0:
            obs_bins.append(acc_o)
            exp_bins.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 and exp_bins:
        obs_bins[-1] += acc_o
        exp_bins[-1] += acc_e
    if len(exp_bins) < 2:
        return 1.0
    return float(stats.chisquare(obs_bins, exp_bins).pvalue)


def stationary_oracle(seed: int, graphs: int = 100, n_max: int = 500) -> Tuple[float, str]:
    """Largest TV between the power-iteration and direct stationary laws.

    Draws n in 20..n_max until ``graphs`` strongly connected samples were compared.
    """
    rng = stream(seed, TAG_MONTE_CARLO, 10)
    worst, used, tried = 0.0, 0, 0
    while used < graphs and tried < MAX_DRAWS_PER_GRAPH * graphs:
        n = int(rng.integers(20, n_max + 1))
        g = sample_digraph(constant_profile(n, 2.5), derive_seed(seed, TAG_MONTE_CARLO, 10, tried))
        tried += 1
        if not strongly_connected(g)[0]:
            continue
        worst = max(worst, tv_distance(stationary_power(g, tol=1e-14), stationary_direct(g)))
        used += 1
    if used < graphs:
        logger.warning(f"Stationary oracle compared only {used} of {graphs} graphs")
    return worst, f"{used} strongly connected graphs of {tried} sampled"


def sampler_oracle(seed: int, reps: int = 1000, n: int = 200) -> Tuple[float, str]:
    """Smallest KS p-value between the fast and naive samplers (edge counts, out-degrees)."""
    profile = two_class_profile(n, 3.0, 1.5, 0.3)
    fast_edges, naive_edges, fast_deg, naive_deg = [], [], [], []
    for r in range(reps):
        fast = sample_digraph(profile, derive_seed(seed, TAG_MONTE_CARLO, 11, r))
        naive = sample_digraph_naive(profile, derive_seed(seed, TAG_MONTE_CARLO, 12, r))
        fast_edges.append(fast.edge_count)
        naive_edges.append(naive.edge_count)
        fast_deg.append(fast.out_degree)
        naive_deg.append(naive.out_degree)
    p_edges = stats.ks_2samp(fast_edges, naive_edges).pvalue
    p_deg = stats.ks_2samp(np.concatenate(fast_deg), np.concatenate(naive_deg)).pvalue
    return float(min(p_edges, p_deg)), f"edge counts p={p_edges:.3g}, out-degrees p={p_deg:.3g}"


def small_test_graph(seed: int, n: int = 10, max_degree: int = 4) -> Digraph:
    """A random digraph with every out-degree in 1..max_degree."""
    rng = stream(seed, TAG_MONTE_CARLO, 13)
    edges = []
    for x in range(n):
        others = np.delete(np.arange(n), x)
        k = int(rng.integers(1, max_degree + 1))
        edges.extend((x, int(y)) for y in rng.choice(others, size=k, replace=False))
    return Digraph.from_edges(n, edges)


def q_oracle(seed: int, reps: int = 200, samples: int = 500, t: int = 4) -> Tuple[float, str]:
    """Coverage of exact Q by the Wilson intervals of the Monte Carlo estimate."""
    g = small_test_graph(seed)
    theta = 1.0 / 30.0
    covered = 0
    for r in range(reps):
        x = r % g.n
        est = estimate_Q(g, x, t, theta, samples, derive_seed(seed, TAG_MONTE_CARLO, 14, r))
        covered += est.covers(exact_Q(g, x, t, theta))
    return covered / reps, f"{covered} of {reps} intervals cover"


def trace_law_oracle(seed: int, samples: int = 100_000, t: int = 3) -> Tuple[float, str]:
    """Chi-square p-value of simulated traces against full path enumeration."""
    g = Digraph.from_edges(5, [(0, 1), (0, 2), (1, 2), (1, 3), (1, 4), (2, 0), (2, 3), (3, 4), (4, 0), (4, 1)])
    law = path_law(g, 0, t)
    index = {path: i for i, path in enumerate(law)}
    paths, _ = simulate_traces(g, np.zeros(samples, dtype=np.int64), t, stream(seed, TAG_MONTE_CARLO, 15))
    counts = np.zeros(len(law))
    for row in paths:
        counts[index[tuple(int(v) for v in row)]] += 1
    p = _pooled_chisquare(counts, np.array(list(law.values())))
    return p, f"{len(law)} paths"


def discrete_ks_pvalue(samples: np.ndarray, cdf: np.ndarray) -> float:
    """KS p-value of integer samples against a cdf given on 0..len(cdf)-1.

    Both distribution functions jump only at integers, so the statistic is the
    largest gap over the support. The continuous null law makes the p-value
    conservative.
    """
    samples = np.asarray(samples, dtype=np.int64)
    size = max(cdf.size, int(samples.max()) + 1)
    model = np.ones(size)
    model[: cdf.size] = cdf
    empirical = np.cumsum(np.bincount(samples, minlength=size)) / samples.size
    statistic = float(np.max(np.abs(empirical - model)))
    return float(stats.kstwo.sf(statistic, samples.size))


def degree_law_oracle(seed: int, reps: int = 100_000, n: int = 50, chunk: int = 10_000) -> Tuple[float, str]:
    """KS p-value of naive-sampler out-degrees of vertex 0 against its exact law."""
    profile = two_class_profile(n, 3.0, 1.5, 0.3)
    law = degree_law_exact(profile, 0)
    probs = np.delete(connection_row(profile, 0), 0)
    rng = stream(seed, TAG_MONTE_CARLO, 16)
    degrees = np.concatenate([
        (rng.random((min(chunk, reps - done), probs.size)) < probs).sum(axis=1)
        for done in range(0, reps, chunk)
    ])
    p = discrete_ks_pvalue(degrees, np.cumsum(law.pmf))
    return p, f"{reps} replicas, mean degree {degrees.mean():.3f} vs {law.mean:.3f}"


# name -> (function, tolerance, metric must stay below tolerance)
ORACLES: Dict[str, Tuple[Callable[[int], Tuple[float, str]], float, bool]] = {
    "stationary": (stationary_oracle, 1e-10, True),
    "sampler": (sampler_oracle, P_LEVEL, False),
    "q_exact": (q_oracle, 0.9, False),
    "trace_law": (trace_law_oracle, P_LEVEL, False),
    "degree_law": (degree_law_oracle, P_LEVEL, False),
}


def run_oracles(seed: int, inject_fault: Optional[str] = None) -> List[OracleResult]:
    if inject_fault is not None and inject_fault not in ORACLES:
        raise ConfigError(f"unknown oracle '{inject_fault}'; choose from {', '.join(ORACLES)}")
    results = []
    for name, (fn, tolerance, upper) in ORACLES.items():
        logger.info(f"Running oracle {name}")
        metric, detail = fn(seed)
        if name == inject_fault:
            metric += 1.0 if upper else -1.0
            detail += " (fault injected)"
        result = OracleResult(name, float(metric), tolerance, upper, detail)
        if not result.passed:
            logger.error(f"Oracle {name} failed: metric {metric:.4g} vs {tolerance:g}")
        results.append(result)
    return results


def run_oracle(config: ExperimentConfig, writer: OutputWriter) -> Dict[str, Any]:
    """Run every oracle and write ``oracle.csv``."""
    results = run_oracles(config.seed, config.inject_fault)
    rows = [
        {"name": r.name, "passed": r.passed, "metric": r.metric, "tolerance": r.tolerance,
         "direction": "max" if r.upper else "min", "detail": r.detail}
        for r in results
    ]
    writer.csv("oracle.csv", rows)
    failed = [r.name for r in results if not r.passed]
    return {"rows": rows, "failed": failed, "ok": not failed, "seeds": []}
