"""
Entropic statistics of a weight profile.

The out-degree of x is a Poisson-binomial sum with parameters
min(w+_x w-_y ln(n)/n, 1), y != x. These depend on x only through w+_x
apart from the excluded self term, so one truncated convolution per
distinct out-weight (a "class") gives the law of the full sum, and the
self term is removed per vertex by a one-parameter deconvolution.
"""

import math
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger
from scipy import stats

from ..data.models import (
    DegreeLaw,
    EntropicStats,
    EstimationMethod,
    Estimate,
    LyapunovReport,
    NondegeneracyReport,
    WeightProfile,
)
from ..graphs.digraph import Digraph
from ..utils.errors import ParameterError
from ..utils.rng import TAG_MONTE_CARLO, stream
from .profile_analyzer import (
    connection_row,
    expected_out_degrees,
    in_degree_distribution,
)

TAIL_TOL = 1e-12
MAX_CLASSES = 64
MIN_MC_SAMPLES = 1000
DECONV_STABLE_P = 0.5
CHUNK_ROWS = 2048
SAMPLE_CHUNK = 1_000_000
Z_95 = 1.959963984540054


def chernoff_k_max(mean: float, n_terms: int, tail_tol: float = TAIL_TOL) -> int:
    """Smallest cut k with the upper Chernoff bound on P(D > k) below tail_tol."""
    log_inv = math.log(1.0 / tail_tol)
    t = log_inv / 3.0 + math.sqrt(log_inv ** 2 / 9.0 + 2.0 * log_inv * mean)
    return int(min(n_terms, math.ceil(mean + t)))


def poisson_binomial_pmf(params: np.ndarray, k_max: Optional[int] = None) -> np.ndarray:
    """pmf of a sum of independent Bernoulli(params) on 0..k_max, by convolution.

    Equal parameters are merged into one binomial factor. The result is not
    renormalised; its deficit is the truncated tail.
    """
    params = np.asarray(params, dtype=np.float64)
    k_max = params.size if k_max is None else int(k_max)
    values, counts = np.unique(params[params > 0], return_counts=True)
    pmf = np.ones(1)
    for p, count in zip(values, counts):
        p = min(p, 1.0)
        if count == 1:
            grown = np.append(pmf * (1.0 - p), 0.0)
            grown[1:] += pmf * p
            pmf = grown[: k_max + 1]
            continue
        support = np.arange(min(int(count), k_max) + 1)
        factor = stats.binom.pmf(support, int(count), p)
        pmf = np.convolve(pmf, factor)[: k_max + 1]
    return pmf


def _renormalize(pmf: np.ndarray) -> np.ndarray:
    pmf = np.clip(pmf, 0.0, None)
    return pmf / pmf.sum(axis=-1, keepdims=True)


def remove_bernoulli(full: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Deconvolve Bernoulli(p) factors out of ``full``, one row per p.

    Uses the forward recursion g[k] = (f[k] - p g[k-1]) / (1 - p), which is
    stable for p < 1/2. p == 1 shifts the law down by one.
    """
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))
    out = np.empty((p.size, full.size))
    shift = p >= 1.0
    if np.any(shift):
        out[shift, :-1] = full[1:]
        out[shift, -1] = 0.0
    rest = ~shift
    if np.any(rest):
        q = 1.0 - p[rest]
        pr = p[rest]
        g = np.empty((pr.size, full.size))
        g[:, 0] = full[0] / q
        for k in range(1, full.size):
            g[:, k] = (full[k] - pr * g[:, k - 1]) / q
        out[rest] = g
    return out


def degree_law_from_parameters(
    params: np.ndarray, tail_tol: float = TAIL_TOL, source_class: float = math.nan
) -> DegreeLaw:
    """Exact law of a Bernoulli sum, truncated where the Chernoff tail is below tail_tol."""
    params = np.minimum(np.asarray(params, dtype=np.float64), 1.0)
    analytic = float(params.sum())
    k_max = chernoff_k_max(analytic, params.size, tail_tol)
    raw = poisson_binomial_pmf(params, k_max)
    truncated = max(0.0, 1.0 - float(raw.sum()))
    pmf = _renormalize(raw)
    return DegreeLaw(
        pmf=pmf,
        mean=float(np.dot(np.arange(pmf.size), pmf)),
        analytic_mean=analytic,
        source_class=source_class,
        truncated_mass=truncated,
    )


def degree_law_exact(profile: WeightProfile, x: int, tail_tol: float = TAIL_TOL) -> DegreeLaw:
    """Law of D+_x, computed directly from its n-1 parameters."""
    return degree_law_from_parameters(
        connection_row(profile, x), tail_tol, source_class=float(profile.w_plus[x])
    )


def log_degree(k: np.ndarray) -> np.ndarray:
    """ln(k v 1)."""
    return np.log(np.maximum(np.asarray(k, dtype=np.float64), 1.0))


class DegreeLawEngine:
    """Per-vertex out-degree laws of a profile, shared across its classes.

    Vertices with the same (out-weight, self parameter) have the same law and
    are handled together.
    """

    def __init__(
        self,
        profile: WeightProfile,
        tail_tol: float = TAIL_TOL,
        max_classes: Optional[int] = MAX_CLASSES,
    ):
        self.profile = profile
        self.tail_tol = tail_tol
        self.classes, self.class_of = np.unique(profile.w_plus, return_inverse=True)
        if max_classes is not None and self.classes.size > max_classes:
            raise ParameterError(
                f"{self.classes.size} distinct out-weights exceed the exact limit of "
                f"{max_classes}; use entropy_stats_mc instead"
            )
        self.p_self = np.minimum(profile.w_plus * profile.w_minus * profile.scale, 1.0)
        self.mu_in = in_degree_distribution(profile)
        keys = np.column_stack((self.class_of.astype(np.float64), self.p_self))
        self.group_keys, self.group_of = np.unique(keys, axis=0, return_inverse=True)
        self.group_of = self.group_of.ravel()
        self._full: Dict[int, np.ndarray] = {}
        self._vertex: Dict[int, np.ndarray] = {}

    def full_law(self, ci: int) -> np.ndarray:
        """Truncated, unnormalised law of the class sum including the self term."""
        if ci not in self._full:
            c = self.classes[ci]
            params = np.minimum(c * self.profile.w_minus * self.profile.scale, 1.0)
            k_max = chernoff_k_max(float(params.sum()), params.size, self.tail_tol)
            self._full[ci] = poisson_binomial_pmf(params, k_max)
        return self._full[ci]

    def _representative(self, group: int) -> int:
        return int(np.flatnonzero(self.group_of == group)[0])

    def group_laws(self, groups: Sequence[int]) -> List[np.ndarray]:
        """Normalised laws for the given groups, computed in class batches."""
        groups = np.asarray(groups, dtype=np.int64)
        laws: Dict[int, np.ndarray] = {}
        class_idx = self.group_keys[groups, 0].astype(np.int64)
        for ci in np.unique(class_idx):
            members = groups[class_idx == ci]
            p = self.group_keys[members, 1]
            full = self.full_law(int(ci))
            stable = p < DECONV_STABLE_P
            stable |= p >= 1.0
            for start in range(0, members.size, CHUNK_ROWS):
                chunk = slice(start, start + CHUNK_ROWS)
                m, ps, ok = members[chunk], p[chunk], stable[chunk]
                if np.any(ok):
                    for gid, row in zip(m[ok], _renormalize(remove_bernoulli(full, ps[ok]))):
                        laws[int(gid)] = row
                for gid in m[~ok]:
                    rep = self._representative(int(gid))
                    params = connection_row(self.profile, rep)
                    laws[int(gid)] = _renormalize(poisson_binomial_pmf(params, full.size - 1))
        return [laws[int(gid)] for gid in groups]

    def vertex_law(self, x: int) -> np.ndarray:
        group = int(self.group_of[x])
        if group not in self._vertex:
            self._vertex[group] = self.group_laws([group])[0]
        return self._vertex[group]

    def group_weights(self) -> np.ndarray:
        """mu_in mass of every group."""
        return np.bincount(self.group_of, weights=self.mu_in, minlength=self.group_keys.shape[0])

    def mixture(self) -> np.ndarray:
        """Law of D+_V with V ~ mu_in."""
        weights = self.group_weights()
        groups = np.arange(weights.size)
        width = max(self.full_law(ci).size for ci in range(self.classes.size))
        mix = np.zeros(width)
        for start in range(0, groups.size, CHUNK_ROWS):
            chunk = groups[start:start + CHUNK_ROWS]
            for gid, law in zip(chunk, self.group_laws(chunk)):
                mix[: law.size] += weights[gid] * law
        return mix / mix.sum()


def mixture_moments(pmf: np.ndarray) -> Tuple[float, float]:
    """Mean and variance of ln(D v 1) under ``pmf``."""
    logs = log_degree(np.arange(pmf.size))
    mean = float(np.dot(pmf, logs))
    var = float(np.dot(pmf, (logs - mean) ** 2))
    return mean, max(var, 0.0)


def entropy_stats_exact(profile: WeightProfile, tail_tol: float = TAIL_TOL) -> EntropicStats:
    """H and sigma^2 from exact per-vertex laws."""
    engine = DegreeLawEngine(profile, tail_tol)
    H, sigma2 = mixture_moments(engine.mixture())
    logger.debug(
        f"Exact entropy for n={profile.n}: {engine.classes.size} classes, "
        f"{engine.group_keys.shape[0]} laws, H={H:.6g}"
    )
    return EntropicStats.from_moments(profile.n, H, sigma2, EstimationMethod.EXACT)


def _sample_from(rng: np.random.Generator, pmf: np.ndarray, size: int) -> np.ndarray:
    return rng.choice(pmf.size, size=size, p=pmf / pmf.sum())


def entropy_stats_mc(profile: WeightProfile, samples: int, seed: int, tail_tol: float = TAIL_TOL) -> EntropicStats:
    """Sample V ~ mu_in, then D from the exact law of V; moments of ln(D v 1)."""
    if samples < MIN_MC_SAMPLES:
        raise ParameterError(f"need at least {MIN_MC_SAMPLES} samples, got {samples}")
    rng = stream(seed, TAG_MONTE_CARLO, 0)
    engine = DegreeLawEngine(profile, tail_tol, max_classes=None)
    vertices = rng.choice(profile.n, size=samples, p=engine.mu_in)
    groups = engine.group_of[vertices]
    degrees = np.empty(samples, dtype=np.int64)
    for group in np.unique(groups):
        where = np.flatnonzero(groups == group)
        x = int(vertices[where[0]])
        degrees[where] = _sample_from(rng, engine.vertex_law(x), where.size)
    logs = log_degree(degrees)
    H = float(logs.mean())
    sigma2 = float(logs.var(ddof=1))
    half = Z_95 * math.sqrt(sigma2 / samples)
    return EntropicStats.from_moments(
        profile.n, H, sigma2, EstimationMethod.MONTE_CARLO, samples=samples, ci_halfwidth=half
    )


def entropy_stats_empirical(g: Digraph, mu_in: Optional[np.ndarray] = None) -> EntropicStats:
    """Plug-in estimate sum_x mu_in(x) ln(D+_x v 1) on one graph.

    Without ``mu_in`` the normalised in-degrees of ``g`` are used.
    """
    if mu_in is None:
        deg = g.in_degree.astype(np.float64)
        mu_in = deg / deg.sum() if deg.sum() > 0 else np.full(g.n, 1.0 / g.n)
    logs = log_degree(g.out_degree)
    H = float(np.dot(mu_in, logs))
    sigma2 = float(np.dot(mu_in, (logs - H) ** 2))
    return EntropicStats.from_moments(g.n, H, sigma2, EstimationMethod.EMPIRICAL)


def sample_log_sums(
    rng: np.random.Generator, pmf: np.ndarray, t: int, samples: int
) -> Iterable[np.ndarray]:
    """Batches of sum_{k<=t} ln(D_k v 1) with D_k i.i.d. from ``pmf``."""
    logs = log_degree(np.arange(pmf.size))
    per_batch = max(1, SAMPLE_CHUNK // max(t, 1))
    done = 0
    while done < samples:
        size = min(per_batch, samples - done)
        draws = _sample_from(rng, pmf, size * t).reshape(size, t)
        yield logs[draws].sum(axis=1)
        done += size


def q_t(
    profile: WeightProfile,
    t: int,
    theta: float,
    samples: int,
    seed: int,
    mode: str = "exact-class-sampling",
    mixture: Optional[np.ndarray] = None,
    tail_tol: float = TAIL_TOL,
) -> Estimate:
    """P(sum_{k<=t} ln(D_k v 1) < -ln theta), D_k i.i.d. from the mu_in mixture."""
    if t < 1:
        raise ParameterError(f"t must be at least 1, got {t}")
    if mode != "exact-class-sampling":
        raise ParameterError(f"unknown sampling mode {mode!r}")
    if not 0.0 < theta < 1.0:
        raise ParameterError(f"theta must be in (0, 1), got {theta}")
    if mixture is None:
        mixture = DegreeLawEngine(profile, tail_tol, max_classes=None).mixture()
    return _log_sum_below(mixture, t, -math.log(theta), samples, seed)


def _log_sum_below(mixture: np.ndarray, t: int, level: float, samples: int, seed: int) -> Estimate:
    rng = stream(seed, TAG_MONTE_CARLO, 1)
    hits = 0
    for sums in sample_log_sums(rng, mixture, t, samples):
        hits += int(np.count_nonzero(sums < level))
    return Estimate.from_counts(hits, samples)


def gaussian_tail(lam: float) -> float:
    """Standard normal tail P(Z > lam)."""
    return float(stats.norm.sf(lam))


def nondegeneracy_check(es: EntropicStats, n: int, delta: float) -> NondegeneracyReport:
    """sigma^2 against (ln ln n)^(2+a) / (ln n)^a, a = delta/(delta+2).

    ``delta = inf`` gives the limiting threshold (ln ln n)^3 / ln n.
    """
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    if n <= 15:
        raise ParameterError("the nondegeneracy threshold needs n > 15")
    a = 1.0 if math.isinf(delta) else delta / (delta + 2.0)
    lnln = math.log(math.log(n))
    threshold = lnln ** (2.0 + a) / math.log(n) ** a
    ratio = es.sigma2 / threshold
    return NondegeneracyReport(delta=delta, ratio=ratio, threshold=threshold, ok=ratio > 1.0)


def _lyapunov_ratio(t: int, var: float, abs_moment: float, delta: float) -> float:
    if var <= 0:
        return 0.0
    return t * abs_moment / (t * var) ** (1.0 + delta / 2.0)


def lyapunov_diagnostic(
    profile: WeightProfile,
    t: int,
    delta: float,
    samples: int,
    seed: int = 0,
    tail_tol: float = TAIL_TOL,
) -> LyapunovReport:
    """sum_k E|L_k - H|^(2+delta) / Var(S_t)^(1+delta/2) for S_t a sum of t i.i.d. L_k."""
    if not delta > 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    engine = DegreeLawEngine(profile, tail_tol, max_classes=None)
    mixture = engine.mixture()
    rng = stream(seed, TAG_MONTE_CARLO, 2)
    logs = log_degree(_sample_from(rng, mixture, samples))
    h_hat = float(logs.mean())
    mc = _lyapunov_ratio(
        t, float(logs.var()), float(np.mean(np.abs(logs - h_hat) ** (2.0 + delta))), delta
    )

    exact = None
    if engine.classes.size <= MAX_CLASSES:
        H, var = mixture_moments(mixture)
        values = log_degree(np.arange(mixture.size))
        abs_moment = float(np.dot(mixture, np.abs(values - H) ** (2.0 + delta)))
        exact = _lyapunov_ratio(t, var, abs_moment, delta)
    return LyapunovReport(t=t, delta=delta, mc_ratio=mc, exact_ratio=exact, samples=samples)


def reciprocal_degree_bias(law: DegreeLaw) -> float:
    """r with E[1/(D v 1)] = (1 + r) / E[D]."""
    support = np.arange(law.pmf.size, dtype=np.float64)
    inverse = float(np.dot(law.pmf, 1.0 / np.maximum(support, 1.0)))
    return inverse * law.mean - 1.0


def class_degree_laws(profile: WeightProfile, tail_tol: float = TAIL_TOL) -> Dict[float, DegreeLaw]:
    """One exact law per out-weight class, for its first vertex."""
    classes, first = np.unique(profile.w_plus, return_index=True)
    if classes.size > MAX_CLASSES:
        raise ParameterError(f"{classes.size} classes exceed the limit of {MAX_CLASSES}")
    return {float(c): degree_law_exact(profile, int(x), tail_tol) for c, x in zip(classes, first)}


def gaussian_profile_table(
    profile: WeightProfile,
    lambdas: Sequence[float],
    t: int,
    samples: int,
    seed: int,
    es: Optional[EntropicStats] = None,
) -> pd.DataFrame:
    """q_t(theta_lambda) against the Gaussian tail, theta_lambda = exp(lambda sigma sqrt(t) - H t)."""
    es = es or entropy_stats_exact(profile)
    mixture = DegreeLawEngine(profile, max_classes=None).mixture()
    sigma = math.sqrt(es.sigma2)
    rows = []
    for i, lam in enumerate(lambdas):
        log_theta = lam * sigma * math.sqrt(t) - es.H * t
        # theta_lambda may leave (0, 1) far out in the window; compare on the log scale
        est = _log_sum_below(mixture, t, -log_theta, samples, seed + i)
        gauss = gaussian_tail(lam)
        rows.append(
            {
                "lambda": lam,
                "log_theta": log_theta,
                "q": est.value,
                "ci_lo": est.ci_lo,
                "ci_hi": est.ci_hi,
                "gauss": gauss,
                "abs_diff": abs(est.value - gauss),
            }
        )
    return pd.DataFrame(rows)


def lower_tail_threshold_c(profile: WeightProfile) -> float:
    """Largest c with the lower Chernoff bound on P(D+_x <= c ln n) at most 1/2 for all x."""
    # exp(-(m - c ln n)^2 / (2m)) <= 1/2 with c ln n < m, for the smallest mean m
    m = float(expected_out_degrees(profile).min())
    c = (m - math.sqrt(2.0 * m * math.log(2.0))) / profile.log_n
    return max(c, 0.0)


class EntropyAnalyzer:
    """Entropic statistics and their diagnostics for the CLI."""

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """Initialize the entropy analyzer.

        Args:
            config: Settings with ``tail_tol``, ``samples``, ``seed`` and ``delta``
        """
        self.config = config or {}
        self.tail_tol = float(self.config.get("tail_tol", TAIL_TOL))
        self.samples = int(self.config.get("samples", 100_000))
        self.seed = int(self.config.get("seed", 0))
        self.delta = float(self.config.get("delta", 0.05))

    def stats(self, profile: WeightProfile) -> EntropicStats:
        """Exact stats when the class count allows, Monte Carlo otherwise."""
        try:
            es = entropy_stats_exact(profile, self.tail_tol)
        except ParameterError as e:
            logger.warning(f"{e}; falling back to Monte Carlo")
            es = entropy_stats_mc(profile, max(self.samples, MIN_MC_SAMPLES), self.seed, self.tail_tol)
        if profile.n > 15:
            report = nondegeneracy_check(es, profile.n, self.delta)
            es = es.model_copy(update={"nondegeneracy": report})
            if not report.ok:
                logger.warning(f"Variance nondegeneracy fails at n={profile.n} (ratio {report.ratio:.3g})")
        return es

    def analyze(self, profile: WeightProfile, graph: Optional[Digraph] = None) -> Dict[str, Any]:
        """Stats plus the diagnostics reported alongside them."""
        es = self.stats(profile)
        result: Dict[str, Any] = {"stats": es.model_dump(mode="json")}
        result["lower_tail_c"] = lower_tail_threshold_c(profile)
        if np.unique(profile.w_plus).size <= MAX_CLASSES:
            laws = class_degree_laws(profile, self.tail_tol)
            result["reciprocal_bias"] = {str(c): reciprocal_degree_bias(law) for c, law in laws.items()}
        if graph is not None:
            emp = entropy_stats_empirical(graph, in_degree_distribution(profile))
            result["empirical"] = emp.model_dump(mode="json")
        logger.info(f"Entropy n={profile.n}: H={es.H:.5g}, sigma2={es.sigma2:.5g}, t_ent={es.t_ent:.4g}")
        return result
