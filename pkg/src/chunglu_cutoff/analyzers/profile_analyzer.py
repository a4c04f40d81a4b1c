"""
Closed-form model quantities and profile validation.

Edge (x, y), x != y, is present with probability min(w+_x w-_y ln(n)/n, 1).
All functions here are pure; a WeightProfile is immutable and may be shared.
"""

import math
from typing import Any, Dict, Optional

import numpy as np
from loguru import logger

from ..data.models import DegreeGap, ValidationReport, WeightProfile
from ..utils.errors import ProfileError

WEIGHT_SUM_RTOL = 1e-9
REPARAM_TOL = 1e-12
REPARAM_PAIRS = 100


def connection_probability(profile: WeightProfile, x: int, y: int) -> float:
    """Probability that the edge x -> y is present."""
    x = profile.check_index(x)
    y = profile.check_index(y)
    if x == y:
        raise ProfileError(f"no self-loops in the model (x = y = {x})")
    return min(profile.w_plus[x] * profile.w_minus[y] * profile.scale, 1.0)


def connection_row(profile: WeightProfile, x: int) -> np.ndarray:
    """Probabilities of all edges leaving x; the entry for x itself is 0."""
    x = profile.check_index(x)
    row = np.minimum(profile.w_plus[x] * profile.w_minus * profile.scale, 1.0)
    row[x] = 0.0
    return row


def directed_chung_lu_probability(profile: WeightProfile, x: int, y: int) -> float:
    """Uncapped probability in ratio form w~+_x w~-_y / sum(w~-).

    With w~ = w * W * ln(n)/n, where W is the weight sum, this agrees with the
    product form before the cap.
    """
    factor = profile.w_total * profile.scale
    wt_plus = profile.w_plus[x] * factor
    wt_minus = profile.w_minus * factor
    return float(wt_plus * wt_minus[y] / wt_minus.sum())


def in_degree_distribution(profile: WeightProfile) -> np.ndarray:
    """mu_in(x) = w-_x / sum(w-)."""
    total = float(profile.w_minus.sum())
    if total <= 0:
        raise ProfileError("in-weights sum to zero")
    mu = profile.w_minus / total
    return mu / mu.sum()


def _capped_row_sums(coef: np.ndarray, weights: np.ndarray, scale: float) -> np.ndarray:
    """sum_y min(coef_i * weights_y * scale, 1) for every i, self terms included."""
    order = np.sort(weights)
    prefix = np.concatenate(([0.0], np.cumsum(order)))
    with np.errstate(divide="ignore"):
        cutoff = np.where(coef > 0, 1.0 / (coef * scale), np.inf)
    # weights at or above the cutoff are capped
    first_capped = np.searchsorted(order, cutoff, side="left")
    capped = order.size - first_capped
    return coef * scale * prefix[first_capped] + capped


def expected_out_degrees(profile: WeightProfile) -> np.ndarray:
    """E[D+_x] for every x, self term excluded and caps respected."""
    full = _capped_row_sums(profile.w_plus, profile.w_minus, profile.scale)
    self_terms = np.minimum(profile.w_plus * profile.w_minus * profile.scale, 1.0)
    return full - self_terms


def expected_in_degrees(profile: WeightProfile) -> np.ndarray:
    """E[D-_y] for every y."""
    full = _capped_row_sums(profile.w_minus, profile.w_plus, profile.scale)
    self_terms = np.minimum(profile.w_plus * profile.w_minus * profile.scale, 1.0)
    return full - self_terms


def expected_out_degree(profile: WeightProfile, x: int) -> float:
    """E[D+_x] = sum over y != x of the connection probabilities."""
    return float(connection_row(profile, x).sum())


def expected_edge_count(profile: WeightProfile) -> float:
    return float(expected_out_degrees(profile).sum())


def degree_gap(profile: WeightProfile) -> DegreeGap:
    """Compare mu_in with the normalised vector of expected in-degrees."""
    mu = in_degree_distribution(profile)
    in_deg = expected_in_degrees(profile)
    total = float(in_deg.sum())
    normalized = in_deg / total if total > 0 else np.full(profile.n, 1.0 / profile.n)
    diff = np.abs(mu - normalized)
    return DegreeGap(
        tv_gap=float(0.5 * diff.sum()),
        max_abs_gap=float(diff.max()),
        expected_edges=total,
    )


def chernoff_upper_tail(mean: float, t: float) -> float:
    """Bound on P(D >= E[D] + t) for a sum of independent Bernoullis."""
    if t <= 0:
        return 1.0
    return math.exp(-t * t / (2.0 * (mean + t / 3.0)))


def chernoff_lower_tail(mean: float, t: float) -> float:
    """Bound on P(D <= E[D] - t)."""
    if t <= 0:
        return 1.0
    if mean <= 0:
        return 0.0
    return math.exp(-t * t / (2.0 * mean))


def _max_excluding_self(a: np.ndarray, b: np.ndarray) -> float:
    """max over x != y of a_x * b_y."""
    top = np.argsort(b)[-2:]
    best_b = np.full(a.size, b[top[-1]])
    best_b[top[-1]] = b[top[0]]
    return float(np.max(a * best_b))


def _min_excluding_self(a: np.ndarray, b: np.ndarray) -> float:
    """min over x != y of a_x * b_y."""
    low = np.argsort(b)[:2]
    best_b = np.full(a.size, b[low[0]])
    best_b[low[0]] = b[low[1]]
    return float(np.min(a * best_b))


def _capped_pair_count(profile: WeightProfile) -> int:
    order = np.sort(profile.w_minus)
    with np.errstate(divide="ignore"):
        cutoff = np.where(profile.w_plus > 0, 1.0 / (profile.w_plus * profile.scale), np.inf)
    capped = order.size - np.searchsorted(order, cutoff, side="left")
    self_capped = profile.w_plus * profile.w_minus * profile.scale >= 1.0
    return int(capped.sum() - self_capped.sum())


def _reparam_error(profile: WeightProfile, pairs: int = REPARAM_PAIRS) -> float:
    """Largest |ratio form - product form| over sampled pairs, before caps."""
    seed = int.from_bytes(profile.digest()[:8], "little")
    rng = np.random.default_rng(seed)
    xs = rng.integers(0, profile.n, size=pairs)
    ys = (xs + rng.integers(1, profile.n, size=pairs)) % profile.n
    worst = 0.0
    for x, y in zip(xs, ys):
        product = profile.w_plus[x] * profile.w_minus[y] * profile.scale
        ratio = directed_chung_lu_probability(profile, int(x), int(y))
        worst = max(worst, abs(ratio - product) / max(product, 1e-300))
    return worst


def validate_profile(profile: WeightProfile, lambda_min: float = 1.0) -> ValidationReport:
    """Check the standing assumptions; failures are listed, never raised."""
    violations = []
    w_plus, w_minus = profile.w_plus, profile.w_minus
    total_plus = float(w_plus.sum())
    total_minus = float(w_minus.sum())

    if not math.isclose(total_plus, total_minus, rel_tol=WEIGHT_SUM_RTOL):
        violations.append("weight sums differ")
    if np.any(w_plus <= 0) or np.any(w_minus <= 0):
        violations.append("nonpositive weight")
    if profile.m0 <= 1.0:
        violations.append("m0 not above 1")
    if np.min(w_plus) < profile.m0:
        violations.append("out-weight lower bound")
    if np.max(w_plus) > profile.m1:
        violations.append("out-weight upper bound")
    if float(np.sum(w_minus ** (2.0 + profile.eta))) > profile.m2 * profile.n:
        violations.append("in-weight moment bound")

    min_product = _min_excluding_self(w_plus, w_minus)
    if min_product < lambda_min:
        violations.append("min product")

    reparam_error = _reparam_error(profile)
    if reparam_error > REPARAM_TOL:
        violations.append("ratio-form mismatch")

    mu_in_max = float(w_minus.max() / total_minus) if total_minus > 0 else math.inf
    report = ValidationReport(
        ok=not violations,
        n=profile.n,
        w_total=total_plus,
        p_max=min(_max_excluding_self(w_plus, w_minus) * profile.scale, 1.0),
        mu_in_max=mu_in_max,
        min_product=min_product,
        capped_pairs=_capped_pair_count(profile),
        reparam_max_error=reparam_error,
        violations=violations,
    )
    if violations:
        logger.warning(f"Profile with n={profile.n} violates: {', '.join(violations)}")
    return report


class ProfileAnalyzer:
    """Validates profiles and summarises their closed-form quantities."""

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """Initialize the profile analyzer.

        Args:
            config: Analysis settings; ``lambda_min`` is the required
                minimum of w+_x w-_y
        """
        self.config = config or {}
        self.lambda_min = float(self.config.get("lambda_min", 1.0))

    def analyze(self, profile: WeightProfile) -> Dict[str, Any]:
        """Validation report plus degree gap and expected edge count."""
        report = validate_profile(profile, self.lambda_min)
        gap = degree_gap(profile)
        logger.info(
            f"Profile n={profile.n}: W={report.w_total:.4g}, p_max={report.p_max:.3g}, "
            f"expected edges={gap.expected_edges:.4g}"
        )
        return {
            "validation": report.model_dump(),
            "degree_gap": gap.model_dump(),
            "mu_in_bound": profile.n ** (-0.5 - profile.eta / 6.0),
        }
