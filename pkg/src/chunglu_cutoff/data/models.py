"""
Data models for the Chung-Lu cutoff toolkit.

This module defines the value records shared by the analyzers, the graph
and walk modules, and the experiment runners. Array-heavy objects that live
next to their algorithms (Digraph, MassTree, WalkTrace, ...) are frozen
dataclasses in their own modules.
"""

import hashlib
import math
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import stats

from ..utils.errors import ProfileError


def _frozen_array(values: Any) -> np.ndarray:
    array = np.array(values, dtype=np.float64).ravel()
    array.setflags(write=False)
    return array


class WeightProfile(BaseModel):
    """Vertex weights of a Chung-Lu digraph plus the assumption constants."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    w_plus: np.ndarray = Field(..., description="Out-weights, one per vertex")
    w_minus: np.ndarray = Field(..., description="In-weights, one per vertex")
    eta: float = Field(0.5, gt=0.0, lt=1.0, description="Moment exponent of the in-weights")
    m0: float = Field(1.01, gt=0.0, description="Lower bound on out-weights")
    m1: float = Field(10.0, gt=0.0, description="Upper bound on out-weights")
    m2: float = Field(100.0, gt=0.0, description="Bound on the (2+eta) moment of in-weights")

    @field_validator("w_plus", "w_minus", mode="before")
    @classmethod
    def _as_array(cls, value: Any) -> np.ndarray:
        array = _frozen_array(value)
        if not np.all(np.isfinite(array)):
            raise ProfileError("weights must be finite")
        if np.any(array < 0):
            raise ProfileError("weights must be nonnegative")
        return array

    @model_validator(mode="after")
    def _check_shape(self) -> "WeightProfile":
        if self.w_plus.shape != self.w_minus.shape:
            raise ProfileError(
                f"w_plus has {self.w_plus.size} entries but w_minus has {self.w_minus.size}"
            )
        if self.w_plus.size < 2:
            raise ProfileError("a profile needs at least two vertices")
        return self

    @property
    def n(self) -> int:
        return int(self.w_plus.size)

    @property
    def log_n(self) -> float:
        return math.log(self.n)

    @property
    def w_total(self) -> float:
        """The common weight sum (taken from the out-weights)."""
        return float(self.w_plus.sum())

    @property
    def scale(self) -> float:
        """ln(n)/n, the factor multiplying w+ w- in the edge probability."""
        return self.log_n / self.n

    def digest(self) -> bytes:
        """SHA-256 over the weights and constants."""
        sha = hashlib.sha256()
        sha.update(np.array([self.n], dtype="<u8").tobytes())
        sha.update(np.array([self.eta, self.m0, self.m1, self.m2], dtype="<f8").tobytes())
        sha.update(self.w_plus.astype("<f8").tobytes())
        sha.update(self.w_minus.astype("<f8").tobytes())
        return sha.digest()

    def check_index(self, x: int) -> int:
        if not 0 <= int(x) < self.n:
            raise ProfileError(f"vertex {x} out of range for n={self.n}")
        return int(x)

    def with_weights(self, w_plus: Any, w_minus: Any) -> "WeightProfile":
        return WeightProfile(
            w_plus=w_plus, w_minus=w_minus, eta=self.eta, m0=self.m0, m1=self.m1, m2=self.m2
        )


class ValidationReport(BaseModel):
    """Outcome of checking a profile against the standing assumptions."""

    ok: bool = Field(..., description="True iff no assumption is violated")
    n: int = Field(..., description="Vertex count")
    w_total: float = Field(..., description="Common weight sum")
    p_max: float = Field(..., description="Largest connection probability over x != y")
    mu_in_max: float = Field(..., description="Largest entry of the in-degree distribution")
    min_product: float = Field(..., description="min over x != y of w+_x w-_y")
    capped_pairs: int = Field(0, description="Ordered pairs whose probability hits the cap")
    reparam_max_error: float = Field(0.0, description="Largest deviation of the ratio-form probability")
    violations: List[str] = Field(default_factory=list, description="Failed assumptions")

    @model_validator(mode="after")
    def _ok_matches(self) -> "ValidationReport":
        if self.ok != (len(self.violations) == 0):
            raise ValueError("ok must be true exactly when there are no violations")
        return self


class DegreeGap(BaseModel):
    """mu_in against the normalised expected in-degree vector."""

    tv_gap: float = Field(..., description="TV distance between the two vectors")
    max_abs_gap: float = Field(..., description="Largest pointwise difference")
    expected_edges: float = Field(..., description="Sum of all connection probabilities")


class DegreeSummary(BaseModel):
    """Minimum and maximum in/out degrees of one graph."""

    delta_plus: int = Field(..., ge=0)
    delta_minus: int = Field(..., ge=0)
    Delta_plus: int = Field(..., ge=0)
    Delta_minus: int = Field(..., ge=0)
    e_plus_holds: bool = Field(..., description="delta_plus >= 2 and Delta_plus <= c ln n")
    c_used: float = Field(..., description="Constant C of the max out-degree bound")
    c_empirical: float = Field(..., description="Smallest C with Delta_plus <= C ln n")


class DegreeLaw(BaseModel):
    """Exact (truncated) law of one out-degree."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    pmf: np.ndarray = Field(..., description="Probabilities of 0..k_max")
    mean: float = Field(..., description="Mean of the pmf")
    analytic_mean: float = Field(..., description="Sum of the Bernoulli parameters")
    source_class: float = Field(..., description="Out-weight the law was computed for")
    truncated_mass: float = Field(0.0, description="Mass removed by the truncation")

    @field_validator("pmf", mode="before")
    @classmethod
    def _pmf_array(cls, value: Any) -> np.ndarray:
        return _frozen_array(value)

    @property
    def k_max(self) -> int:
        return int(self.pmf.size - 1)

    def expect(self, fn: Any) -> float:
        """E[fn(D)] for a vectorised function of the degree."""
        support = np.arange(self.pmf.size, dtype=np.float64)
        return float(np.dot(self.pmf, fn(support)))


class EstimationMethod(str, Enum):
    """How an entropic statistic was obtained."""
    EXACT = "exact"
    MONTE_CARLO = "monte_carlo"
    EMPIRICAL = "empirical"


class NondegeneracyReport(BaseModel):
    """Variance nondegeneracy test."""

    delta: float
    ratio: float
    threshold: float
    ok: bool


class EntropicStats(BaseModel):
    """Entropy, variance, entropic time and window."""

    n: int = Field(..., ge=2)
    H: float = Field(..., description="Mean log out-degree (nats)")
    sigma2: float = Field(..., ge=0.0, description="Variance of the log out-degree")
    t_ent: float = Field(..., description="ln(n)/H")
    w_n: float = Field(..., description="(sigma/H) sqrt(t_ent)")
    method: EstimationMethod
    samples: int = Field(0, ge=0)
    ci_halfwidth: float = Field(0.0, ge=0.0)
    nondegeneracy: Optional[NondegeneracyReport] = None

    @classmethod
    def from_moments(
        cls,
        n: int,
        H: float,
        sigma2: float,
        method: EstimationMethod,
        samples: int = 0,
        ci_halfwidth: float = 0.0,
    ) -> "EntropicStats":
        """Build stats from H and sigma2; t_ent and w_n follow by definition.

        H == 0 (every out-degree is 1) gives infinite t_ent and w_n.
        """
        if H < 0 or math.isnan(H):
            raise ValueError(f"entropy must be nonnegative, got {H}")
        sigma2 = max(float(sigma2), 0.0)
        if H == 0:
            t_ent = w_n = math.inf
        else:
            t_ent = math.log(n) / H
            w_n = math.sqrt(sigma2) / H * math.sqrt(t_ent)
        return cls(
            n=n, H=H, sigma2=sigma2, t_ent=t_ent, w_n=w_n,
            method=method, samples=samples, ci_halfwidth=ci_halfwidth,
        )


class LyapunovReport(BaseModel):
    """Lyapunov ratio of the log-degree sum."""

    t: int
    delta: float
    mc_ratio: float = Field(..., description="Monte Carlo estimate")
    exact_ratio: Optional[float] = Field(None, description="From exact mixture moments")
    samples: int

    @property
    def ratio(self) -> float:
        """The exact ratio when available, else the Monte Carlo one."""
        return self.mc_ratio if self.exact_ratio is None else self.exact_ratio


class Estimate(BaseModel):
    """A probability estimate with its 95% interval."""

    value: float = Field(..., ge=0.0, le=1.0)
    ci_lo: float = Field(..., ge=0.0, le=1.0)
    ci_hi: float = Field(..., ge=0.0, le=1.0)
    samples: int = Field(..., ge=0)
    method: str = "monte_carlo"

    @classmethod
    def from_counts(cls, successes: int, trials: int, method: str = "monte_carlo") -> "Estimate":
        """Sample proportion with a Wilson 95% interval."""
        if trials <= 0:
            raise ValueError("an estimate needs at least one trial")
        ci = stats.binomtest(int(successes), int(trials)).proportion_ci(
            confidence_level=0.95, method="wilson"
        )
        return cls(
            value=successes / trials,
            ci_lo=min(max(float(ci.low), 0.0), 1.0),
            ci_hi=min(max(float(ci.high), 0.0), 1.0),
            samples=int(trials),
            method=method,
        )

    @classmethod
    def exact(cls, value: float) -> "Estimate":
        value = min(max(float(value), 0.0), 1.0)
        return cls(value=value, ci_lo=value, ci_hi=value, samples=0, method="exact")

    def covers(self, value: float) -> bool:
        return self.ci_lo <= value <= self.ci_hi


class NicePathParams(BaseModel):
    """Lengths and thresholds of nice paths."""

    n: int
    eps: float = Field(..., gt=0.0, lt=1.0)
    gamma: float
    h_eps: int = Field(..., ge=1)
    s: int = Field(..., ge=1)
    t: int
    H_bar: float
    c_degree: float = Field(..., gt=0.0, description="C in the degree condition D <= C ln n")

    @model_validator(mode="after")
    def _lengths_add_up(self) -> "NicePathParams":
        if self.t != self.s + self.h_eps + 1:
            raise ValueError("t must equal s + h_eps + 1")
        return self

    @property
    def mass_floor(self) -> float:
        """1/(n ln^3 n), the mass bound of the first condition."""
        return 1.0 / (self.n * math.log(self.n) ** 3)

    @property
    def tree_threshold(self) -> float:
        """exp(-H_bar s), the mass-tree selection threshold."""
        return math.exp(-self.H_bar * self.s)


class NicePathVerdict(BaseModel):
    """The four nice-path conditions for one trace."""

    mass_small: bool = Field(..., description="Path mass below 1/(n ln^3 n)")
    tree_prefix: bool = Field(..., description="First s steps are tree edges")
    unique_suffix: bool = Field(..., description="Only one short path into the endpoint")
    degree_bound: bool = Field(..., description="Out-degree at step s at most C ln n")

    @property
    def nice(self) -> bool:
        return self.mass_small and self.tree_prefix and self.unique_suffix and self.degree_bound

    def flags(self) -> Tuple[bool, bool, bool, bool]:
        return (self.mass_small, self.tree_prefix, self.unique_suffix, self.degree_bound)


class ExperimentKind(str, Enum):
    """Experiments runnable from the CLI."""
    GENERATE = "generate"
    STATS = "stats"
    MIX = "mix"
    CUTOFF = "cutoff"
    PROFILE = "profile"
    ENTROPY = "entropy"
    QUENCHED = "quenched"
    ANNEALED = "annealed"
    ORACLE = "oracle"


class ExperimentConfig(BaseModel):
    """Parameters of one experiment run, as stored in the config file."""

    model_config = ConfigDict(extra="forbid")

    version: int = Field(1, description="Config file format version")
    experiment: ExperimentKind = Field(ExperimentKind.CUTOFF)
    weights: str = Field("const:2.0", description="Weight source spec")
    profile_path: Optional[str] = Field(None, description="Profile file, overrides weights")
    eta: float = Field(0.5, gt=0.0, lt=1.0)
    m0: float = Field(1.01, gt=0.0)
    m1: float = Field(10.0, gt=0.0)
    m2: float = Field(100.0, gt=0.0)
    n_list: List[int] = Field(default_factory=lambda: [1000])
    replicas: int = Field(4, ge=1)
    seed: int = Field(20240601, ge=0)
    workers: int = Field(1, ge=1)
    starts: int = Field(10, ge=1, description="Start vertices per replica")
    eps: float = Field(0.5, gt=0.0, lt=1.0)
    h_eps: Optional[int] = Field(None, ge=1, description="Override for the root radius")
    beta: float = Field(0.5, gt=0.0, lt=1.0)
    lambda_list: List[float] = Field(default_factory=lambda: [-2.0, -1.0, 0.0, 1.0, 2.0])
    delta: float = Field(0.05, gt=0.0)
    degree_c: Optional[float] = Field(None, gt=0.0, description="C of the degree bound")
    t_max: int = Field(60, ge=0)
    samples: int = Field(10000, ge=1, description="Monte Carlo samples per estimate")
    runs: int = Field(10000, ge=1, description="Annealed runs")
    walks: int = Field(2, ge=1, description="Annealed walk count K")
    horizon: int = Field(10, ge=1, description="Annealed horizon T")
    tail_tol: float = Field(1e-12, gt=0.0, lt=1.0)
    tol: float = Field(1e-12, gt=0.0)
    max_iter: int = Field(100000, ge=1)
    out_dir: str = Field("results")
    inject_fault: Optional[str] = Field(None, description="Oracle name to sabotage")

    @field_validator("n_list")
    @classmethod
    def _sizes(cls, value: List[int]) -> List[int]:
        if not value or any(n < 2 for n in value):
            raise ValueError("n_list needs at least one size >= 2")
        return value

    @field_validator("version")
    @classmethod
    def _version(cls, value: int) -> int:
        if value != 1:
            raise ValueError(f"unsupported config version {value}")
        return value

    def digest(self) -> str:
        payload = self.model_dump_json(exclude={"workers"})
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class OutputRecord(BaseModel):
    """One file written by a run."""

    path: str
    sha256: str
    size: int


class RunManifest(BaseModel):
    """What a run produced and how to reproduce it."""

    experiment: ExperimentKind
    config_digest: str
    code_version: str
    seed: int
    replica_seeds: List[int] = Field(default_factory=list)
    started_at: datetime = Field(default_factory=datetime.now)
    wall_clock_seconds: float = 0.0
    outputs: List[OutputRecord] = Field(default_factory=list)
    extra: Dict[str, Any] = Field(default_factory=dict)
