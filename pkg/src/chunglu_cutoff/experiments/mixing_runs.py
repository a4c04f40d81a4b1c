"""
Mixing experiments: TV curves, the cutoff window around t_ent and the
Gaussian profile inside it.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from ..analyzers.entropy_analyzer import (
    EntropyAnalyzer,
    entropy_stats_empirical,
    gaussian_profile_table,
    gaussian_tail,
    lyapunov_diagnostic,
)
from ..analyzers.profile_analyzer import in_degree_distribution
from ..data.models import EntropicStats, ExperimentConfig, WeightProfile
from ..utils.errors import ParameterError
from ..utils.outputs import OutputWriter
from ..walks.kernel import (
    averaged_distribution,
    collision_mass,
    heavy_set_mass,
    mixing_time,
    pi_tilde,
    stationary_power,
    tv_curve,
    tv_distance,
)
from .common import (
    build_profile,
    choose_starts,
    map_ordered,
    radius_for,
    require_some,
    sample_replica,
    seeds_for,
    sizes,
)

PI_TILDE_TV = 0.1
PI_TILDE_SHARE = 0.9
PROFILE_TOL = 0.15


@dataclass(frozen=True)
class CurveTask:
    """One replica's work order; pickled to pool workers."""

    profile: WeightProfile
    n: int
    replica: int
    seed: int
    config: ExperimentConfig
    t_max: int
    h_eps: Optional[int] = None
    mixing_times: bool = False


def entropy_analyzer(config: ExperimentConfig) -> EntropyAnalyzer:
    return EntropyAnalyzer(
        {"tail_tol": config.tail_tol, "samples": config.samples, "seed": config.seed, "delta": config.delta}
    )


def _finite_t_ent(es: EntropicStats) -> float:
    if not math.isfinite(es.t_ent):
        raise ParameterError("entropy is 0 (every out-degree is 1); the entropic time is infinite")
    return es.t_ent


def _curve_replica(task: CurveTask) -> Optional[Dict[str, Any]]:
    """Sample one replica and its TV table up to task.t_max; None if skipped."""
    config = task.config
    rep = sample_replica(task.profile, task.replica, task.seed)
    if not rep.strongly_connected:
        return None
    g = rep.graph
    mu_in = in_degree_distribution(task.profile)
    pi = stationary_power(g, tol=config.tol, max_iter=config.max_iter, start=mu_in)
    starts = choose_starts(task.n, config.starts, config.seed, task.replica)
    result: Dict[str, Any] = {
        "replica": task.replica,
        "seed": task.seed,
        "curve": tv_curve(g, starts, task.t_max, pi),
        "heavy": heavy_set_mass(pi, config.delta),
        "collision": collision_mass(pi),
        "t_ent_empirical": entropy_stats_empirical(g, mu_in).t_ent,
    }
    if task.mixing_times:
        result["t_mix"] = [mixing_time(g, int(x), config.eps, task.t_max, pi) for x in starts]
        result["averaged_tv"] = tv_distance(averaged_distribution(g, task.t_max), pi)
    if task.h_eps is not None:
        result["pi_tilde_tv"] = tv_distance(pi_tilde(g, task.h_eps, mu_in), pi)
    return result


def run_mix(config: ExperimentConfig, writer: OutputWriter) -> Dict[str, Any]:
    """TV curves for t = 0..t_max, eps-mixing times and stationary-mass statistics.

    stationary.csv also compares pi with mu_in advanced h_eps steps and with
    the walk averaged over all starts.
    """
    analyzer = entropy_analyzer(config)
    frames: List[pd.DataFrame] = []
    times: List[Dict[str, Any]] = []
    pi_rows: List[Dict[str, Any]] = []
    seeds_used: List[int] = []
    for n in sizes(config):
        profile = build_profile(config, n)
        h_eps = radius_for(config, n, analyzer.stats(profile))
        seeds = seeds_for(config, n)
        seeds_used.extend(seeds)
        tasks = [
            CurveTask(profile, n, r, s, config, config.t_max, h_eps=h_eps, mixing_times=True)
            for r, s in enumerate(seeds)
        ]
        results = require_some(map_ordered(_curve_replica, tasks, config.workers), n)
        for res in results:
            curve = res["curve"]
            frame = curve.to_frame()
            frame.insert(0, "replica", res["replica"])
            frame.insert(0, "n", n)
            frames.append(frame)
            for x, t_mix in zip(curve.start_vertices, res["t_mix"]):
                times.append({"n": n, "replica": res["replica"], "start": int(x), "t_mix": t_mix})
            tilde = res.get("pi_tilde_tv")
            pi_rows.append(
                {
                    "n": n,
                    "replica": res["replica"],
                    "heavy_set_size": res["heavy"]["set_size"],
                    "heavy_mass": res["heavy"]["mass"],
                    "heavy_bound": res["heavy"]["bound"],
                    "heavy_holds": res["heavy"]["holds"],
                    "collision": res["collision"],
                    "collision_scaled": res["collision"] * n / math.log(n) ** 6,
                    "h_eps": h_eps,
                    "pi_tilde_tv": tilde,
                    "pi_tilde_close": None if tilde is None else bool(tilde <= PI_TILDE_TV),
                    "averaged_tv": res["averaged_tv"],
                }
            )
        if h_eps is not None:
            share = float(np.mean([res["pi_tilde_tv"] <= PI_TILDE_TV for res in results]))
            log = logger.info if share >= PI_TILDE_SHARE else logger.warning
            log(f"n={n}: TV(pi_tilde, pi) <= {PI_TILDE_TV} on {share:.0%} of graphs (h_eps={h_eps})")
    writer.csv("mix_curves.csv", pd.concat(frames, ignore_index=True))
    writer.csv("mixing_times.csv", times)
    writer.csv("stationary.csv", pi_rows)
    return {"rows": pi_rows, "seeds": seeds_used}


def cutoff_times(t_ent: float, beta: float) -> Tuple[int, int]:
    """floor((1-beta) t_ent) and ceil((1+beta) t_ent)."""
    return int(math.floor((1.0 - beta) * t_ent)), int(math.ceil((1.0 + beta) * t_ent))


def run_cutoff(config: ExperimentConfig, writer: OutputWriter) -> Dict[str, Any]:
    """TV just before and just after the cutoff window, per replica and start."""
    analyzer = entropy_analyzer(config)
    summary: List[Dict[str, Any]] = []
    seeds_used: List[int] = []
    for n in sizes(config):
        profile = build_profile(config, n)
        es = analyzer.stats(profile)
        t_lo, t_hi = cutoff_times(_finite_t_ent(es), config.beta)
        seeds = seeds_for(config, n)
        seeds_used.extend(seeds)
        logger.info(f"Cutoff n={n}: t_ent={es.t_ent:.3f}, checking t={t_lo} and t={t_hi}")
        tasks = [CurveTask(profile, n, r, s, config, t_hi) for r, s in enumerate(seeds)]
        results = require_some(map_ordered(_curve_replica, tasks, config.workers), n)

        rows = []
        for res in results:
            curve = res["curve"]
            for x, lo, hi in zip(curve.start_vertices, curve.at(t_lo), curve.at(t_hi)):
                rows.append(
                    {
                        "replica": res["replica"], "seed": res["seed"], "start": int(x),
                        "tv_lower": float(lo), "tv_upper": float(hi),
                        "t_ent_empirical": res["t_ent_empirical"],
                    }
                )
        writer.csv(f"cutoff_n{n}.csv", rows)
        frame = pd.DataFrame(rows)
        summary.append(
            {
                "n": n,
                "t_ent": es.t_ent,
                "t_lower": t_lo,
                "t_upper": t_hi,
                "replicas_used": len(results),
                "replicas_skipped": len(seeds) - len(results),
                "mean_tv_lower": frame["tv_lower"].mean(),
                "min_tv_lower": frame["tv_lower"].min(),
                "mean_tv_upper": frame["tv_upper"].mean(),
                "max_tv_upper": frame["tv_upper"].max(),
            }
        )
    writer.csv("cutoff_summary.csv", summary)
    return {"rows": summary, "seeds": seeds_used}


def window_times(es: EntropicStats, lambdas: Sequence[float]) -> List[int]:
    """round(t_ent + lambda w_n), clamped at 0."""
    return [max(0, int(round(es.t_ent + lam * es.w_n))) for lam in lambdas]


def lyapunov_trend_ok(ratios: Sequence[float]) -> bool:
    """Ratios listed by increasing n never rise and end below where they start.

    A single size shows no trend and fails.
    """
    if len(ratios) < 2:
        return False
    steps = np.diff(np.asarray(ratios, dtype=np.float64))
    return bool(np.all(steps <= 0.0) and ratios[-1] < ratios[0])


def run_profile(config: ExperimentConfig, writer: OutputWriter) -> Dict[str, Any]:
    """Mean TV at t_lambda against the Gaussian tail, and the i.i.d. version of it.

    The comparison is armed only when the Lyapunov ratio of the log-degree sum
    falls as n grows and the variance nondegeneracy check passes at that n;
    unarmed rows are written with ``accepted`` left empty.
    """
    analyzer = entropy_analyzer(config)
    ordered = sorted(sizes(config))
    profiles: Dict[int, WeightProfile] = {}
    stats: Dict[int, EntropicStats] = {}
    ratios: Dict[int, float] = {}
    for n in ordered:
        profiles[n] = build_profile(config, n)
        stats[n] = analyzer.stats(profiles[n])
        t = max(1, int(math.floor(_finite_t_ent(stats[n]))))
        report = lyapunov_diagnostic(profiles[n], t, config.delta, config.samples, config.seed, config.tail_tol)
        ratios[n] = report.ratio
        logger.debug(f"n={n}: Lyapunov ratio {report.ratio:.4g} at t={t}")
    trend_ok = lyapunov_trend_ok([ratios[n] for n in ordered])
    if not trend_ok:
        logger.warning(f"Lyapunov ratio does not fall over n={ordered}; profile comparison not armed")

    rows: List[Dict[str, Any]] = []
    seeds_used: List[int] = []
    for n in ordered:
        profile, es = profiles[n], stats[n]
        nondegenerate = es.nondegeneracy is not None and es.nondegeneracy.ok
        armed = trend_ok and nondegenerate
        t_lams = window_times(es, config.lambda_list)
        seeds = seeds_for(config, n)
        seeds_used.extend(seeds)
        tasks = [CurveTask(profile, n, r, s, config, max(t_lams)) for r, s in enumerate(seeds)]
        results = require_some(map_ordered(_curve_replica, tasks, config.workers), n)
        for lam, t_lam in zip(config.lambda_list, t_lams):
            mean_tv = float(np.mean(np.concatenate([res["curve"].at(t_lam) for res in results])))
            gauss = gaussian_tail(lam)
            diff = abs(mean_tv - gauss)
            rows.append(
                {
                    "n": n, "lambda": lam, "t_lambda": t_lam, "mean_tv": mean_tv,
                    "gauss": gauss, "abs_diff": diff, "nondegenerate": nondegenerate,
                    "lyapunov_ratio": ratios[n], "armed": armed,
                    "accepted": bool(diff <= PROFILE_TOL) if armed else None,
                }
            )
        table = gaussian_profile_table(
            profile, config.lambda_list, max(1, int(math.floor(es.t_ent))), config.samples, config.seed, es
        )
        writer.csv(f"gaussian_q_n{n}.csv", table)
    writer.csv("profile.csv", rows)
    return {"rows": rows, "seeds": seeds_used}
