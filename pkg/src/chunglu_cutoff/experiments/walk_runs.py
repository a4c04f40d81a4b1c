"""
Entropy, quenched path-mass and annealed-walk experiments.
"""

import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from ..analyzers.entropy_analyzer import DegreeLawEngine, lyapunov_diagnostic
from ..analyzers.profile_analyzer import in_degree_distribution
from ..data.models import EntropicStats, ExperimentConfig, WeightProfile
from ..graphs.degrees import degree_summary, empirical_c
from ..graphs.generator import sample_digraph
from ..graphs.structures import (
    MassTree,
    build_mass_tree,
    dump_mass_tree,
    escape_profile,
    in_ball_size_check,
    nice_params,
    roots,
    tree_excess_values,
    tree_mass_coverage,
    write_roots,
)
from ..utils.errors import ParameterError
from ..utils.outputs import OutputWriter
from ..walks.annealed import (
    collision_at_start,
    fresh_vertex_law,
    meeting_probability,
    run_records,
    self_intersection_stats,
)
from ..walks.kernel import tv_distance
from ..walks.quenched import Q_COLUMNS, default_ell, estimate_Q_bar, nice_mass_deficit, q_rows, support_threshold
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
from .mixing_runs import entropy_analyzer

EXACT_Q_MAX_N = 2000


def run_entropy(config: ExperimentConfig, writer: OutputWriter) -> Dict[str, Any]:
    """Exact entropic statistics per size with their diagnostics."""
    analyzer = entropy_analyzer(config)
    rows: List[Dict[str, Any]] = []
    for n in sizes(config):
        profile = build_profile(config, n)
        g = sample_digraph(profile, seeds_for(config, n)[0], workers=config.workers)
        result = analyzer.analyze(profile, g)
        es = EntropicStats.model_validate(result["stats"])
        t = max(1, int(math.floor(es.t_ent))) if math.isfinite(es.t_ent) else 1
        result["lyapunov"] = lyapunov_diagnostic(
            profile, t, config.delta, config.samples, config.seed, config.tail_tol
        ).model_dump()
        writer.json(f"entropy_n{n}.json", result)

        mixture = DegreeLawEngine(profile, config.tail_tol, max_classes=None).mixture()
        writer.csv(f"degree_mixture_n{n}.csv", pd.DataFrame({"k": np.arange(mixture.size), "pmf": mixture}))
        loglog = math.log(math.log(n))
        rows.append(
            {
                "n": n, "H": es.H, "sigma2": es.sigma2, "t_ent": es.t_ent, "w_n": es.w_n,
                "method": es.method.value, "H_over_loglog": es.H / loglog,
                "sigma2_over_loglog": es.sigma2 / loglog,
                "H_empirical": result["empirical"]["H"],
            }
        )
    writer.csv("entropy.csv", rows)
    return {"rows": rows, "seeds": []}


def _thetas(n: int, beta: float) -> List[float]:
    return [n ** -0.5, n ** -1.5, support_threshold(n, beta)]


def _quenched_replica(
    task: Tuple[WeightProfile, int, int, int, ExperimentConfig, EntropicStats],
) -> Optional[Dict[str, Any]]:
    profile, n, r, seed, config, es = task
    rep = sample_replica(profile, r, seed)
    if not rep.strongly_connected:
        return None
    g = rep.graph
    starts = choose_starts(n, config.starts, config.seed, r)
    t = max(1, int(math.floor(es.t_ent)))
    thetas = _thetas(n, config.beta)
    q = q_rows(g, starts, t, thetas, config.samples, seed)
    if n <= EXACT_Q_MAX_N:
        q.extend(q_rows(g, starts, t, thetas, config.samples, seed, exact=True))
    for row in q:
        row.update(n=n, replica=r)

    ell = default_ell(n)
    q_bar = []
    for x in starts:
        est = estimate_Q_bar(g, int(x), t, n ** -0.5, ell, config.samples, seed)
        q_bar.append({"n": n, "replica": r, "x": int(x), "t": t, "ell": ell, "estimate": est.value,
                      "ci_lo": est.ci_lo, "ci_hi": est.ci_hi})

    result: Dict[str, Any] = {"replica": r, "q": q, "q_bar": q_bar, "nice": [], "structure": None,
                              "tree": None, "roots": None}
    c = config.degree_c or empirical_c(g)
    try:
        params = nice_params(n, config.eps, es, h_eps=config.h_eps, c_degree=c)
    except ParameterError as e:
        logger.warning(f"Replica {r}: nice-path statistics skipped ({e})")
        return result

    root_set = roots(g, params.h_eps)
    in_ok, in_max = in_ball_size_check(g, params.h_eps, config.eps)
    excess = tree_excess_values(g, 2 * params.h_eps, starts)
    result["structure"] = {
        "n": n, "replica": r, "h_eps": params.h_eps, "s": params.s, "t": params.t,
        "root_fraction": root_set.size / n, "in_ball_ok": in_ok, "in_ball_max": in_max,
        "excess_ge2_fraction": float(np.mean(excess >= 2)),
        "e_plus_holds": degree_summary(g, c).e_plus_holds,
        "escape_at_h": float(escape_profile(g, int(starts[0]), root_set, params.h_eps)[-1]),
    }
    result["roots"] = root_set
    for x in np.intersect1d(starts, root_set):
        tree = build_mass_tree(g, int(x), params)
        deficit = nice_mass_deficit(g, int(x), params, tree, config.samples, seed)
        result["nice"].append(
            {
                "n": n, "replica": r, "x": int(x), "kappa": tree.kappa,
                "kappa_bound": 2.0 * math.exp(params.H_bar * params.s),
                "discarded_mass": tree.discarded_mass,
                "coverage": tree_mass_coverage(g, int(x), tree, params.s),
                "deficit": deficit.value, "ci_lo": deficit.ci_lo, "ci_hi": deficit.ci_hi,
            }
        )
        if result["tree"] is None:
            result["tree"] = tree
    return result


def run_quenched(config: ExperimentConfig, writer: OutputWriter) -> Dict[str, Any]:
    """Q at t = floor(t_ent) for three thresholds, the delayed variant and nice paths."""
    analyzer = entropy_analyzer(config)
    q_all: List[Dict[str, Any]] = []
    q_bar: List[Dict[str, Any]] = []
    nice: List[Dict[str, Any]] = []
    structure: List[Dict[str, Any]] = []
    seeds_used: List[int] = []
    for n in sizes(config):
        profile = build_profile(config, n)
        es = analyzer.stats(profile)
        if not math.isfinite(es.t_ent):
            raise ParameterError("entropy is 0; path masses never decay")
        seeds = seeds_for(config, n)
        seeds_used.extend(seeds)
        logger.info(f"Quenched n={n}: t={int(es.t_ent)}, {len(seeds)} replicas x {config.starts} starts")
        tasks = [(profile, n, r, s, config, es) for r, s in enumerate(seeds)]
        results = require_some(map_ordered(_quenched_replica, tasks, config.workers), n)
        for res in results:
            q_all.extend(res["q"])
            q_bar.extend(res["q_bar"])
            nice.extend(res["nice"])
            if res["structure"] is not None:
                structure.append(res["structure"])
                writer.add(write_roots(res["roots"], writer.path(f"roots/n{n}_r{res['replica']}.txt")))
            if res["tree"] is not None:
                tree: MassTree = res["tree"]
                writer.add(dump_mass_tree(tree, writer.path(f"trees/n{n}_r{res['replica']}_x{tree.root}.txt")))
    writer.csv("quenched_q.csv", q_all, columns=["n", "replica"] + Q_COLUMNS)
    writer.csv("quenched_q_bar.csv", q_bar)
    if structure:
        writer.csv("structures.csv", structure)
        writer.csv("nice_paths.csv", nice)
    return {"rows": structure, "q": q_all, "seeds": seeds_used}


def run_annealed(config: ExperimentConfig, writer: OutputWriter) -> Dict[str, Any]:
    """Fresh-vertex law, self-intersections and meeting probability of annealed walks."""
    analyzer = entropy_analyzer(config)
    rows: List[Dict[str, Any]] = []
    tau_rows: List[Dict[str, Any]] = []
    for n in sizes(config):
        profile = build_profile(config, n)
        mu_in = in_degree_distribution(profile)
        logger.info(f"Annealed n={n}: {config.runs} runs, K={config.walks}, T={config.horizon}")
        writer.jsonl(f"runs_n{n}.jsonl", run_records(profile, config.walks, config.horizon, config.runs, config.seed))

        s = max(1, min(config.horizon, int(math.isqrt(n))))
        law, fresh_rate = fresh_vertex_law(profile, s, config.runs, config.seed)
        rows.append({"n": n, "statistic": "fresh_rate", "param": s, "value": fresh_rate,
                     "ci_lo": math.nan, "ci_hi": math.nan})
        rows.append({"n": n, "statistic": "fresh_law_tv", "param": s,
                     "value": tv_distance(law, mu_in) if law.sum() > 0 else 1.0,
                     "ci_lo": math.nan, "ci_hi": math.nan})

        est, tau_counts = self_intersection_stats(profile, config.horizon, config.runs, config.seed)
        rows.append({"n": n, "statistic": "self_intersection", "param": config.horizon,
                     "value": est.value, "ci_lo": est.ci_lo, "ci_hi": est.ci_hi})
        tau_rows.extend({"n": n, "tau": t, "count": int(c)} for t, c in enumerate(tau_counts) if t >= 1)

        h = radius_for(config, n, analyzer.stats(profile))
        if h is None:
            logger.warning(f"n={n}: meeting probability skipped")
        else:
            meet, _ = meeting_probability(profile, h, config.runs, config.seed)
            rows.append({"n": n, "statistic": "meeting", "param": h,
                         "value": meet.value, "ci_lo": meet.ci_lo, "ci_hi": meet.ci_hi})
        rows.append({"n": n, "statistic": "collision_at_start", "param": 0,
                     "value": collision_at_start(profile), "ci_lo": math.nan, "ci_hi": math.nan})
    writer.csv("annealed.csv", rows)
    writer.csv("tau_histogram.csv", tau_rows)
    return {"rows": rows, "seeds": []}
