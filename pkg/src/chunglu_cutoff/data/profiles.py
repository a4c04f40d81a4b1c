"""
Weight profile sources.

Profiles come from a compact spec string (``const:<v>``, ``two-class:<v1>,<v2>,<frac>``,
``powerlaw:<exp>,<min>,<max>``, ``file:<path>``) or from a profile file: a
header line ``n eta m0 m1 m2`` followed by ``n`` lines ``w_plus w_minus``.
"""

from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from loguru import logger
from scipy import stats

from ..utils.errors import ProfileError
from ..utils.rng import TAG_PROFILE, stream
from .models import WeightProfile

PathLike = Union[str, Path]


def constant_profile(n: int, value: float, **constants: float) -> WeightProfile:
    """All weights equal to ``value``; sqrt(lambda) gives the Erdos-Renyi digraph."""
    weights = np.full(int(n), float(value))
    return WeightProfile(w_plus=weights, w_minus=weights, **constants)


def two_class_profile(n: int, v1: float, v2: float, frac: float, **constants: float) -> WeightProfile:
    """The first round(frac*n) vertices carry weight v1, the rest v2 (both directions)."""
    if not 0.0 <= frac <= 1.0:
        raise ProfileError(f"class fraction must be in [0, 1], got {frac}")
    n = int(n)
    weights = np.full(n, float(v2))
    weights[: int(round(frac * n))] = float(v1)
    return WeightProfile(w_plus=weights, w_minus=weights, **constants)


def powerlaw_profile(
    n: int,
    exponent: float,
    w_min: float,
    w_max: float,
    seed: int,
    **constants: float,
) -> WeightProfile:
    """In-weights from a Pareto law with tail index ``exponent`` truncated to [w_min, w_max].

    Out-weights are constant and equal to the mean in-weight, so both sums agree.
    """
    if not (exponent > 0 and 0 < w_min < w_max):
        raise ProfileError(
            f"power law needs exponent > 0 and 0 < min < max, got {exponent}, {w_min}, {w_max}"
        )
    rng = stream(seed, TAG_PROFILE)
    law = stats.truncpareto(exponent, w_max / w_min, scale=w_min)
    w_minus = law.rvs(size=int(n), random_state=rng)
    w_plus = np.full(int(n), float(np.mean(w_minus)))
    return WeightProfile(w_plus=w_plus, w_minus=w_minus, **constants)


def rescale_profile(profile: WeightProfile) -> WeightProfile:
    """Multiply w_minus by sum(w_plus)/sum(w_minus) so both sums agree."""
    total_minus = float(profile.w_minus.sum())
    if total_minus <= 0:
        raise ProfileError("cannot rescale: in-weights sum to zero")
    factor = profile.w_total / total_minus
    return profile.with_weights(profile.w_plus, profile.w_minus * factor)


def read_profile_file(path: PathLike) -> WeightProfile:
    """Parse a profile file."""
    path = Path(path)
    try:
        lines = [ln.split() for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    except OSError as e:
        raise ProfileError(f"cannot read profile {path}: {e}") from e
    if not lines or len(lines[0]) != 5:
        raise ProfileError(f"{path}: header must be 'n eta m0 m1 m2'")
    try:
        n = int(lines[0][0])
        eta, m0, m1, m2 = (float(v) for v in lines[0][1:])
        rows = np.array([[float(a), float(b)] for a, b in lines[1:]], dtype=np.float64)
    except ValueError as e:
        raise ProfileError(f"{path}: {e}") from e
    if rows.shape != (n, 2):
        raise ProfileError(f"{path}: header says n={n} but found {len(lines) - 1} weight lines")
    logger.debug(f"Read profile with n={n} from {path}")
    return WeightProfile(w_plus=rows[:, 0], w_minus=rows[:, 1], eta=eta, m0=m0, m1=m1, m2=m2)


def write_profile_file(profile: WeightProfile, path: PathLike) -> Path:
    """Write a profile in the format read by :func:`read_profile_file`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{profile.n} {profile.eta!r} {profile.m0!r} {profile.m1!r} {profile.m2!r}\n")
        for wp, wm in zip(profile.w_plus, profile.w_minus):
            f.write(f"{float(wp)!r} {float(wm)!r}\n")
    return path


def parse_weight_spec(
    spec: str,
    n: Optional[int] = None,
    seed: int = 0,
    constants: Optional[Dict[str, Any]] = None,
) -> WeightProfile:
    """Build a profile from a ``kind:args`` spec string.

    ``n`` is required for every kind except ``file``.
    """
    constants = dict(constants or {})
    kind, _, args = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "file":
        return read_profile_file(args)
    if n is None:
        raise ProfileError(f"weight spec '{spec}' needs a vertex count")
    try:
        values = [float(v) for v in args.split(",")] if args else []
    except ValueError as e:
        raise ProfileError(f"bad weight spec '{spec}': {e}") from e

    if kind == "const" and len(values) == 1:
        return constant_profile(n, values[0], **constants)
    if kind == "two-class" and len(values) == 3:
        return two_class_profile(n, values[0], values[1], values[2], **constants)
    if kind == "powerlaw" and len(values) == 3:
        return powerlaw_profile(n, values[0], values[1], values[2], seed=seed, **constants)
    raise ProfileError(
        f"bad weight spec '{spec}'; expected const:<v>, two-class:<v1>,<v2>,<frac>, "
        "powerlaw:<exp>,<min>,<max> or file:<path>"
    )
