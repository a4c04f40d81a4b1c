"""
Logging configuration utilities.

Every record carries a ``run`` field naming the experiment, its master seed
and a short config digest, so log lines from concurrent runs can be told
apart and matched to their manifest.
"""

import sys
from pathlib import Path
from typing import Any, Dict

from loguru import logger

NO_RUN = "-"

DEFAULT_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | "
    "<magenta>{extra[run]}</magenta> | <cyan>{name}</cyan>:<cyan>{line}</cyan> - "
    "<level>{message}</level>"
)


def setup_logging(config: Dict[str, Any]) -> None:
    """Install the stderr sink and, when ``file`` is set, a rotating file sink.

    Args:
        config: Logging section of the experiment file (level, format, file,
            rotation, retention, json)
    """
    logger.remove()
    logger.configure(extra={"run": NO_RUN})

    level = config.get("level", "INFO")
    format_str = config.get("format") or DEFAULT_FORMAT
    logger.add(sys.stderr, format=format_str, level=level, colorize=True)

    log_file = config.get("file")
    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        logger.add(
            log_path,
            format=format_str,
            level=level,
            rotation=config.get("rotation", "10 MB"),
            retention=config.get("retention", "30 days"),
            compression="gz",
            serialize=bool(config.get("json", False)),
        )
    logger.debug(f"Logging configured at level {level}")


def bind_run(experiment: str, seed: int, digest: str) -> str:
    """Tag all later records with ``experiment:seed:digest[:8]``; returns the tag."""
    tag = f"{experiment}:{seed}:{digest[:8]}"
    logger.configure(extra={"run": tag})
    return tag
