"""
Main entry point for chunglu-cutoff.

This module contains the experiment session class and the CLI interface.
"""

import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import click
from loguru import logger
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .data.models import ExperimentConfig, ExperimentKind, RunManifest
from .experiments.graph_runs import run_generate, run_stats
from .experiments.mixing_runs import run_cutoff, run_mix, run_profile
from .experiments.oracle_runs import run_oracle
from .experiments.walk_runs import run_annealed, run_entropy, run_quenched
from .utils.config import ConfigManager
from .utils.errors import ChungLuError, ConfigError
from .utils.logger import bind_run, setup_logging
from .utils.outputs import OutputWriter

console = Console()

EXIT_FAILURE = 1
EXIT_CONFIG = 2

Runner = Callable[[ExperimentConfig, OutputWriter], Dict[str, Any]]

RUNNERS: Dict[ExperimentKind, Runner] = {
    ExperimentKind.GENERATE: run_generate,
    ExperimentKind.STATS: run_stats,
    ExperimentKind.MIX: run_mix,
    ExperimentKind.CUTOFF: run_cutoff,
    ExperimentKind.PROFILE: run_profile,
    ExperimentKind.ENTROPY: run_entropy,
    ExperimentKind.QUENCHED: run_quenched,
    ExperimentKind.ANNEALED: run_annealed,
    ExperimentKind.ORACLE: run_oracle,
}


class ExperimentSession:
    """One configured experiment: config loading, logging, outputs and manifest."""

    def __init__(self, config_path: Optional[Path] = None, verbose: bool = False,
                 overrides: Optional[Dict[str, Any]] = None):
        """Initialize the session.

        Args:
            config_path: Path to the experiment file
            verbose: Log at DEBUG level
            overrides: Command-line values that replace file values

        Raises:
            ConfigError: If the file or an override is invalid
        """
        self.config_manager = ConfigManager(config_path)
        raw = self.config_manager.load_config()

        logging_config = self.config_manager.logging_config(raw)
        if verbose:
            logging_config["level"] = "DEBUG"
        setup_logging(logging_config)

        self.config = self.config_manager.experiment_config(raw, overrides)
        bind_run(self.config.experiment.value, self.config.seed, self.config.digest())
        logger.debug(f"Experiment config digest {self.config.digest()}")

    def run(self) -> Dict[str, Any]:
        """Run the configured experiment and write its manifest."""
        config = self.config
        writer = OutputWriter(Path(config.out_dir) / config.experiment.value)
        started = time.perf_counter()
        logger.info(f"Running {config.experiment.value} with seed {config.seed}")
        result = RUNNERS[config.experiment](config, writer)
        result["manifest"] = writer.manifest(
            config, replica_seeds=result.get("seeds", ()), started=started,
            extra={k: v for k, v in result.items() if k in ("failed", "ok")},
        )
        logger.info(f"Finished {config.experiment.value} in {time.perf_counter() - started:.1f}s")
        return result


def _render_rows(title: str, rows: Sequence[Dict[str, Any]], limit: int = 25) -> None:
    if not rows:
        console.print(f"{title}: no rows", style="yellow")
        return
    table = Table(title=title, show_header=True, header_style="bold magenta")
    columns = list(rows[0])
    for col in columns:
        table.add_column(col, justify="right" if isinstance(rows[0][col], (int, float)) else "left")
    for row in rows[:limit]:
        table.add_row(*(f"{row[c]:.4g}" if isinstance(row[c], float) else str(row[c]) for c in columns))
    console.print(table)
    if len(rows) > limit:
        console.print(f"... {len(rows) - limit} more rows in the CSV output", style="dim")


def _render_manifest(manifest: RunManifest, out_dir: Path) -> None:
    console.print(Panel(
        f"Outputs: {len(manifest.outputs)} files in {out_dir}\n"
        f"Config digest: {manifest.config_digest[:16]}...\n"
        f"Wall clock: {manifest.wall_clock_seconds:.1f}s",
        title="Run manifest",
    ))


def _execute(ctx: click.Context, kind: ExperimentKind, title: str, **overrides: Any) -> Dict[str, Any]:
    """Shared body of every experiment command; exits 2 on config errors, 1 on failures."""
    console.print(title, style="bold blue")
    options = dict(ctx.obj.get("overrides", {}))
    options.update({k: v for k, v in overrides.items() if v is not None})
    options["experiment"] = kind
    try:
        session = ExperimentSession(ctx.obj["config_path"], ctx.obj["verbose"], options)
        result = session.run()
    except ConfigError as e:
        logger.error(str(e))
        console.print(f"❌ Configuration error: {e}", style="bold red")
        ctx.exit(EXIT_CONFIG)
    except (ChungLuError, ValueError) as e:
        logger.error(str(e))
        console.print(f"❌ {kind.value} failed: {e}", style="bold red")
        ctx.exit(EXIT_FAILURE)
    _render_rows(kind.value, result.get("rows", []))
    _render_manifest(result["manifest"], Path(session.config.out_dir) / kind.value)
    if result.get("ok") is False:
        console.print(f"❌ {kind.value} reported failures: {', '.join(result.get('failed', []))}",
                      style="bold red")
        ctx.exit(EXIT_FAILURE)
    console.print("✅ Done", style="bold green")
    return result


def _n_list(values: Sequence[int]) -> Optional[List[int]]:
    return list(values) if values else None


# CLI Interface
@click.group()
@click.option('--config', '-c', type=click.Path(dir_okay=False), help='Path to experiment file')
@click.option('--seed', type=int, help='Master seed')
@click.option('--workers', type=int, help='Worker processes for replicas')
@click.option('--out', 'out_dir', type=click.Path(), help='Output directory')
@click.option('--profile', 'profile_path', type=click.Path(exists=True), help='Weight profile file')
@click.option('--weights', help='Weight spec, e.g. const:2.0 or two-class:3,1.5,0.3')
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose logging')
@click.pass_context
def cli(ctx: click.Context, config: Optional[str], seed: Optional[int], workers: Optional[int],
        out_dir: Optional[str], profile_path: Optional[str], weights: Optional[str],
        verbose: bool) -> None:
    """Random walks on Chung-Lu digraphs: sampling, mixing and cutoff experiments."""
    ctx.ensure_object(dict)
    ctx.obj['config_path'] = Path(config) if config else None
    ctx.obj['verbose'] = verbose
    ctx.obj['overrides'] = {
        key: value for key, value in {
            "seed": seed, "workers": workers, "out_dir": out_dir,
            "profile_path": profile_path, "weights": weights,
        }.items() if value is not None
    }


@cli.command()
@click.pass_context
def setup(ctx: click.Context) -> None:
    """Create the default experiment file."""
    console.print("🚀 Setting up chunglu-cutoff...", style="bold blue")

    config_manager = ConfigManager(ctx.obj['config_path'])
    if config_manager.create_default_configs():
        console.print(f"✅ Created {config_manager.config_path}", style="bold green")
    else:
        console.print(f"Config already exists: {config_manager.config_path}", style="yellow")
    console.print("\n📝 Next steps:")
    console.print(f"1. Edit {config_manager.config_path} (weights, n_list, replicas, ...)")
    console.print("2. Run 'chunglu-cutoff oracle' to check the installation")
    console.print("3. Run 'chunglu-cutoff cutoff' for the cutoff experiment")


@cli.command()
@click.option('--n', 'n_list', type=int, multiple=True, help='Vertex count (repeatable)')
@click.option('--replicas', type=int, help='Graphs per size')
@click.pass_context
def generate(ctx: click.Context, n_list: Sequence[int], replicas: Optional[int]) -> None:
    """Sample graphs and write them as binary files."""
    _execute(ctx, ExperimentKind.GENERATE, "🎲 Sampling Chung-Lu digraphs...",
             n_list=_n_list(n_list), replicas=replicas)


@cli.command()
@click.option('--n', 'n_list', type=int, multiple=True, help='Vertex count (repeatable)')
@click.option('--replicas', type=int, help='Graphs per size')
@click.pass_context
def stats(ctx: click.Context, n_list: Sequence[int], replicas: Optional[int]) -> None:
    """Degree extremes, connectivity and profile validation."""
    _execute(ctx, ExperimentKind.STATS, "📊 Computing graph statistics...",
             n_list=_n_list(n_list), replicas=replicas)


@cli.command()
@click.option('--n', 'n_list', type=int, multiple=True, help='Vertex count (repeatable)')
@click.option('--t-max', type=int, help='Last time of the TV curves')
@click.option('--eps', type=float, help='Mixing level')
@click.option('--h-eps', type=int, help='Root radius override')
@click.pass_context
def mix(ctx: click.Context, n_list: Sequence[int], t_max: Optional[int], eps: Optional[float],
        h_eps: Optional[int]) -> None:
    """TV distance curves and mixing times."""
    _execute(ctx, ExperimentKind.MIX, "🌀 Computing mixing curves...",
             n_list=_n_list(n_list), t_max=t_max, eps=eps, h_eps=h_eps)


@cli.command()
@click.option('--n', 'n_list', type=int, multiple=True, help='Vertex count (repeatable)')
@click.option('--beta', type=float, help='Relative half-width of the cutoff window')
@click.pass_context
def cutoff(ctx: click.Context, n_list: Sequence[int], beta: Optional[float]) -> None:
    """TV before and after the entropic time."""
    _execute(ctx, ExperimentKind.CUTOFF, "✂️  Running the cutoff experiment...",
             n_list=_n_list(n_list), beta=beta)


@cli.command()
@click.option('--n', 'n_list', type=int, multiple=True, help='Vertex count (repeatable)')
@click.option('--lambda', 'lambda_list', type=float, multiple=True, help='Window position (repeatable)')
@click.pass_context
def profile(ctx: click.Context, n_list: Sequence[int], lambda_list: Sequence[float]) -> None:
    """Cutoff profile inside the window against the Gaussian tail."""
    _execute(ctx, ExperimentKind.PROFILE, "📈 Running the cutoff profile experiment...",
             n_list=_n_list(n_list), lambda_list=list(lambda_list) or None)


@cli.command()
@click.option('--n', 'n_list', type=int, multiple=True, help='Vertex count (repeatable)')
@click.pass_context
def entropy(ctx: click.Context, n_list: Sequence[int]) -> None:
    """Entropy, variance and entropic time of the degree law."""
    _execute(ctx, ExperimentKind.ENTROPY, "🔢 Computing entropic statistics...", n_list=_n_list(n_list))


@cli.command()
@click.option('--n', 'n_list', type=int, multiple=True, help='Vertex count (repeatable)')
@click.option('--samples', type=int, help='Traces per estimate')
@click.option('--h-eps', type=int, help='Root radius override')
@click.pass_context
def quenched(ctx: click.Context, n_list: Sequence[int], samples: Optional[int], h_eps: Optional[int]) -> None:
    """Path-mass statistics and nice paths on sampled graphs."""
    _execute(ctx, ExperimentKind.QUENCHED, "🧭 Running quenched path statistics...",
             n_list=_n_list(n_list), samples=samples, h_eps=h_eps)


@cli.command()
@click.option('--n', 'n_list', type=int, multiple=True, help='Vertex count (repeatable)')
@click.option('--runs', type=int, help='Independent annealed runs')
@click.option('--horizon', type=int, help='Steps per walk')
@click.option('--walks', type=int, help='Walks per run')
@click.option('--h-eps', type=int, help='Meeting radius override')
@click.pass_context
def annealed(ctx: click.Context, n_list: Sequence[int], runs: Optional[int], horizon: Optional[int],
             walks: Optional[int], h_eps: Optional[int]) -> None:
    """Annealed walks on a lazily generated environment."""
    _execute(ctx, ExperimentKind.ANNEALED, "🚶 Running annealed walks...",
             n_list=_n_list(n_list), runs=runs, horizon=horizon, walks=walks, h_eps=h_eps)


@cli.command()
@click.option('--inject-fault', help='Sabotage the named oracle')
@click.pass_context
def oracle(ctx: click.Context, inject_fault: Optional[str]) -> None:
    """Run every small-instance oracle; exits 1 if any fails."""
    _execute(ctx, ExperimentKind.ORACLE, "🔬 Running oracle suite...", inject_fault=inject_fault)


if __name__ == "__main__":
    cli()
