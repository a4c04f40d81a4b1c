"""
chunglu-cutoff

Simulation toolkit for simple random walks on directed Chung-Lu graphs:
fast graph sampling, stationary laws and TV mixing curves, exact entropic
statistics of the degree law, quenched path-mass and nice-path statistics,
annealed walks on a lazily generated environment, and reproducible cutoff
experiments.
"""

__version__ = "0.1.0"

from .data.models import EntropicStats, ExperimentConfig, WeightProfile
from .graphs.digraph import Digraph
from .graphs.generator import sample_digraph

__all__ = ["Digraph", "EntropicStats", "ExperimentConfig", "WeightProfile", "sample_digraph"]
