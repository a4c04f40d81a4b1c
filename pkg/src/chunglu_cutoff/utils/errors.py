"""
Exception types raised by the simulation library.

The CLI maps ConfigError to exit code 2 and every other ChungLuError to 1.
"""

from typing import Optional


class ChungLuError(Exception):
    """Base class for all library errors."""


class ProfileError(ChungLuError, ValueError):
    """A weight profile is malformed or an index is out of range."""


class ParameterError(ChungLuError, ValueError):
    """A numerical parameter is outside its admissible range."""


class ConfigError(ChungLuError, ValueError):
    """An experiment configuration file or override is invalid."""


class SinkVertexError(ChungLuError, ValueError):
    """The walk reached a vertex without out-neighbours."""

    def __init__(self, vertex: int, message: Optional[str] = None):
        self.vertex = int(vertex)
        super().__init__(message or f"vertex {self.vertex} has out-degree 0")


class ConnectivityError(ChungLuError, ValueError):
    """The graph is not strongly connected but the operation requires it."""

    def __init__(self, component_count: int):
        self.component_count = int(component_count)
        super().__init__(
            f"graph is not strongly connected ({self.component_count} components)"
        )


class ConvergenceError(ChungLuError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, residual: float, iterations: int):
        self.residual = float(residual)
        self.iterations = int(iterations)
        super().__init__(
            f"no convergence after {self.iterations} iterations "
            f"(last residual {self.residual:.3e})"
        )


class GraphFormatError(ChungLuError, ValueError):
    """A serialized graph file could not be decoded."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


class BudgetExceededError(ChungLuError, RuntimeError):
    """An exact enumeration visited more nodes than its budget allows."""

    def __init__(self, visited: int, budget: int):
        self.visited = int(visited)
        self.budget = int(budget)
        super().__init__(
            f"enumeration exceeded its budget of {self.budget} node visits; "
            "use the Monte Carlo estimator instead"
        )


class SolverError(ChungLuError, RuntimeError):
    """A direct linear solve was singular or left a large residual."""


class EnsembleError(ChungLuError, RuntimeError):
    """Every replica of an ensemble was skipped."""

    def __init__(self, n: int, replicas: int):
        self.n = int(n)
        self.replicas = int(replicas)
        super().__init__(
            f"all {self.replicas} replicas at n={self.n} were skipped (none strongly connected)"
        )
