"""Input-node selection for networked dynamical systems via submodular optimisation."""

__version__ = "0.1.0"

from .graph import Graph, GraphError, TopologySet, erdos_renyi, geometric_graph, grounded_laplacian, named_graph
from .matroids import Matroid, controllability_matroid, transversal_matroid, uniform_matroid
from .optimize import (
    SelectionResult,
    SetFunction,
    brute_force_opt,
    greedy_cover,
    greedy_max,
    matroid_greedy,
)
from .perf import convergence_bound, kalman_log_det, noise_variance

__all__ = [
    "Graph",
    "GraphError",
    "TopologySet",
    "Matroid",
    "SelectionResult",
    "SetFunction",
    "brute_force_opt",
    "controllability_matroid",
    "convergence_bound",
    "erdos_renyi",
    "geometric_graph",
    "greedy_cover",
    "greedy_max",
    "grounded_laplacian",
    "kalman_log_det",
    "matroid_greedy",
    "named_graph",
    "noise_variance",
    "transversal_matroid",
    "uniform_matroid",
]
