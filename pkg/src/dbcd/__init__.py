"""Distributed block coordinate descent for LASSO and SVM-dual problems.

The nodes of the cluster are simulated in process and exchange residual updates
either by reduce-all or over an asynchronous ring or torus.
"""

from .blocks import (
    BlockLayout,
    DistributedSampling,
    Partition,
    SeparabilityStructure,
    compute_xi,
    make_balanced_partition,
    sample_distributed,
)
from .cluster import Cluster, Topology, VirtualClock
from .eso import (
    ConvergenceBudget,
    CostModel,
    compute_beta,
    cost_of_distribution_bounds,
    expected_theta_squared,
    optimal_tau,
    speedup_factor,
    convex_rate_bound,
    strong_convexity_iterations,
)
from .errors import DBCDError
from .instances import read_instance, write_instance
from .problems import LassoProblem, SparseMatrix, SvmDualProblem
from .solver import RunReport, SolverConfig, solve

__version__ = "0.1.0"

__all__ = [
    "BlockLayout", "DistributedSampling", "Partition", "SeparabilityStructure", "compute_xi",
    "make_balanced_partition", "sample_distributed", "Cluster", "Topology", "VirtualClock",
    "ConvergenceBudget", "CostModel", "compute_beta", "cost_of_distribution_bounds",
    "expected_theta_squared", "optimal_tau", "speedup_factor", "convex_rate_bound",
    "strong_convexity_iterations", "DBCDError", "read_instance", "write_instance", "LassoProblem",
    "SparseMatrix", "SvmDualProblem", "RunReport", "SolverConfig", "solve",
]
