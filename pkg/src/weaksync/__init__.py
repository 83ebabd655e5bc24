"""Weak synchronization analysis for heterogeneous linear multi-agent networks."""

from .agents import (
    AgentModel,
    ClosedLoopAgent,
    DynamicProtocol,
    NetworkSystem,
    assemble_closed_loop,
    assemble_network,
    builtin_models,
    direct_closed_loop,
    single_integrator,
)
from .analysis import (
    ConvergenceCriterion,
    SyncReport,
    build_sync_report,
    check_convex_limits,
    check_network_stability,
    check_output_sync,
    consensus_oracle_single_integrator,
    desync_witness,
)
from .generate import StructuredGraphSpec, generate_structured
from .graph import (
    BicomponentDecomposition,
    DirectedWeightedGraph,
    build_laplacian,
    canonical_laplacian,
    decompose_bicomponents,
    has_directed_spanning_tree,
)
from .kernel import (
    KernelStructure,
    ScaledReduction,
    beta_coefficients,
    kernel_basis,
    kernel_structure,
    mixing_matrix,
    scaled_reduction,
)
from .simulate import SimConfig, Trajectory, simulate, superposition_split, verify_superposition

__version__ = "0.1.0"
