"""Adiabatic decoherence-free-subspace toolkit.

Dense Lindblad propagation with a compiled RK4 kernel, detection and
tracking of decay-degenerate protected subspaces, the slowness
condition in state and operator form, a purity floor for driven
evolutions, and synthesis of the transport drive that removes the
slowness requirement.  The squeezed-vacuum qubit ships as a worked
model family; the ``adfs`` command renders its scenarios to CSV/JSON.
"""

from .operator_model import (
    OperatorSet,
    SchemaError,
    SqueezeSchedule,
    SystemModel,
    evaluate,
    evaluate_batch,
    evaluate_derivative,
    model_from_grid,
    model_from_json,
)
from .lindblad_integrator import (
    PositivityError,
    PropagateOptions,
    TrajectoryRecord,
    bloch_vector,
    liouvillian_apply,
    propagate,
)
from .dfs_analysis import (
    DfsConditionReport,
    DfsDecomposition,
    DfsFrame,
    NumericDfsPath,
    block_decompose,
    check_conditions,
    common_degenerate_eigenspace,
    effective_hamiltonian,
    required_control_offdiag,
)
from .adiabatic_monitor import (
    AdiabaticReport,
    PurityBoundTerms,
    adiabatic_report,
    purity_lower_bound,
    xi_lindblad,
    xi_state,
)
from .sta_synthesis import (
    StaFields,
    TransportResult,
    counterdiabatic_block,
    transport_unitary,
    verify_sta,
)
from .kernels import KERNEL_NAME, USE_COMPILED

__version__ = "0.1.0"

__all__ = [
    "OperatorSet",
    "SchemaError",
    "SqueezeSchedule",
    "SystemModel",
    "evaluate",
    "evaluate_batch",
    "evaluate_derivative",
    "model_from_grid",
    "model_from_json",
    "PositivityError",
    "PropagateOptions",
    "TrajectoryRecord",
    "bloch_vector",
    "liouvillian_apply",
    "propagate",
    "DfsConditionReport",
    "DfsDecomposition",
    "DfsFrame",
    "NumericDfsPath",
    "block_decompose",
    "check_conditions",
    "common_degenerate_eigenspace",
    "effective_hamiltonian",
    "required_control_offdiag",
    "AdiabaticReport",
    "PurityBoundTerms",
    "adiabatic_report",
    "purity_lower_bound",
    "xi_lindblad",
    "xi_state",
    "StaFields",
    "TransportResult",
    "counterdiabatic_block",
    "transport_unitary",
    "verify_sta",
    "KERNEL_NAME",
    "USE_COMPILED",
    "__version__",
]
