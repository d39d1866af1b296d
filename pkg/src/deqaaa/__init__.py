"""Dense state-vector simulation of standard, exact and distributed exact amplitude amplification."""

__version__ = "0.1.0"

from .amplify import (
    RotationGeometry,
    RunReport,
    TargetSpec,
    build_phase_oracle,
    eqaaa_run,
    iterations_eqaaa,
    iterations_qaaa,
    phase_angle,
    predicted_success_qaaa,
    qaaa_run,
    reflect_about_state,
    rotation_geometry,
)
from .distributed import (
    DeqaaaReport,
    NodePlan,
    Partition,
    build_node_plan,
    compute_pg_prime,
    deqaaa_run,
    marginal_distribution,
    phase_one,
    project_targets,
    substate_of,
)
from .errors import DomainError, InfeasibleError, NumericError, QuantumSimError, SizeError
from .metrics import (
    DecompositionResult,
    DepthReport,
    analytic_depth_deqaaa,
    analytic_depth_eqaaa,
    analytic_depth_qaaa,
    circuit_depth,
    decompose_circuit,
    decompose_mcps,
)
from .prep import AmplitudeSpec, encode_amplitudes, prepare_direct
from .sim import (
    Circuit,
    Distribution,
    GateOp,
    Histogram,
    StateVector,
    apply_circuit,
    exact_distribution,
    kl_divergence,
    new_zero_state,
    sample,
    success_probability,
    unitary_of,
)
