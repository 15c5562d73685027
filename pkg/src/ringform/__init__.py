"""Bearing-only sign control of angle-constrained circular formations.

Simulate n >= 3 planar vehicles on a ring, each steering only from the
two bearings it sees, toward a formation with prescribed subtended
angles; then check the finite-time convergence and displacement
certificates on the recorded trajectory.
"""

from .analysis import (
    CertificateReport,
    CycleFactorization,
    ErrorMatrix,
    GradientBox,
    InfimumCheck,
    angle_sum_series,
    assemble_A,
    certify,
    convergence_rate,
    cycle_factorization,
    cycle_incidence,
    gradient_box,
    lambda2_cycle,
    lie_derivative_value,
    lyapunov,
    projector_quadratic_sum,
    sampled_infimum_check,
    w_factor,
)
from .controller import (
    LocalMeasurement,
    SignPolicy,
    control_velocity,
    deadband_sign,
    local_error,
)
from .errors import (
    CollisionImminent,
    CollocatedVehicles,
    HypothesisViolated,
    InfeasibleScenario,
    InfeasibleTarget,
    NotConverged,
    RingformError,
    ScenarioError,
)
from .formation import (
    FeasibilityReport,
    FormationState,
    TargetSpec,
    angle_sum,
    errors,
    perturb,
    realize_target,
    validate_feasibility,
)
from .geometry import (
    bearing_from_to,
    perp,
    project_out,
    projector,
    rotate,
    rotation_matrix,
    subtended_angle,
    vec,
    wrap_angle,
)
from .output import (
    read_trajectory_csv,
    summary_payload,
    trajectory_header,
    write_plotdata,
    write_summary_json,
    write_trajectory_csv,
)
from .scenario import (
    InitialSpec,
    Scenario,
    load_scenario,
    materialize,
    parse_scenario,
    save_scenario,
    serialize_scenario,
)
from .simulator import (
    SimConfig,
    TrajectoryRecord,
    collision_horizon,
    half_step_deviation,
    run,
    step,
)

__version__ = "0.1.0"
