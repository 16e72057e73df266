"""Simulation and certification toolkit for distributed adaptive
backstepping control of vehicular platoons with mismatched disturbances."""

from .controller import (
    AdaptiveState,
    ControllerConfig,
    adaptive_da_rate,
    adaptive_dv_rate,
    check_gain_conditions,
    control_law,
    signed_direction,
    virtual_ea_star,
    virtual_ev_star,
)
from .dynamics import (
    DisturbanceModel,
    LeaderProfile,
    LeaderState,
    PlatoonState,
    SpacingPolicy,
    VehicleParams,
    disturbance_at,
    drift_f,
    gain_g,
    leader_profile,
    plant_derivatives,
    sync_errors,
)
from .cli import write_metrics_csv, write_trajectory_csv
from .scenario import Scenario, emit_scenario, paper_iv, parse_scenario, scenarios_equal
from .sim import (
    Metrics,
    SimConfig,
    TrajectoryLog,
    compute_metrics,
    run_ablation,
    run_scenario,
)
from .stability import (
    VslfCertificate,
    VslfSample,
    assemble_b,
    assemble_gamma,
    build_certificate,
    is_hurwitz,
    is_metzler,
    small_gain_verdict,
    step_comparison,
    string_stability_sweep,
    verify_comparison_principle,
    vslf_eval,
)
from .topology import (
    Topology,
    build_h,
    build_laplacian,
    has_leader_spanning_tree,
    invert_h,
    preset_topology,
)

__version__ = "0.1.0"
