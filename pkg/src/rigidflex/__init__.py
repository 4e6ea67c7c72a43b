"""Distance-based formation control on rigid graphs with a flex agent.

Simulation of the gradient control law (plus leader-augmented variants),
Hessian-based stability analysis at equilibria, and independent oracles that
construct the undesired (degenerate) equilibria of the certified triangle and
tetrahedron topologies.
"""

from .control import (
    EdgeState,
    LeaderSpec,
    balance_residuals,
    composite_potential,
    edge_states,
    gradient_control,
    leader_control,
    leader_spec_from_json,
    local_frame_control,
    potential_value,
)
from .graph import (
    FormationGraph,
    GraphError,
    build_incidence,
    check_feasible,
    graph_from_json,
    graph_to_json,
    relative_positions,
    tetrahedron_flex,
    triangle_flex,
)
from .integrator import (
    IntegrationError,
    PerturbationEvent,
    Trajectory,
    apply_perturbation,
    detect_equilibrium,
    integrate,
    random_perturbation,
)
from .oracle import (
    CatalogEntry,
    OracleError,
    build_catalog,
    capture_equilibrium_from_flow,
    desired_equilibrium,
    find_collinear_equilibrium,
    flex_coincident_equilibrium,
    newton_polish,
    read_catalog,
    write_catalog,
)
from .potentials import (
    FAMILIES,
    QUADRATIC,
    RATIONAL,
    PotentialDomainError,
    PotentialFamily,
    get_family,
    validate_family,
)
from .stability import (
    EquilibriumClass,
    StabilityReport,
    Witness,
    WitnessNotFoundError,
    alignment_rotation,
    analyze,
    assemble_hessian,
    classify,
    coordinate_blocks,
    instability_witness,
    psd_check,
    verify_angle_inequalities,
    verify_sign_properties,
)

__version__ = "0.1.0"
