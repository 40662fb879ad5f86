"""Pseudospectral variational lab for a fourth-order Schrodinger system
on the flat 3-torus: grids, the electrostatic solve, the constrained
energy machinery, peaked solves, and concentration diagnostics."""

from .bopp_podolsky import G, dG, dPhi, d2Phi, h2_norm_sq, solve_phi
from .errors import (
    BarycenterUndefinedError,
    BracketError,
    ConsistencyError,
    IntegrationError,
    NonDescentError,
    NumericalError,
    ParameterError,
    ProjectionUndefinedError,
    SbppError,
)
from .grid import (
    Multiplier,
    ScalarField,
    TorusGrid,
    apply_multiplier,
    integrate,
    load_field,
    lp_norm_eps,
    norm_eps_sq,
    positive_part,
    resample,
    save_field,
)
from .ground_state import (
    RadialProfile,
    ShootOutcome,
    evaluate,
    find_ground_state,
    limit_energy,
    load_profile,
    save_profile,
    shoot,
)
from .nehari import (
    NehariProjection,
    SystemParams,
    energy,
    energy_on_nehari,
    grad,
    nehari_residual,
    project_nehari,
)
from .profiles import (
    PeakSpec,
    ProfileDiagnostics,
    barycenter,
    build_peak,
    concentration_ratio,
    constant_branch,
    diagnose,
    max_point,
    phi_smallness,
    profile_error,
    psi_map,
)
from .solver import (
    MultistartResult,
    SolveReport,
    SolverOptions,
    continue_in_epsilon,
    minimize_from,
    multistart,
)

__version__ = "0.1.0"
