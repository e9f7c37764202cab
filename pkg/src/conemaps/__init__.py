"""Numerical laboratory for energy-minimizing maps into cones.

Surfaces with conic singularities of angle 2*pi*alpha < 2*pi, spectral
Dirichlet solves on the round cone, Hopf differentials and their residues,
the linearized operator with its indicial exponents, Newton relaxation for
perturbed targets, and the diagnostic battery (Bochner, Harnack,
classification, minimality probes).
"""

from .errors import (
    Aliasing,
    ConemapsError,
    DegenerateJacobian,
    FormViolation,
    HypothesisFail,
    InconsistentResidue,
    InsufficientRegularity,
    MinimalityViolated,
    NoConvergence,
    NonConeMapping,
    NotHarmonic,
    OutOfDisc,
    PathStuck,
    PoorFit,
    SingularSystem,
    SplitFails,
    TargetPunctureHit,
    TwistViolation,
    WindowExceeded,
    ZeroInput,
)
from .geometry import (
    AngleClass,
    BGrid,
    ConeAngleSpec,
    ConicMetric,
    RadialTrigScalar,
    SumScalar,
    WeightedNormSpec,
    branch_power,
    gauss_curvature,
    radial_trig_mu,
    round_cone_metric,
    unwedge,
    wedge_coordinates,
    weighted_b_norm,
)
from .cone_spectral import (
    AntiholoPower,
    BoundaryAnalysis,
    HoloPower,
    PiConeLift,
    TwistedSeries,
    analyze_boundary,
    as_boundary_callable,
    descend_pi_lift,
    identity_series,
    mobius,
    mobius_inverse,
    parse_series_spec,
    pi_cone_residue,
    pi_lift_hopf_pushforward,
    recentre_boundary,
    residue_from_series,
    series_boundary_callable,
    series_energy,
    solve_augmented_dirichlet,
    solve_dirichlet,
    synthesize_on_grid,
    synthesize_solution,
    wedge_trace,
)
from .field_ops import (
    HopfField,
    MapField,
    bochner_check,
    contour_residue,
    energy_density,
    energy_gradient_residue,
    energy_hessian_residue,
    h_l_jacobian,
    hopf,
    hopf_path_derivative,
    identity_map,
    pullback_split,
    tension,
    total_energy,
)
from .linearization import (
    IndicialData,
    asymptotic_fit,
    build_linear_system,
    fit_profile_constant,
    indicial_family,
    indicial_roots,
    jacobi_solve,
    linearization_fd_check,
    linearized_hopf,
    linearized_tension,
    solve_linear_system,
)
from .solver import (
    ContinuationPath,
    SolverConfig,
    continue_path,
    energy_minimality_probe,
    move_cone_point,
    newton_relax,
)
from .diagnostics import (
    cone_classification_check,
    form_fit,
    generate_supersolution,
    harnack_check,
    rescale_probe,
    subsolution_check,
)

__version__ = "0.1.0"
