"""Anisotropic Musielak-Orlicz machinery and a Galerkin solver for
divergence-form problems -div(A(x, grad u) + Phi(u)) + b(x, u) = div F.

The package splits into N-function construction and duality
(``nfunction``), modulars and Luxemburg norms on discrete fields
(``modular``), the ball-balance condition probe (``balance``), P1
finite elements on boxes (``fem``), problem data and structure
validation (``problem``), and the Galerkin solver with its lemma
diagnostics (``galerkin``). ``cli`` drives everything from TOML
configs.
"""

from .nfunction import (
    AffineCoefficient,
    AnisotropicDoublePhase,
    AnisotropicVariable,
    BiconjugationReport,
    ConjugateEvaluator,
    ConjugateIntegrand,
    ConjugateSearchConfig,
    ConstantPower,
    ConstructionFailure,
    DomainViolation,
    DoublePhase,
    ExpGrowth,
    FenchelYoungReport,
    NFunction,
    SearchRadiusExhausted,
    VariableExponent,
    YoungFunction,
    YoungReport,
    check_biconjugation,
    check_fenchel_young,
    eval_conjugate,
    eval_m,
    sample_vectors,
    validate_young,
    young_exp,
    young_exp_conjugate,
    young_power,
    young_power_envelope,
    young_power_upper,
    young_scaled_argument,
    young_sum,
)
from .modular import (
    ComparisonReport,
    DiscreteField,
    ModularConvergenceReport,
    ModularReport,
    UniformIntegrabilityReport,
    check_modular_norm_comparison,
    luxemburg_norm,
    modular,
    modular_convergence_diagnostic,
    modular_distance,
    modular_report,
    read_field_csv,
    truncate_field,
    truncate_pair,
    uniform_integrability_probe,
    write_field_csv,
)
from .fem import (
    BasisSet,
    Box,
    Mesh,
    QuadratureRule,
    UnsupportedDomain,
    build_domain,
    build_mesh,
    interval_rule,
    triangle_rule,
)
from .balance import (
    BalanceProbe,
    BalanceReport,
    BalanceSchedule,
    BalanceWitness,
    check_balance,
    smallest_passing_cm,
)
from .problem import (
    ConvectionPhi,
    LowerOrderB,
    SourceF,
    StructureReport,
    VectorFieldA,
    b_catalog,
    canonical_operator,
    check_gradient_consistency,
    p_laplacian_operator,
    phi_catalog,
    source_catalog,
    validate_structure,
)
from .galerkin import (
    DualBoundReport,
    EnergyReport,
    GalerkinSolution,
    GalerkinSystem,
    NonfiniteIntegrand,
    NotConverged,
    OrthogonalityReport,
    SolverSettings,
    StudyLevel,
    StudyReport,
    UniquenessReport,
    assemble_residual,
    certified_radius,
    convection_orthogonality,
    convergence_study,
    dual_bound_check,
    energy_diagnostics,
    heaviside_ramp,
    sine_test_function,
    solve_galerkin,
    sphere_condition,
    uniqueness_probe,
    weak_form_residual,
)

__version__ = "0.1.0"
