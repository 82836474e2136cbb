"""Phase estimation statistics and phase-covariant Lindblad dynamics
on finite shift spectra."""

from .errors import (
    ConfigError,
    CovphaseError,
    DimensionMismatchError,
    GridTooCoarseError,
    InconsistentPhasesError,
    KTooLargeError,
    NegativeWeightError,
    NotCovariantFormError,
    NotHermitianError,
    NotPSDError,
    NotUnitTraceError,
    StepUnstableError,
    TailOverflowError,
    WrongSpectrumKindError,
)
from .states import (
    DensityMatrix,
    PhasePureDecomposition,
    Spectrum,
    SpectrumKind,
    coherent_state,
    fock_state,
    gauge_fix,
    is_phase_pure,
    make_density,
    pure_state_density,
    random_phase_pure,
    standard_state,
    tail_mass,
    thermal_state,
    uniform_phase_state,
)
from .phase_stats import (
    CostFunction,
    ShiftOperator,
    affine_cost,
    cost_operator,
    mean_cost,
    modulus_moments,
    moment,
    overlap_distribution,
    phase_deviation_cost,
    phase_distribution,
    phase_grid,
    phase_uncertainty,
    reciprocal_peak_likelihood_cost,
    shift_operator,
    shift_power,
)
from .dynamics import (
    CostDerivative,
    CovariantGenerator,
    GeneratorTerm,
    PurityCheck,
    Trajectory,
    build_preserving_generator,
    check_covariance,
    check_phase_purity_preservation,
    cost_derivative_analytic,
    cost_derivative_numeric,
    cost_term_numeric,
    covariant_generator,
    integrate,
    lindblad_apply,
    random_covariant_generator,
    step_halving_error,
)

__version__ = "0.1.0"

from .config import ExperimentConfig  # noqa: E402  (needs __version__)
from .harness import (  # noqa: E402
    VerificationReport,
    run_phase_dist,
    run_reverse_demo,
    run_simulate,
    run_verify,
)
