"""gmlab: a numerical laboratory for the limits of Gaussian measurements.

Weak-source quantum imaging in the Gaussian-state description: build
coherence matrices and covariances, evaluate Fisher information for
Gaussian and photon-counting read-outs, and check both against the
closed-form ceilings that separate Gaussian from non-Gaussian detection.
"""

from .bayescrb import (
    EigenSolution,
    FisherProfile,
    OptimalPrior,
    PriorFunction,
    WorstCaseBound,
    eigen_solver,
    k_functional,
    optimal_prior_quadratic_fi,
    separation_bound_constant,
    worst_case_bounds,
)
from .errors import (
    ConvergenceError,
    DivergentInformationError,
    GmlabError,
    PhysicalityError,
    SingularCovarianceError,
    ValidationError,
)
from .fisher import (
    FimBounds,
    FisherMatrix,
    check_bounds,
    fim_discrete,
    fim_gaussian,
    heterodyne_fim_closed_form,
    homodyne_fim_closed_form,
    multi_lens_gaussian_bounds,
    photon_counting_fim,
    single_lens_gaussian_bound,
    tensor_copies,
    two_lens_gaussian_bounds,
    two_lens_joint_fim,
    xx_form_report,
)
from .gstate import (
    CoherenceMatrix,
    GaussianState,
    SymplecticOp,
    apply_symplectic,
    balanced_beam_splitter,
    covariance_from_coherence,
    multi_lens_state,
    passive_symplectic,
    random_symplectic,
    two_lens_state,
    validate_state,
)
from .measure import (
    DiscreteDistribution,
    GaussianMeasurement,
    SpadeBasis,
    gaussian_outcome_distribution,
    heterodyne_measurement,
    homodyne_measurement,
    photon_counting_two_mode,
    random_valid_gaussian_measurement,
    spade_basis,
)
from .optics import GaussianPsf, Grid, derivative_vectors
from .superres import (
    MomentVector,
    SourceScene,
    direct_imaging_fim_moments,
    gaussian_measurement_fim_scene,
    moment_gaussian_bound,
    scaling_exponent_fit,
    separation_gaussian_bound,
    separation_interferometric_bound,
    spade_fim_moments,
    spade_two_point_fim,
)

__version__ = "0.1.0"

__all__ = [
    "CoherenceMatrix",
    "ConvergenceError",
    "DiscreteDistribution",
    "DivergentInformationError",
    "EigenSolution",
    "FimBounds",
    "FisherMatrix",
    "FisherProfile",
    "GaussianMeasurement",
    "GaussianPsf",
    "GaussianState",
    "GmlabError",
    "Grid",
    "MomentVector",
    "OptimalPrior",
    "PhysicalityError",
    "PriorFunction",
    "SingularCovarianceError",
    "SourceScene",
    "SpadeBasis",
    "SymplecticOp",
    "ValidationError",
    "WorstCaseBound",
    "apply_symplectic",
    "balanced_beam_splitter",
    "check_bounds",
    "covariance_from_coherence",
    "derivative_vectors",
    "direct_imaging_fim_moments",
    "eigen_solver",
    "fim_discrete",
    "fim_gaussian",
    "gaussian_measurement_fim_scene",
    "gaussian_outcome_distribution",
    "heterodyne_fim_closed_form",
    "heterodyne_measurement",
    "homodyne_fim_closed_form",
    "homodyne_measurement",
    "k_functional",
    "moment_gaussian_bound",
    "multi_lens_gaussian_bounds",
    "multi_lens_state",
    "optimal_prior_quadratic_fi",
    "passive_symplectic",
    "photon_counting_fim",
    "photon_counting_two_mode",
    "random_symplectic",
    "random_valid_gaussian_measurement",
    "scaling_exponent_fit",
    "separation_bound_constant",
    "separation_gaussian_bound",
    "separation_interferometric_bound",
    "single_lens_gaussian_bound",
    "spade_basis",
    "spade_fim_moments",
    "spade_two_point_fim",
    "tensor_copies",
    "two_lens_gaussian_bounds",
    "two_lens_joint_fim",
    "two_lens_state",
    "validate_state",
    "worst_case_bounds",
    "xx_form_report",
]
