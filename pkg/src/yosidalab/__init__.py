"""Desk-scale laboratory for resolvent-based operator distances, exponential
dichotomy persistence, nonlinear semigroups, and local invariant manifolds."""

__version__ = "0.1.0"

from .operators import (
    DelayGenerator,
    DenseMatrix,
    NonlinearMap,
    OperatorModel,
    SemilinearComposite,
    SpectralDiagonal,
    VectorState,
    apply,
    delay_resolvent,
    operator_norm,
    resolvent,
    spectrum,
    vector,
)
from .yosida import (
    YosidaEstimate,
    bounded_oracle_distance,
    bounded_perturbation_bound_check,
    default_mu_grid,
    relative_bound_check,
    yosida_approx,
    yosida_distance,
)
from .semigroup import (
    GrowthEnvelope,
    TrajectoryRecord,
    closeness_bound_check,
    evolve_linear,
    growth_envelope,
    nonautonomous_compare,
    time_one_map,
)
from .dichotomy import (
    DichotomySplit,
    check_hyperbolic,
    roughness_sweep,
    spectral_split,
)
from .nonlinear import (
    AccretivityCertificate,
    SemilinearSystem,
    accretivity_certificate,
    crandall_liggett_evolve,
    lip_phi_estimate,
    nonlinear_resolvent,
    phi_difference,
    proto_continuity_modulus,
    radial_truncation,
    semilinear_proto_derivative,
)
from .manifolds import (
    ManifoldGraph,
    compute_stable_manifold,
    compute_unstable_manifold,
    lip_shrink_study,
)
from .reports import VerificationReport
