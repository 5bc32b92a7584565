"""convexsos: convex polynomial programs via capped sum-of-squares relaxations.

The pipeline: model a problem (:mod:`convexsos.problem`), screen its
structure (:mod:`convexsos.convex_analysis`), sweep relaxation levels
(:mod:`convexsos.hierarchy`) over SDP encodings (:mod:`convexsos.sos_sdp`)
solved by a pluggable conic backend (:mod:`convexsos.backends`), and
independently re-check every certificate (:mod:`convexsos.verify`).
"""

from .backends import BackendSolution, CvxpySdpBackend, SdpBackend, available_backends, default_backend
from .convex_analysis import (
    BoundVerdict,
    CoerciveDecomposition,
    ConvexityVerdict,
    InvarianceSubspace,
    ResidualTooLarge,
    StructureReport,
    analyze_polynomial,
    archimedean_screen,
    bounded_below_screen,
    coercive_decomposition,
    convexity_screen,
    hessian_pd_coercivity,
    invariance_subspace,
)
from .hierarchy import (
    HierarchyConfig,
    HierarchyResult,
    NoFeasiblePoint,
    SaddleSearch,
    certify_finite_convergence,
    choose_c,
    compare_modes,
    find_saddle_point,
    run_hierarchy,
)
from .poly import AffineMap, DimensionMismatch, Polynomial
from .problem import Problem, SaddlePoint
from .sos_sdp import (
    BackendFailure,
    BasisMismatch,
    Certificate,
    GramBlock,
    LevelTooSmall,
    MissingBlock,
    NegativeMultiplier,
    NotPsd,
    SosProgram,
    TruncatedModuleSpec,
    build_program,
    gram_to_sos,
    monomial_basis,
    solve_program,
)
from .verify import VerificationReport, verify_certificate, verify_saddle

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "BackendFailure",
    "BackendSolution",
    "BasisMismatch",
    "BoundVerdict",
    "Certificate",
    "CoerciveDecomposition",
    "ConvexityVerdict",
    "CvxpySdpBackend",
    "DimensionMismatch",
    "GramBlock",
    "HierarchyConfig",
    "HierarchyResult",
    "InvarianceSubspace",
    "LevelTooSmall",
    "MissingBlock",
    "NegativeMultiplier",
    "NoFeasiblePoint",
    "NotPsd",
    "Polynomial",
    "Problem",
    "ResidualTooLarge",
    "SaddlePoint",
    "SaddleSearch",
    "SdpBackend",
    "SosProgram",
    "StructureReport",
    "TruncatedModuleSpec",
    "VerificationReport",
    "analyze_polynomial",
    "archimedean_screen",
    "available_backends",
    "bounded_below_screen",
    "build_program",
    "certify_finite_convergence",
    "choose_c",
    "coercive_decomposition",
    "compare_modes",
    "convexity_screen",
    "default_backend",
    "find_saddle_point",
    "gram_to_sos",
    "hessian_pd_coercivity",
    "invariance_subspace",
    "monomial_basis",
    "run_hierarchy",
    "solve_program",
    "verify_certificate",
    "verify_saddle",
]
