"""Harmonic analysis and frame-function reconstruction on the complex unit sphere.

The sphere S^{2n-1} in C^n (n >= 3) carries a unique unitary-invariant
probability measure; square-integrable functions split into harmonic
components indexed by bidegrees (p, q).  A frame function -- one whose sum
over every orthonormal basis is the same constant -- keeps only the constant
and the (1,1) component, which makes it a quadratic form z -> <z|Az>.  This
package computes the decomposition (exactly over the rationals, or by Monte
Carlo), recovers the operator A by two independent routes, and verifies the
induced projector measure.
"""

from .errors import (
    ConfigurationError,
    DimensionUnsupportedError,
    NegativityWarning,
    ParseError,
    ResourceGuardError,
    SamplingFailureError,
    ShapeMismatchError,
    UnderdeterminedDataError,
    UnsupportedEvaluationError,
)
from .exact import GaussianRational
from .frame import (
    FrameFunction,
    FramePropertyResult,
    FrameResidualReport,
    GleasonAdditivityResult,
    GleasonReport,
    HermitianCheckResult,
    OperatorMatrix,
    OrthonormalBasis,
    PolarizationResult,
    basis_sum,
    basis_weight_sums,
    check_frame_property,
    evaluate_frame,
    frame_residual,
    gleason_additivity_check,
    hermitian_check,
    polarization_uniqueness_check,
    random_orthonormal_basis,
    reconstruct_harmonic,
    reconstruct_moment,
    sample_component_fit,
)
from .harmonics import (
    BiDegree,
    HarmonicSubspace,
    ZonalPolynomial,
    build_basis,
    character,
    character_batch,
    dimension,
    laplacian_kernel_dim,
    project_basis,
    project_character,
    representation_matrix,
    subspace_from_dict,
    subspace_to_dict,
    write_character_table,
    zonal_frame_sum,
    zonal_from_generating_function,
    zonal_harmonic,
    zonal_harmonic_components,
    zonal_polynomial,
)
from .measure import (
    MCEstimate,
    RngStream,
    SpherePoint,
    UnitaryMatrix,
    exact_monomial_moment,
    haar_sample_batch,
    mc_integrate_group,
    mc_integrate_sphere,
    sample_haar_unitary,
    sample_sphere_point,
    sphere_sample_batch,
)
from .polynomials import (
    BiDegreePolynomial,
    apply_laplacian,
    compose_with_linear,
    evaluate,
    inner_product,
    norm_sq,
    poly_from_records,
    poly_to_records,
)

__version__ = "0.1.0"

__all__ = [
    "BiDegree",
    "BiDegreePolynomial",
    "ConfigurationError",
    "DimensionUnsupportedError",
    "FrameFunction",
    "FramePropertyResult",
    "FrameResidualReport",
    "GaussianRational",
    "GleasonAdditivityResult",
    "GleasonReport",
    "HarmonicSubspace",
    "HermitianCheckResult",
    "MCEstimate",
    "NegativityWarning",
    "OperatorMatrix",
    "OrthonormalBasis",
    "ParseError",
    "PolarizationResult",
    "ResourceGuardError",
    "RngStream",
    "SamplingFailureError",
    "ShapeMismatchError",
    "SpherePoint",
    "UnderdeterminedDataError",
    "UnitaryMatrix",
    "UnsupportedEvaluationError",
    "ZonalPolynomial",
    "apply_laplacian",
    "basis_sum",
    "basis_weight_sums",
    "build_basis",
    "character",
    "character_batch",
    "check_frame_property",
    "compose_with_linear",
    "dimension",
    "evaluate",
    "evaluate_frame",
    "exact_monomial_moment",
    "frame_residual",
    "gleason_additivity_check",
    "haar_sample_batch",
    "hermitian_check",
    "inner_product",
    "laplacian_kernel_dim",
    "mc_integrate_group",
    "mc_integrate_sphere",
    "norm_sq",
    "poly_from_records",
    "poly_to_records",
    "polarization_uniqueness_check",
    "project_basis",
    "project_character",
    "random_orthonormal_basis",
    "reconstruct_harmonic",
    "reconstruct_moment",
    "representation_matrix",
    "sample_component_fit",
    "sample_haar_unitary",
    "sample_sphere_point",
    "sphere_sample_batch",
    "subspace_from_dict",
    "subspace_to_dict",
    "write_character_table",
    "zonal_frame_sum",
    "zonal_from_generating_function",
    "zonal_harmonic",
    "zonal_harmonic_components",
    "zonal_polynomial",
]
