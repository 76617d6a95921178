from .schemas import SmoothMapSpec, BochnerRow, BochnerReport, HilbertTraceResult
from .maps import (
    MapDifferential,
    orthonormal_frame,
    target_curvature,
    energy_density,
    map_differential,
    second_fundamental_form,
    hessian_norm_squared,
    tension_field,
    tension_sup_norm,
    is_v_harmonic,
    drift_image_squared,
)
from .identity import (
    BochnerTerms,
    bochner_terms,
    bochner_residual,
    refinement_order,
    hilbert_trace_check,
    bochner_coefficient,
    bochner_lower_bound_check,
    distance_laplacian_check,
    scalar_bochner_check,
    bochner_rows_csv,
)

__all__ = [
    "SmoothMapSpec",
    "BochnerRow",
    "BochnerReport",
    "HilbertTraceResult",
    "MapDifferential",
    "orthonormal_frame",
    "target_curvature",
    "energy_density",
    "map_differential",
    "second_fundamental_form",
    "hessian_norm_squared",
    "tension_field",
    "tension_sup_norm",
    "is_v_harmonic",
    "drift_image_squared",
    "BochnerTerms",
    "bochner_terms",
    "bochner_residual",
    "refinement_order",
    "hilbert_trace_check",
    "bochner_coefficient",
    "bochner_lower_bound_check",
    "distance_laplacian_check",
    "scalar_bochner_check",
    "bochner_rows_csv",
]
