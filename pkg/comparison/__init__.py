from .schemas import (
    ConditionId,
    RadialFrame,
    AuditRow,
    ConditionReport,
    ImplicationCheck,
    ComparisonInput,
)
from .radial import (
    radial_drift_component,
    f_V_profile,
    f_V_along_ray,
    s_p,
    cot_kappa,
    default_c_p,
    classical_comparison_bound,
    laplacian_comparison_bound,
    measured_laplacian_r,
)
from .audit import (
    ALL_CONDITIONS,
    AuditData,
    audit_radii,
    growth_slope,
    measure_frame,
    condition_report,
    audit_conditions,
    implication_checks,
    audit_rows_csv,
)

__all__ = [
    "ConditionId",
    "RadialFrame",
    "AuditRow",
    "ConditionReport",
    "ImplicationCheck",
    "ComparisonInput",
    "radial_drift_component",
    "f_V_profile",
    "f_V_along_ray",
    "s_p",
    "cot_kappa",
    "default_c_p",
    "classical_comparison_bound",
    "laplacian_comparison_bound",
    "measured_laplacian_r",
    "ALL_CONDITIONS",
    "AuditData",
    "audit_radii",
    "growth_slope",
    "measure_frame",
    "condition_report",
    "audit_conditions",
    "implication_checks",
    "audit_rows_csv",
]
