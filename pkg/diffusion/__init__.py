from .schemas import (
    RngSpec,
    DiffusionPath,
    EnsembleResult,
    StatRow,
    DiffusionReport,
    RecurrenceClass,
)
from .engine import (
    Functional,
    FieldFunctional,
    RadialFunctional,
    drift_term,
    step,
    simulate,
    simulate_ensemble,
    batch_sizes,
    truncated_fraction,
)
from .martingale import (
    ito_residual,
    generator_check,
    ito_martingale_check,
    weak_order_check,
    kendall_check,
)
from .bounds import (
    second_moment_envelope,
    quartic_envelope,
    lyapunov_bound,
    moment_bound_check,
    lyapunov_check,
    conservativeness_check,
    require_witness,
)
from .recurrence import (
    hitting_probability,
    recurrence_probe,
    recurrence_scan,
    classify_scale_increments,
    increment_ratio,
    RECURRENT_RATIO,
    scale_function_probability,
)

__all__ = [
    "RngSpec",
    "DiffusionPath",
    "EnsembleResult",
    "StatRow",
    "DiffusionReport",
    "RecurrenceClass",
    "Functional",
    "FieldFunctional",
    "RadialFunctional",
    "drift_term",
    "step",
    "simulate",
    "simulate_ensemble",
    "batch_sizes",
    "truncated_fraction",
    "ito_residual",
    "generator_check",
    "ito_martingale_check",
    "weak_order_check",
    "kendall_check",
    "second_moment_envelope",
    "quartic_envelope",
    "lyapunov_bound",
    "moment_bound_check",
    "lyapunov_check",
    "conservativeness_check",
    "require_witness",
    "hitting_probability",
    "recurrence_probe",
    "recurrence_scan",
    "classify_scale_increments",
    "increment_ratio",
    "RECURRENT_RATIO",
    "scale_function_probability",
]
