from .errors import (
    ErrorDetail,
    LabError,
    DegenerateMetricError,
    ChartDomainError,
    InvalidConfigurationError,
    CutLocusError,
    PoleError,
    InputError,
    PreconditionError,
    UnsupportedConfigurationError,
    NoConvergenceError,
    ConfigValidationError,
)
from .stats import (
    McEstimate,
    VerdictStatus,
    pairwise_sum,
    slack,
    verdict_at_most,
    verdict_at_least,
    verdict_close,
    combine_status,
)

__all__ = [
    "ErrorDetail",
    "LabError",
    "DegenerateMetricError",
    "ChartDomainError",
    "InvalidConfigurationError",
    "CutLocusError",
    "PoleError",
    "InputError",
    "PreconditionError",
    "UnsupportedConfigurationError",
    "NoConvergenceError",
    "ConfigValidationError",
    "McEstimate",
    "VerdictStatus",
    "pairwise_sum",
    "slack",
    "verdict_at_most",
    "verdict_at_least",
    "verdict_close",
    "combine_status",
]
