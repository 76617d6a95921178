from .schemas import CheckSpec, ExperimentConfig, CheckOutcome, Verdict, CheckContext, SuiteResult
from .CheckRegister import (
    VALID_MODULES,
    CheckParams,
    CheckEntry,
    CheckRegistry,
    get_check_registry,
    register_check,
    list_checks,
    get_registry_stats,
)

# 导入即注册全部检验
from . import checks  # noqa: F401
from .config_loader import parse_experiment, load_experiment, dump_experiment, build_bundle
from .runner import format_cell, write_rows, run_check, run_suite, run_audit, simulate_to_csv

__all__ = [
    "CheckSpec",
    "ExperimentConfig",
    "CheckOutcome",
    "Verdict",
    "CheckContext",
    "SuiteResult",
    "VALID_MODULES",
    "CheckParams",
    "CheckEntry",
    "CheckRegistry",
    "get_check_registry",
    "register_check",
    "list_checks",
    "get_registry_stats",
    "parse_experiment",
    "load_experiment",
    "dump_experiment",
    "build_bundle",
    "format_cell",
    "write_rows",
    "run_check",
    "run_suite",
    "run_audit",
    "simulate_to_csv",
]
