"""
套件运行器

按声明顺序在同一个 CheckContext 中执行检验, 每项检验产生一个 Verdict。
产物 (全部无时间戳, 同一配置与种子重跑逐字节相同):

    <id>_verdicts.csv        按 check_id 排序
    <id>_<check_id>.csv      每项检验的明细行
    <id>_summary.json        完整结论集
"""

import csv
import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
from SimpleLLMFunc.logger import app_log, get_location, push_error, push_warning

from common.errors import LabError
from common.stats import VerdictStatus
from comparison import ConditionReport, audit_rows_csv
from config.config import get_config
from diffusion import simulate_ensemble
from geometry import load_model_spec
from .CheckRegister import CheckEntry, get_check_registry
from .config_loader import build_bundle, load_experiment
from .schemas import CheckContext, CheckOutcome, CheckSpec, ExperimentConfig, SuiteResult, Verdict

VERDICT_COLUMNS = [
    "check_id",
    "module",
    "anchor",
    "status",
    "lhs",
    "rhs",
    "margin",
    "stderr",
    "tolerance",
    "note",
    "error_type",
]

ConfigLike = Union[str, Path, ExperimentConfig]


def _as_config(config: ConfigLike) -> ExperimentConfig:
    return config if isinstance(config, ExperimentConfig) else load_experiment(config)


def _output_dir(out_dir: Union[str, Path, None]) -> Path:
    path = Path(out_dir if out_dir is not None else get_config().OUTPUT_DIR)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ==================== CSV 序列化 ====================


def format_cell(value: Any) -> str:
    """CSV 单元格: 浮点数用 repr, 布尔用 true/false, 序列以空格连接"""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (list, tuple, np.ndarray)):
        return " ".join(format_cell(v) for v in value)
    if isinstance(value, dict):
        return json.dumps(value, sort_keys=True, default=str)
    return str(value)


def write_rows(path: Path, rows: Sequence[Dict[str, Any]], columns: Optional[List[str]] = None) -> Path:
    """列顺序为各行键的首次出现顺序"""
    if columns is None:
        columns = []
        for row in rows:
            columns.extend(k for k in row if k not in columns)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row.get(c)) for c in columns])
    return path


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_json_safe(v) for v in value]
    return value


# ==================== 单项检验 ====================


def _error_verdict(entry: CheckEntry, detail: Dict[str, Any]) -> Verdict:
    return Verdict(
        check_id=entry.check_id,
        module=entry.module,
        anchor=entry.anchor,
        status=VerdictStatus.FAIL,
        note=detail.get("message", ""),
        error=detail,
    )


def run_check(ctx: CheckContext, spec: CheckSpec) -> tuple:
    """
    执行一项检验

    Returns:
        (Verdict, 明细行)。检验抛出的任何异常都记为 fail, 不会中断套件。
    """
    entry = get_check_registry().get(spec.check_id)
    if entry is None:
        raise KeyError(f"check '{spec.check_id}' is not registered")
    app_log(f"🚀 Running {entry.module}/{entry.check_id}")
    try:
        params = entry.params_model.model_validate(spec.params)
        outcome: CheckOutcome = entry.fn(ctx, params)
        verdict = Verdict(
            check_id=entry.check_id,
            module=entry.module,
            anchor=entry.anchor,
            **outcome.model_dump(exclude={"rows"}),
        )
    except LabError as e:
        push_error(f"❌ {entry.check_id}: {e.message}", location=get_location())
        return _error_verdict(entry, e.to_detail().model_dump()), []
    except Exception as e:
        push_error(f"❌ {entry.check_id} raised {type(e).__name__}: {e}", location=get_location())
        return _error_verdict(entry, {"message": str(e), "type": type(e).__name__, "param": None, "code": None}), []

    icon = {VerdictStatus.PASS: "✅", VerdictStatus.FAIL: "❌"}.get(verdict.status, "⚠️")
    if verdict.status == VerdictStatus.LOW_POWER:
        push_warning(f"⚠️ {entry.check_id}: low statistical power, {verdict.note}")
    app_log(f"{icon} {entry.check_id}: {verdict.status.value} (margin {verdict.margin})")
    return verdict, outcome.rows


# ==================== 套件 ====================


def write_artifacts(result: SuiteResult, details: Dict[str, List[Dict[str, Any]]], out_dir: Path) -> List[Path]:
    prefix = result.experiment_id
    written = []
    rows = []
    for v in sorted(result.verdicts, key=lambda v: v.check_id):
        row = v.model_dump(exclude={"error"})
        row["error_type"] = v.error.get("type") if v.error else None
        rows.append(row)
    written.append(write_rows(out_dir / f"{prefix}_verdicts.csv", rows, VERDICT_COLUMNS))
    for check_id in sorted(details):
        if details[check_id]:
            written.append(write_rows(out_dir / f"{prefix}_{check_id}.csv", details[check_id]))
    summary = {
        "experiment_id": result.experiment_id,
        "seed": result.seed,
        "exit_code": result.exit_code,
        "counts": result.counts(),
        "verdicts": [_json_safe(v.model_dump(mode="json")) for v in result.verdicts],
    }
    path = out_dir / f"{prefix}_summary.json"
    path.write_text(json.dumps(summary, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    written.append(path)
    return written


def run_suite(
    config: ConfigLike,
    out_dir: Union[str, Path, None] = None,
    write: bool = True,
    only: Optional[Iterable[str]] = None,
) -> SuiteResult:
    """
    运行一个实验文件中的全部检验

    Args:
        config: 实验文件路径或已解析的 ExperimentConfig
        out_dir: 产物目录, 默认 LAB_OUTPUT_DIR
        write: 是否写出 CSV / JSON
        only: 只运行这些 check_id (仍按声明顺序)

    Returns:
        SuiteResult, exit_code 为 0 当且仅当没有 fail
    """
    config = _as_config(config)
    ctx = CheckContext(config=config, bundle=build_bundle(config))
    wanted = set(only) if only is not None else None
    app_log(f"🚀 Suite '{config.experiment_id}' (seed {config.seed}) on {ctx.bundle.manifold.describe()}, "
            f"m = {ctx.bundle.m.label()}")

    result = SuiteResult(experiment_id=config.experiment_id, seed=config.seed)
    details: Dict[str, List[Dict[str, Any]]] = {}
    for spec in config.checks:
        if wanted is not None and spec.check_id not in wanted:
            continue
        verdict, rows = run_check(ctx, spec)
        result.verdicts.append(verdict)
        details[spec.check_id] = rows

    if write:
        paths = write_artifacts(result, details, _output_dir(out_dir))
        app_log(f"✅ Wrote {len(paths)} artifacts for '{config.experiment_id}'")
    app_log(f"✅ Suite '{config.experiment_id}' finished: {result.counts()}")
    return result


def run_audit(config: ConfigLike, out_dir: Union[str, Path, None] = None, write: bool = True) -> List[ConditionReport]:
    """
    只运行条件审计

    实验文件里有 [check:condition_audit] 时沿用其参数, 否则用默认参数。
    """
    config = _as_config(config)
    ctx = CheckContext(config=config, bundle=build_bundle(config))
    spec = next((c for c in config.checks if c.check_id == "condition_audit"), CheckSpec(check_id="condition_audit"))
    verdict, _ = run_check(ctx, spec)
    if verdict.error is not None:
        raise LabError(verdict.error.get("message", "condition audit failed"), param=verdict.error.get("param"))
    reports = list(ctx.state["audit"].values())
    if write:
        audit_rows_csv(reports, _output_dir(out_dir) / f"{config.experiment_id}_audit.csv")
    return reports


def simulate_to_csv(
    model_path: Union[str, Path],
    n_paths: int,
    dt: float,
    seed: int,
    out: Union[str, Path],
    t_end: float = 1.0,
    n_observe: int = 10,
    x0: Optional[Sequence[float]] = None,
    stop_radius: Optional[float] = None,
) -> Path:
    """
    模拟 Δ_V-扩散并按 (t, path) 写出位置与 r_p

    model_path 可以是模型文件, 也可以是实验文件 (只读取模型相关的段)。
    """
    bundle = load_model_spec(model_path)
    M = bundle.manifold
    x0 = np.zeros(M.dim) if x0 is None else np.asarray(x0, dtype=float)
    observe = np.linspace(0.0, t_end, n_observe + 1)
    ens = simulate_ensemble(
        M,
        None if bundle.drift.is_zero else bundle.drift,
        x0,
        t_end,
        dt,
        n_paths,
        seed,
        observe_times=observe,
        stop_radius=stop_radius,
    )
    rows = []
    for k, t in enumerate(ens.observe_times):
        for i in range(ens.n_paths):
            row = {"t": float(t), "path": i, "r": float(ens.radial[k, i])}
            row.update({f"x_{j + 1}": float(ens.points[k, i, j]) for j in range(M.dim)})
            row["exited"] = bool(ens.exited[i])
            rows.append(row)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_rows(out, rows)
    app_log(f"✅ Simulated {n_paths} paths on {M.describe()} up to t = {t_end}; wrote {out}")
    return out
