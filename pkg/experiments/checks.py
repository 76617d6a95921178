"""
可写进实验文件的全部检验

每个检验是 fn(ctx, params) -> CheckOutcome, 通过 register_check 注册到全局注册器。

margin 是到拒绝域的有符号距离: 上界类 bound − mean, 下界类 mean − bound,
等式类 −|mean − target|。判为 pass 的行总满足 margin ≥ −(z·stderr + tolerance)。
多行报告取最接近失败的一行作为结论的 lhs / rhs / margin。
"""

import math
from typing import Callable, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import Field, field_validator
from SimpleLLMFunc.logger import app_log, push_warning

from bochner import (
    BochnerReport,
    SmoothMapSpec,
    bochner_lower_bound_check,
    bochner_residual,
    distance_laplacian_check,
    hilbert_trace_check,
    scalar_bochner_check,
)
from bochner.identity import LOWER_BOUND_TOL, SCALAR_TOL
from common.errors import InputError, PreconditionError
from common.stats import McEstimate, VerdictStatus, combine_status, slack, verdict_close
from config.config import get_config
from comparison import (
    ALL_CONDITIONS,
    ComparisonInput,
    ConditionId,
    RadialFrame,
    audit_conditions,
    default_c_p,
    laplacian_comparison_bound,
    measured_laplacian_r,
)
from diffusion import (
    DiffusionReport,
    RngSpec,
    StatRow,
    conservativeness_check,
    generator_check,
    ito_martingale_check,
    kendall_check,
    lyapunov_check,
    hitting_probability,
    moment_bound_check,
    recurrence_scan,
    scale_function_probability,
    simulate_ensemble,
    weak_order_check,
)
from diffusion.bounds import WitnessLike
from diffusion.martingale import QV_REL_TOL
from geometry import (
    DriftField,
    EffectiveDimension,
    ExpressionField,
    ManifoldKind,
    ManifoldModel,
    ManifoldSpec,
    christoffel,
    christoffel_fd,
    closed_form_weighted_ricci,
    curvature_sampling,
    deterministic_directions,
    laplacian_V,
    laplacian_V_fd,
    make_manifold,
    ricci,
    ricci_fd,
    weighted_ricci,
)
from harmonic import (
    ConvexGauge,
    GrowthClass,
    classify_growth,
    gradient_estimate_check,
    liouville_decay_demo,
    liouville_lower_bound_check,
    recurrence_liouville_bridge,
    solve,
    solve_family,
    submartingale_phi_check,
)
from harmonic.estimates import DOUBLING_SLACK
from harmonic.liouville import DEFAULT_T_GRID
from .CheckRegister import CheckParams, register_check
from .schemas import CheckContext, CheckOutcome

Sense = Callable[[StatRow], Tuple[float, float]]
PASS, FAIL = VerdictStatus.PASS, VerdictStatus.FAIL


# ==================== 公共工具 ====================


def _at_most(row: StatRow) -> Tuple[float, float]:
    return row.bound - row.mean, 0.0


def _at_least(row: StatRow) -> Tuple[float, float]:
    return row.mean - row.bound, 0.0


def _close(row: StatRow) -> Tuple[float, float]:
    return -abs(row.mean - row.bound), 0.0


def _relative(rel_tol: float) -> Sense:
    return lambda row: (rel_tol * abs(row.bound) - abs(row.mean - row.bound), 0.0)


def _within(hi: float) -> Sense:
    return lambda row: (min(row.mean - row.bound, hi - row.mean), 0.0)


def _monotone(row: StatRow) -> Tuple[float, float]:
    return row.bound - row.mean, 1e-6 * abs(row.bound) + 1e-14


def _summarize(report: DiffusionReport, senses: Dict[str, Sense], note: str = "") -> CheckOutcome:
    """按统计量名前缀 (方括号之前) 选择判定方向, 取最接近失败的行"""
    best = None
    for row in report.rows:
        sense = senses.get(row.statistic.split("[")[0])
        if sense is None or math.isnan(row.bound):
            continue
        margin, tol = sense(row)
        if not math.isfinite(margin):
            continue
        key = margin + slack(row.stderr) + tol
        if best is None or key < best[0]:
            best = (key, row, margin, tol)
    rows = [row.model_dump(mode="json") for row in report.rows]
    note = "; ".join(s for s in (report.note, note) if s)
    if best is None:
        return CheckOutcome(status=report.status, note=note, rows=rows)
    _, row, margin, tol = best
    return CheckOutcome(
        status=report.status,
        lhs=row.mean,
        rhs=row.bound,
        margin=margin,
        stderr=row.stderr,
        tolerance=tol,
        note=note,
        rows=rows,
    )


def _bochner_outcome(report: BochnerReport, tol: float) -> CheckOutcome:
    rows = [
        {
            "check_id": r.check_id,
            "point": list(r.point),
            "lhs": r.lhs,
            "rhs": r.rhs,
            "margin": r.margin,
            "pass": r.passed,
        }
        for r in report.rows
    ]
    if not report.rows:
        return CheckOutcome(status=report.status, note=report.note, rows=rows)
    worst = min(report.rows, key=lambda r: r.margin)
    return CheckOutcome(
        status=report.status,
        lhs=worst.lhs,
        rhs=worst.rhs,
        margin=worst.margin,
        tolerance=tol,
        note=report.note,
        rows=rows,
    )


def _seed(ctx: CheckContext, params: CheckParams, check_id: str) -> int:
    explicit = getattr(params, "seed", None)
    return int(explicit) if explicit is not None else ctx.seed_for(check_id)


def _point(ctx: CheckContext, coords: Optional[List[float]], name: str = "x0") -> np.ndarray:
    n = ctx.bundle.manifold.dim
    if coords is None:
        return np.zeros(n)
    x = np.asarray(coords, dtype=float)
    if x.shape != (n,):
        raise InputError(f"{name} needs {n} coordinates, got {x.size}", param=name)
    return x


def _target(ctx: CheckContext, spec: Optional[List[str]]) -> ManifoldModel:
    """检验参数 target = kind, dim[, kappa] 优先, 否则用实验文件的 [target]"""
    if spec:
        if len(spec) not in (2, 3):
            raise InputError("target must read 'kind, dim' or 'kind, dim, kappa'", param="target")
        kappa = float(spec[2]) if len(spec) == 3 else 0.0
        return make_manifold(ManifoldSpec(kind=spec[0], dim=int(spec[1]), kappa=kappa))
    if ctx.bundle.target is None:
        raise InputError("this check needs a target: add a [target] section or a target parameter", param="target")
    return ctx.bundle.target


def _solver_drift(ctx: CheckContext) -> Optional[DriftField]:
    V = ctx.bundle.drift
    return None if V.is_zero else V


def _witness(ctx: CheckContext, D: Optional[float], condition: ConditionId) -> WitnessLike:
    if D is not None:
        return D
    report = ctx.state.get("audit", {}).get(condition)
    if report is None:
        raise PreconditionError(
            f"no ({condition.value}) witness: set D or run condition_audit earlier in the file", param="D"
        )
    return report


def _comparison_input(ctx: CheckContext, kappa: Optional[float], c_p: Optional[float] = None) -> ComparisonInput:
    b = ctx.bundle
    return ComparisonInput(
        manifold=b.manifold,
        drift=b.drift,
        m=b.m,
        kappa=b.manifold.kappa if kappa is None else kappa,
        c_p=default_c_p(b.manifold, b.drift, b.m) if c_p is None else c_p,
    )


class SeededParams(CheckParams):
    seed: Optional[int] = Field(None, ge=0, lt=2**63, description="覆盖由实验种子派生的种子")


class PathParams(SeededParams):
    n_paths: int = Field(..., ge=1, description="路径数, 必填")


class PointParams(SeededParams):
    points: Optional[List[List[float]]] = None
    n_points: int = Field(50, ge=1)
    sample_radius: float = Field(1.0, gt=0)


def _m(ctx: CheckContext, override: Optional[str]) -> EffectiveDimension:
    if override is None:
        return ctx.bundle.m
    try:
        return EffectiveDimension(value=override, dim=ctx.bundle.manifold.dim)
    except ValueError as e:
        raise InputError(f"invalid effective dimension '{override}': {e}", param="m") from e


def _points(ctx: CheckContext, params: PointParams, check_id: str) -> np.ndarray:
    M = ctx.bundle.manifold
    if params.points is not None:
        pts = np.asarray(params.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != M.dim:
            raise InputError(f"points must be rows of {M.dim} coordinates", param="points")
        return pts
    rng = np.random.default_rng(_seed(ctx, params, check_id))
    return M.sample_points(rng, params.n_points, params.sample_radius)


# ==================== geometry ====================


class CurvatureParams(SeededParams):
    n_samples: int = Field(..., ge=1)
    radius: float = Field(4.0, gt=0)
    tol: float = Field(1e-10, ge=0)


@register_check(
    "curvature_sampling",
    "geometry",
    "Nonnegative weighted Ricci curvature Ric_V^m >= 0",
    CurvatureParams,
)
def check_curvature_sampling(ctx: CheckContext, params: CurvatureParams) -> CheckOutcome:
    """在球内随机 (x, v) 上取 Ric_V^m(v,v)/|v|² 的最小值"""
    b = ctx.bundle
    rng = np.random.default_rng(_seed(ctx, params, "curvature_sampling"))
    sample = curvature_sampling(b.manifold, b.drift, b.m, params.n_samples, params.radius, rng, params.tol)
    ctx.state["curvature"] = sample
    return CheckOutcome(
        status=PASS if sample.nonnegative else FAIL,
        lhs=sample.min_ratio,
        rhs=0.0,
        margin=sample.min_ratio,
        tolerance=params.tol,
        note=f"minimum at {sample.argmin_point}",
        rows=[sample.model_dump()],
    )


class ClosedFormParams(SeededParams):
    n_samples: int = Field(..., ge=1)
    radius: float = Field(5.0, gt=0)
    c: Optional[float] = Field(None, gt=0, description="势函数 c·log(c+|x|²) 中的 c, 默认 n − m")
    rel_tol: float = Field(1e-8, gt=0)


@register_check(
    "weighted_ricci_closed_form",
    "geometry",
    "Closed form of Ric_f^m for the logarithmic potential",
    ClosedFormParams,
)
def check_weighted_ricci_closed_form(ctx: CheckContext, params: ClosedFormParams) -> CheckOutcome:
    """f = c·log(c+|x|²) 时 weighted_ricci 与闭式逐点比较 (相对误差)"""
    b = ctx.bundle
    if b.manifold.kind != ManifoldKind.EUCLIDEAN:
        raise PreconditionError("the closed form is stated on euclidean space", param="manifold")
    c = params.c if params.c is not None else b.m.n_minus_m()
    if not (0.0 < c < math.inf):
        raise InputError(f"c must be finite and positive, got n - m = {c:g}; set c explicitly", param="c")
    rng = np.random.default_rng(_seed(ctx, params, "weighted_ricci_closed_form"))
    n = b.manifold.dim
    x = rng.uniform(-params.radius, params.radius, size=(params.n_samples, n))
    v = rng.standard_normal((params.n_samples, n))
    measured = np.asarray(weighted_ricci(b.manifold, b.drift, b.m, x, v), dtype=float)
    closed = np.asarray(closed_form_weighted_ricci(x, v, c, b.m), dtype=float)
    rel = np.abs(measured - closed) / np.maximum(np.abs(closed), 1e-12)
    worst = float(np.max(rel))
    min_ratio = float(np.min(closed / np.sum(v * v, axis=-1)))
    rows = [
        {"x": xi.tolist(), "v": vi.tolist(), "measured": float(a), "closed_form": float(c_), "rel_error": float(e)}
        for xi, vi, a, c_, e in zip(x, v, measured, closed, rel)
    ]
    return CheckOutcome(
        status=PASS if worst <= params.rel_tol else FAIL,
        lhs=worst,
        rhs=params.rel_tol,
        margin=params.rel_tol - worst,
        note=f"c = {c:g}; min closed-form ratio {min_ratio:.6g}",
        rows=rows,
    )


class LaplacianOracleParams(PointParams):
    function: str
    tol: float = Field(1e-4, gt=0)


@register_check(
    "laplacian_fd_oracle",
    "geometry",
    "V-Laplacian in divergence form",
    LaplacianOracleParams,
)
def check_laplacian_fd_oracle(ctx: CheckContext, params: LaplacianOracleParams) -> CheckOutcome:
    """解析 Δ_V f 与散度形式差分比较"""
    b = ctx.bundle
    pts = _points(ctx, params, "laplacian_fd_oracle")
    field = ExpressionField(params.function, b.manifold.dim)
    rows, worst = [], 0.0
    for x in pts:
        exact = float(laplacian_V(b.manifold, b.drift, field, x))
        fd = laplacian_V_fd(b.manifold, b.drift, field.value, x)
        err = abs(exact - fd)
        worst = max(worst, err)
        rows.append({"point": x.tolist(), "analytic": exact, "finite_difference": fd, "abs_error": err})
    return CheckOutcome(
        status=PASS if worst <= params.tol else FAIL,
        lhs=worst,
        rhs=params.tol,
        margin=params.tol - worst,
        rows=rows,
    )


class CurvatureOracleParams(PointParams):
    christoffel_tol: float = Field(1e-6, gt=0)
    ricci_tol: float = Field(1e-4, gt=0)


@register_check(
    "curvature_fd_oracle",
    "geometry",
    "Levi-Civita connection and Ricci tensor of the model metric",
    CurvatureOracleParams,
)
def check_curvature_fd_oracle(ctx: CheckContext, params: CurvatureOracleParams) -> CheckOutcome:
    """Christoffel 符号与 Ricci 张量的解析值对差分值"""
    M = ctx.bundle.manifold
    pts = _points(ctx, params, "curvature_fd_oracle")
    rows, margins = [], []
    for x in pts:
        ce = float(np.max(np.abs(christoffel(M, x) - christoffel_fd(M, x))))
        re = float(np.max(np.abs(ricci(M, x) - ricci_fd(M, x))))
        margins.append(min(params.christoffel_tol - ce, params.ricci_tol - re))
        rows.append({"point": x.tolist(), "christoffel_error": ce, "ricci_error": re})
    worst = int(np.argmin(margins))
    return CheckOutcome(
        status=PASS if margins[worst] >= 0 else FAIL,
        lhs=rows[worst]["ricci_error"],
        rhs=params.ricci_tol,
        margin=margins[worst],
        rows=rows,
    )


# ==================== comparison ====================


class ComparisonParams(CheckParams):
    radii: List[float]
    n_directions: int = Field(4, ge=1)
    kappa: Optional[float] = None
    rel_tol: float = Field(1e-8, gt=0)


def _directions(M: ManifoldModel, count: int) -> np.ndarray:
    return M.unit_direction(np.zeros(M.dim), deterministic_directions(M.dim, count))


@register_check(
    "comparison_equality",
    "comparison",
    "Rigidity of the Laplacian comparison on model spaces",
    ComparisonParams,
)
def check_comparison_equality(ctx: CheckContext, params: ComparisonParams) -> CheckOutcome:
    """V = 0, m = n 的常曲率模型上 Δr_p 恰等于比较上界"""
    b = ctx.bundle
    if not b.drift.is_zero or not b.m.equals_dim():
        raise PreconditionError("the equality case needs V = 0 and m = n", param="m")
    inp = _comparison_input(ctx, params.kappa)
    rows, worst = [], 0.0
    for u in _directions(b.manifold, params.n_directions):
        for r in params.radii:
            bound = laplacian_comparison_bound(inp, u, r)
            measured = float(measured_laplacian_r(inp, u, r))
            rel = abs(measured - bound) / max(abs(bound), 1e-300)
            worst = max(worst, rel)
            rows.append({"direction": u.tolist(), "radius": r, "measured": measured, "bound": bound, "rel_error": rel})
    return CheckOutcome(
        status=PASS if worst <= params.rel_tol else FAIL,
        lhs=worst,
        rhs=params.rel_tol,
        margin=params.rel_tol - worst,
        rows=rows,
    )


class BoundParams(ComparisonParams):
    c_p: Optional[float] = Field(None, gt=0)


@register_check(
    "laplacian_comparison",
    "comparison",
    "Generalized V-Laplacian comparison Δ_V r_p <= bound",
    BoundParams,
)
def check_laplacian_comparison(ctx: CheckContext, params: BoundParams) -> CheckOutcome:
    """沿射线检查 Δ_V r_p 不超过比较上界"""
    inp = _comparison_input(ctx, params.kappa, params.c_p)
    rows, worst = [], None
    for u in _directions(inp.manifold, params.n_directions):
        for r in params.radii:
            bound = laplacian_comparison_bound(inp, u, r)
            measured = float(measured_laplacian_r(inp, u, r))
            tol = 1e-9 * max(1.0, abs(bound)) if math.isfinite(bound) else 0.0
            margin = bound - measured
            rows.append({"direction": u.tolist(), "radius": r, "measured": measured, "bound": bound, "margin": margin})
            if math.isfinite(margin) and (worst is None or margin + tol < worst[0] + worst[1]):
                worst = (margin, tol, measured, bound)
    if worst is None:
        push_warning(f"⚠️ no finite comparison bound for m = {inp.m.label()}")
        return CheckOutcome(status=VerdictStatus.INCONCLUSIVE, note="no finite comparison bound", rows=rows)
    margin, tol, measured, bound = worst
    return CheckOutcome(
        status=PASS if margin >= -tol else FAIL,
        lhs=measured,
        rhs=bound,
        margin=margin,
        tolerance=tol,
        rows=rows,
    )


class AuditParams(SeededParams):
    conditions: Optional[List[ConditionId]] = None
    expect_hold: List[ConditionId] = Field(default_factory=list)
    n_directions: int = Field(8, ge=1)
    max_radius: float = Field(8.0, gt=0)
    r0: float = Field(0.125, gt=0)
    kappa: Optional[float] = None
    n_curvature_samples: int = Field(500, ge=1)


def _run_audit(ctx: CheckContext, params: AuditParams, which, check_id: str):
    inp = _comparison_input(ctx, params.kappa)
    frame = RadialFrame.default(inp.manifold, n_directions=params.n_directions, max_radius=params.max_radius)
    reports = audit_conditions(
        inp,
        frame,
        which=which,
        r0=params.r0,
        curvature=ctx.state.get("curvature"),
        rng=np.random.default_rng(_seed(ctx, params, check_id)),
        n_curvature_samples=params.n_curvature_samples,
    )
    ctx.state.setdefault("audit", {}).update({r.condition_id: r for r in reports})
    return reports


@register_check(
    "condition_audit",
    "comparison",
    "Conditions (A1)-(A3), (A1*)-(A3*), (B1)-(B3) and the implications between them",
    AuditParams,
)
def check_condition_audit(ctx: CheckContext, params: AuditParams) -> CheckOutcome:
    """审计条件并保存报告, 后续检验可用其中的见证常数"""
    reports = _run_audit(ctx, params, params.conditions or ALL_CONDITIONS, "condition_audit")
    by_id = {r.condition_id: r for r in reports}
    inconsistent = [r.condition_id.value for r in reports if not r.implication_consistent]
    missing = [c.value for c in params.expect_hold if c not in by_id or not by_id[c].holds]
    rows = [row.model_dump(mode="json") for r in reports for row in r.rows]
    holding = [r.condition_id.value for r in reports if r.holds]
    witnesses = ", ".join(f"{r.condition_id.value}: D={r.witness_constant:.4g}" for r in reports if r.holds)
    note = f"holds: {', '.join(holding) or 'none'}; {witnesses}"
    if inconsistent:
        note += f"; implication violated for {', '.join(inconsistent)}"
    if missing:
        note += f"; expected to hold: {', '.join(missing)}"
    return CheckOutcome(
        status=FAIL if inconsistent or missing else PASS,
        lhs=float(len(holding)),
        rhs=float(len(reports)),
        note=note,
        rows=rows,
    )


@register_check(
    "a_implies_b",
    "comparison",
    "Growth conditions (Ai) with Ric_V^m >= 0 and m <= 1 imply (Bi)",
    AuditParams,
)
def check_a_implies_b(ctx: CheckContext, params: AuditParams) -> CheckOutcome:
    """对 i = 1, 2, 3 核对 (Ai) 或 (Ai*) 成立时 (Bi) 带着见证常数成立"""
    reports = ctx.state.get("audit", {})
    if any(c not in reports for c in ConditionId):
        _run_audit(ctx, params, ALL_CONDITIONS, "a_implies_b")
        reports = ctx.state["audit"]
    b = ctx.bundle
    curvature = ctx.state.get("curvature")
    if curvature is None:
        rng = np.random.default_rng(_seed(ctx, params, "a_implies_b:curvature"))
        curvature = curvature_sampling(b.manifold, b.drift, b.m, params.n_curvature_samples, params.max_radius, rng)
    in_range = b.m.in_comparison_range()
    rows, premises, counter = [], 0, []
    for i in (1, 2, 3):
        a, a_star, bi = ConditionId(f"A{i}"), ConditionId(f"A{i}*"), ConditionId(f"B{i}")
        premise = (reports[a].holds or reports[a_star].holds) and curvature.nonnegative and in_range
        consistent = (not premise) or reports[bi].holds
        premises += int(premise)
        if not consistent:
            counter.append(f"A{i} => B{i}")
        rows.append(
            {
                "chain": f"A{i} => B{i}",
                "a_holds": reports[a].holds,
                "a_star_holds": reports[a_star].holds,
                "curvature_nonnegative": curvature.nonnegative,
                "m_in_range": in_range,
                "premise": premise,
                "b_holds": reports[bi].holds,
                "d_witness": reports[bi].witness_constant,
                "consistent": consistent,
            }
        )
    note = f"{premises} of 3 premises hold; counterexamples: {', '.join(counter) or 'none'}"
    app_log(f"🔍 (A) => (B): {note}")
    return CheckOutcome(
        status=FAIL if counter else PASS,
        lhs=float(premises),
        rhs=3.0,
        note=note,
        rows=rows,
    )


# ==================== diffusion ====================


class SecondMomentParams(PathParams):
    t: float = Field(1.0, gt=0)
    dt: float = Field(0.1, gt=0)
    x0: Optional[List[float]] = None


@register_check(
    "sde_second_moment",
    "diffusion",
    "Itô formula for r^2 in flat space: E r^2(X_t) = r0^2 + 2nt",
    SecondMomentParams,
)
def check_sde_second_moment(ctx: CheckContext, params: SecondMomentParams) -> CheckOutcome:
    """欧氏空间 V = 0 时 E|X_t|² 的精确值"""
    b = ctx.bundle
    if b.manifold.kind != ManifoldKind.EUCLIDEAN or not b.drift.is_zero:
        raise PreconditionError("the exact second moment needs euclidean space with V = 0", param="manifold")
    x0 = _point(ctx, params.x0)
    seed = _seed(ctx, params, "sde_second_moment")
    ens = simulate_ensemble(b.manifold, None, x0, params.t, params.dt, params.n_paths, seed)
    est = McEstimate.from_samples(ens.radial[-1] ** 2)
    target = float(x0 @ x0) + 2.0 * b.manifold.dim * params.t
    report = DiffusionReport(name="sde_second_moment", status=verdict_close(est.mean, est.stderr, target))
    report.add(params.t, "E[r^2]", est, target, report.status)
    return _summarize(report, {"E": _close})


class GeneratorParams(SeededParams):
    function: str
    point: List[float]
    dt: float = Field(1e-4, gt=0)
    n_trials: int = Field(..., ge=1)


@register_check(
    "generator",
    "diffusion",
    "Generator of the simulated diffusion is Δ_V",
    GeneratorParams,
)
def check_generator(ctx: CheckContext, params: GeneratorParams) -> CheckOutcome:
    """单步增量的均值除以 dt 与 Δ_V f(x) 比较"""
    b = ctx.bundle
    rng = RngSpec(master_seed=_seed(ctx, params, "generator"))
    report = generator_check(
        b.manifold, b.drift, params.function, _point(ctx, params.point, "point"), params.dt, params.n_trials, rng
    )
    return _summarize(report, {"generator": _close})


class ItoParams(PathParams):
    fields: List[str]
    t_end: float = Field(1.0, gt=0)
    dt: float = Field(0.01, gt=0)
    x0: Optional[List[float]] = None


@register_check(
    "ito_martingale",
    "diffusion",
    "Itô identity f(X_t) - f(X_0) - ∫Δ_V f ds is a martingale",
    ItoParams,
)
def check_ito_martingale(ctx: CheckContext, params: ItoParams) -> CheckOutcome:
    """残差均值为 0, 二次变差等于 2∫|∇f|² ds"""
    b = ctx.bundle
    report = ito_martingale_check(
        b.manifold,
        b.drift,
        _point(ctx, params.x0),
        params.fields,
        params.t_end,
        params.dt,
        params.n_paths,
        _seed(ctx, params, "ito_martingale"),
    )
    return _summarize(report, {"residual": _close, "quadratic_variation": _relative(QV_REL_TOL)})


class WeakOrderParams(PathParams):
    function: str
    t_end: float = Field(1.0, gt=0)
    dts: List[float]
    x0: Optional[List[float]] = None
    ratio_lo: float = 1.5
    ratio_hi: float = 3.0


@register_check(
    "weak_order",
    "diffusion",
    "Weak order one of the Euler scheme",
    WeakOrderParams,
)
def check_weak_order(ctx: CheckContext, params: WeakOrderParams) -> CheckOutcome:
    """耦合增量下相邻步长差值之比落在 [ratio_lo, ratio_hi]"""
    b = ctx.bundle
    report = weak_order_check(
        b.manifold,
        b.drift,
        params.function,
        _point(ctx, params.x0),
        params.t_end,
        params.dts,
        params.n_paths,
        RngSpec(master_seed=_seed(ctx, params, "weak_order")),
        ratio_range=(params.ratio_lo, params.ratio_hi),
    )
    return _summarize(report, {"halving_ratio": _within(params.ratio_hi)})


class KendallParams(PathParams):
    x0: List[float]
    t_grid: List[float]
    dt: float = Field(1e-3, gt=0)


@register_check(
    "kendall",
    "diffusion",
    "Kendall decomposition of r_p(X_t) with a Brownian martingale part",
    KendallParams,
)
def check_kendall(ctx: CheckContext, params: KendallParams) -> CheckOutcome:
    """重构的 β_t 均值为 0, 二次变差为 t"""
    b = ctx.bundle
    report = kendall_check(
        b.manifold,
        b.drift,
        _point(ctx, params.x0),
        params.t_grid,
        params.dt,
        params.n_paths,
        _seed(ctx, params, "kendall"),
    )
    return _summarize(report, {"beta_mean": _close, "beta_quadratic_variation": _relative(QV_REL_TOL)})


class MomentParams(PathParams):
    t_grid: List[float]
    dt: float = Field(1e-3, gt=0)
    x0: Optional[List[float]] = None
    D: Optional[float] = Field(None, ge=0, description="(B3) 见证常数, 缺省时取审计结果")
    stop_radius: Optional[float] = Field(None, gt=0)


@register_check(
    "moment_bound",
    "diffusion",
    "Second and fourth moment bounds for r_p(X_t) under (B3)",
    MomentParams,
)
def check_moment_bound(ctx: CheckContext, params: MomentParams) -> CheckOutcome:
    """E r² ≤ 𝔇(t) 与四阶矩上界"""
    b = ctx.bundle
    report = moment_bound_check(
        b.manifold,
        b.drift,
        _point(ctx, params.x0),
        _witness(ctx, params.D, ConditionId.B3),
        params.t_grid,
        params.n_paths,
        _seed(ctx, params, "moment_bound"),
        dt=params.dt,
        stop_radius=params.stop_radius,
    )
    return _summarize(report, {"E": _at_most})


class LyapunovParams(PathParams):
    conditions: List[ConditionId]
    t: float = Field(1.0, gt=0)
    dt: float = Field(1e-3, gt=0)
    x0: Optional[List[float]] = None
    D: Optional[float] = Field(None, ge=0)

    @field_validator("conditions")
    @classmethod
    def only_b_conditions(cls, v: List[ConditionId]) -> List[ConditionId]:
        if not v or any(c.family != "B" for c in v):
            raise ValueError("conditions must be drawn from B1, B2, B3")
        return v


@register_check(
    "lyapunov",
    "diffusion",
    "Expectation bounds for the Lyapunov functions of (B1)-(B3)",
    LyapunovParams,
)
def check_lyapunov(ctx: CheckContext, params: LyapunovParams) -> CheckOutcome:
    """每个条件用各自的见证常数, 同一组随机流"""
    b = ctx.bundle
    seed = _seed(ctx, params, "lyapunov")
    merged = DiffusionReport(name="lyapunov", status=PASS)
    statuses = []
    for cid in params.conditions:
        report = lyapunov_check(
            b.manifold,
            b.drift,
            _point(ctx, params.x0),
            _witness(ctx, params.D, cid),
            cid,
            params.t,
            params.n_paths,
            seed,
            dt=params.dt,
        )
        merged.rows.extend(report.rows)
        merged.estimates.extend(report.estimates)
        statuses.append(report.status)
    merged.status = combine_status(statuses)
    merged.note = ", ".join(f"{c.value}: {s.value}" for c, s in zip(params.conditions, statuses))
    return _summarize(merged, {"E": _at_most})


class ConservativenessParams(PathParams):
    radii: List[float]
    t: float = Field(1.0, gt=0)
    dt: float = Field(1e-3, gt=0)
    x0: Optional[List[float]] = None
    D: Optional[float] = Field(None, ge=0)


@register_check(
    "conservativeness",
    "diffusion",
    "Conservativeness: exit fractions decay like 𝔇(t)/R^2",
    ConservativenessParams,
)
def check_conservativeness(ctx: CheckContext, params: ConservativenessParams) -> CheckOutcome:
    """离开 B_R 的路径比例随 R 单调下降并受 Chebyshev 包络控制"""
    b = ctx.bundle
    report = conservativeness_check(
        b.manifold,
        b.drift,
        _point(ctx, params.x0),
        _witness(ctx, params.D, ConditionId.B3),
        params.radii,
        params.n_paths,
        _seed(ctx, params, "conservativeness"),
        t=params.t,
        dt=params.dt,
    )
    return _summarize(report, {"exit_fraction": _at_most})


class ProbeParams(PathParams):
    a: float = Field(..., gt=0)
    b: float = Field(..., gt=0)
    r_start: float = Field(..., gt=0)
    dt: float = Field(1e-3, gt=0)
    extra_tol: float = Field(0.0, ge=0, description="离散穿越偏差的额外容许量")
    step_budget: Optional[float] = Field(None, gt=0)


@register_check(
    "recurrence_probe",
    "diffusion",
    "Two-boundary hitting probability equals the radial scale-function ratio",
    ProbeParams,
)
def check_recurrence_probe(ctx: CheckContext, params: ProbeParams) -> CheckOutcome:
    """
    P(先到 a 再到 b) 与一维尺度函数公式比较

    公式只在 Δ_V r 与方向无关时精确 (旋转对称的模型与漂移)。
    删失比例超过 LAB_CENSOR_CAP 时估计有偏, 记为 low-power。
    """
    M, V = ctx.bundle.manifold, ctx.bundle.drift
    est, censored = hitting_probability(
        M,
        V,
        params.a,
        params.b,
        params.r_start,
        params.n_paths,
        _seed(ctx, params, "recurrence_probe"),
        dt=params.dt,
        step_budget=params.step_budget,
    )
    oracle = scale_function_probability(M, V, params.a, params.b, params.r_start)
    dev = abs(est.mean - oracle)
    if censored > get_config().CENSOR_CAP:
        status = VerdictStatus.LOW_POWER
    else:
        status = PASS if dev <= slack(est.stderr) + params.extra_tol else FAIL
    return CheckOutcome(
        status=status,
        lhs=est.mean,
        rhs=oracle,
        margin=-dev,
        stderr=est.stderr,
        tolerance=params.extra_tol,
        note=f"censored {censored:.3g}",
        rows=[{"a": params.a, "b": params.b, "r_start": params.r_start, "mean": est.mean,
               "stderr": est.stderr, "oracle": oracle, "censored": censored}],
    )


class ScanParams(PathParams):
    a: float = Field(..., gt=0)
    r_start: float = Field(..., gt=0)
    b0: float = Field(..., gt=0)
    k_max: int = Field(2, ge=2)
    dt: float = Field(1e-3, gt=0)
    expect: Optional[Literal["recurrent", "transient"]] = None
    step_budget: Optional[float] = Field(None, gt=0)


@register_check(
    "recurrence_scan",
    "diffusion",
    "Recurrence from the growth of two-boundary hitting probabilities in b",
    ScanParams,
)
def check_recurrence_scan(ctx: CheckContext, params: ScanParams) -> CheckOutcome:
    """P_b 对 b = b0·2^k 严格递增, 并按尺度函数增量判别递归性"""
    M, V = ctx.bundle.manifold, ctx.bundle.drift
    scan = recurrence_scan(
        M,
        V,
        params.a,
        params.r_start,
        params.b0,
        params.k_max,
        params.n_paths,
        _seed(ctx, params, "recurrence_scan"),
        dt=params.dt,
        step_budget=params.step_budget,
    )
    probs = [p.mean for p in scan.probabilities]
    increments = np.diff(probs)
    rise = float(np.min(increments))
    rows = [
        {"b": b_, "P_b": p.mean, "stderr": p.stderr, "increment": float(d) if k else 0.0}
        for k, (b_, p, d) in enumerate(zip(scan.b_values, scan.probabilities, np.concatenate([[0.0], increments])))
    ]
    note = f"{scan.classification} (ratio {scan.ratio}); censored {scan.censored_fraction:.3g}"
    if scan.classification == "inconclusive":
        status = VerdictStatus.INCONCLUSIVE
    elif rise <= 0 or (params.expect is not None and params.expect != scan.classification):
        status = FAIL
    else:
        status = PASS
    return CheckOutcome(status=status, lhs=rise, rhs=0.0, margin=rise, note=note, rows=rows)


# ==================== bochner ====================


class MapParams(PointParams):
    u: List[str] = Field(..., description="目标坐标卡中的分量表达式, 分号分隔")
    target: Optional[List[str]] = None


def _map(ctx: CheckContext, params: MapParams) -> SmoothMapSpec:
    return SmoothMapSpec.from_expressions(params.u, ctx.bundle.manifold, _target(ctx, params.target))


class IdentityParams(MapParams):
    tol: float = Field(1e-3, gt=0)


@register_check(
    "bochner_identity",
    "bochner",
    "Bochner identity for ½Δ_V|du|^2",
    IdentityParams,
)
def check_bochner_identity(ctx: CheckContext, params: IdentityParams) -> CheckOutcome:
    """恒等式两边之差在采样点上的最大绝对值"""
    u = _map(ctx, params)
    pts = _points(ctx, params, "bochner_identity")
    res = np.abs(np.atleast_1d(np.asarray(bochner_residual(u, ctx.bundle.drift, pts), dtype=float)))
    worst = float(np.max(res))
    rows = [{"point": x.tolist(), "residual": float(r)} for x, r in zip(pts, res)]
    return CheckOutcome(
        status=PASS if worst <= params.tol else FAIL,
        lhs=worst,
        rhs=params.tol,
        margin=params.tol - worst,
        rows=rows,
    )


class LowerBoundParams(MapParams):
    tol: float = Field(LOWER_BOUND_TOL, gt=0)
    m: Optional[str] = Field(None, description="覆盖实验文件中的有效维数")


@register_check(
    "bochner_lower_bound",
    "bochner",
    "Bochner inequality for V-harmonic maps into nonpositively curved targets",
    LowerBoundParams,
)
def check_bochner_lower_bound(ctx: CheckContext, params: LowerBoundParams) -> CheckOutcome:
    """Δ_V|du|² ≥ 2m/(n(m−n))·|du(V)|² ≥ 0"""
    b = ctx.bundle
    report = bochner_lower_bound_check(
        _map(ctx, params), b.drift, _m(ctx, params.m), _points(ctx, params, "bochner_lower_bound"), tol=params.tol
    )
    return _bochner_outcome(report, params.tol)


class DistanceParams(MapParams):
    o: Optional[List[float]] = None
    tol: float = Field(LOWER_BOUND_TOL, gt=0)


@register_check(
    "distance_laplacian",
    "bochner",
    "Δ_V d^2(u, o) >= 2|du|^2 for V-harmonic maps into Hadamard targets",
    DistanceParams,
)
def check_distance_laplacian(ctx: CheckContext, params: DistanceParams) -> CheckOutcome:
    """到目标点 o 的距离平方沿 V-调和映射的 Δ_V 下界 2|du|², o 默认为坐标原点"""
    u = _map(ctx, params)
    o = np.zeros(u.target.dim) if params.o is None else np.asarray(params.o, dtype=float)
    report = distance_laplacian_check(
        u, ctx.bundle.drift, o, _points(ctx, params, "distance_laplacian"), tol=params.tol
    )
    return _bochner_outcome(report, params.tol)


class ScalarParams(PointParams):
    function: str
    tol: float = Field(SCALAR_TOL, gt=0)
    m: Optional[str] = Field(None, description="覆盖实验文件中的有效维数")


@register_check(
    "scalar_bochner",
    "bochner",
    "Scalar Bochner inequalities with effective dimension m",
    ScalarParams,
)
def check_scalar_bochner(ctx: CheckContext, params: ScalarParams) -> CheckOutcome:
    """标量函数的 Bochner 不等式, m 可在检验段中覆盖"""
    b = ctx.bundle
    report = scalar_bochner_check(
        b.manifold, b.drift, _m(ctx, params.m), params.function, _points(ctx, params, "scalar_bochner"), tol=params.tol
    )
    return _bochner_outcome(report, params.tol)


class HilbertParams(SeededParams):
    n_trials: int = Field(..., ge=1)
    dim: int = Field(3, ge=2)
    values: int = Field(5, ge=1, description="h_ij 取值空间的维数")
    null_multiplicity: int = Field(0, ge=0)


@register_check(
    "hilbert_trace",
    "bochner",
    "Trace inequality Σ|h_ij|^2 >= |Σ h_ii|^2/(n-k) for symmetric families",
    HilbertParams,
)
def check_hilbert_trace(ctx: CheckContext, params: HilbertParams) -> CheckOutcome:
    """随机对称族上的性质检验; k > 0 时先投影出 k 维公共核"""
    n, k = params.dim, params.null_multiplicity
    if k >= n:
        raise InputError(f"null multiplicity must be below {n}", param="null_multiplicity")
    rng = np.random.default_rng(_seed(ctx, params, "hilbert_trace"))
    worst, violations = None, 0
    for _ in range(params.n_trials):
        A = rng.standard_normal((n, n, params.values))
        h = A + np.swapaxes(A, 0, 1)
        if k:
            Q, _ = np.linalg.qr(rng.standard_normal((n, k)))
            P = np.eye(n) - Q @ Q.T
            h = np.einsum("ia,abl,bj->ijl", P, h, P)
            h = 0.5 * (h + np.swapaxes(h, 0, 1))
        result = hilbert_trace_check(h, k)
        violations += int(not result.passed)
        gap = (result.lhs - result.rhs) / max(1.0, result.rhs)
        if worst is None or gap < worst[0]:
            worst = (gap, result)
    _, result = worst
    return CheckOutcome(
        status=PASS if violations == 0 else FAIL,
        lhs=result.lhs,
        rhs=result.rhs,
        margin=result.lhs - result.rhs,
        tolerance=1e-12 * max(1.0, result.rhs),
        note=f"{violations} violations in {params.n_trials} trials",
        rows=[{"trials": params.n_trials, "violations": violations, "worst_lhs": result.lhs,
               "worst_rhs": result.rhs, "null_multiplicity": k}],
    )


# ==================== harmonic ====================


class SolverParams(CheckParams):
    boundary: List[str]
    radius: float = Field(..., gt=0)
    spacings: List[float]
    reference: Optional[List[str]] = Field(None, description="精确解的分量表达式")
    target: Optional[List[str]] = None
    tol: float = Field(1e-8, gt=0)
    error_tol: float = Field(1e-3, gt=0)
    preconditioner: Literal["sobolev", "none"] = "sobolev"
    center: Optional[List[float]] = None


@register_check(
    "solver_convergence",
    "harmonic",
    "Discrete Dirichlet problem for V-harmonic maps: convergence and accuracy",
    SolverParams,
)
def check_solver_convergence(ctx: CheckContext, params: SolverParams) -> CheckOutcome:
    """
    逐个格距求解; 给出 reference 时按最细格距上的最大节点误差判定,
    否则按张力残差判定
    """
    M = ctx.bundle.manifold
    target = _target(ctx, params.target)
    if params.reference is not None and len(params.reference) != target.dim:
        raise InputError(f"reference needs {target.dim} components", param="reference")
    rows, errors = [], []
    for h in sorted(params.spacings, reverse=True):
        grid = solve(
            M,
            target,
            params.boundary,
            params.radius,
            h,
            V=_solver_drift(ctx),
            center=params.center,
            tol=params.tol,
            preconditioner=params.preconditioner,
        )
        err = None
        if params.reference is not None:
            exact = np.stack([ExpressionField(c, M.dim).value(grid.nodes) for c in params.reference], axis=-1)
            err = float(np.max(np.abs(grid.values - exact)))
            errors.append(err)
        rows.append({"spacing": h, "iterations": grid.iterations, "residual": grid.residual,
                     "converged": grid.converged, "max_error": err})
    unconverged = [r["spacing"] for r in rows if not r["converged"]]
    if unconverged:
        return CheckOutcome(status=FAIL, note=f"no convergence at h = {unconverged}", rows=rows)
    if errors:
        orders = [math.log2(e1 / e2) for e1, e2 in zip(errors, errors[1:]) if e2 > 1e-12 and e1 > 1e-12]
        note = f"observed orders {[round(q, 3) for q in orders]}" if orders else "exact up to rounding"
        return CheckOutcome(
            status=PASS if errors[-1] <= params.error_tol else FAIL,
            lhs=errors[-1],
            rhs=params.error_tol,
            margin=params.error_tol - errors[-1],
            note=note,
            rows=rows,
        )
    worst = max(r["residual"] for r in rows)
    return CheckOutcome(status=PASS, lhs=worst, rhs=params.tol, note="no reference; converged residuals", rows=rows)


class GradientParams(SeededParams):
    u: List[str]
    a_values: List[float]
    target: Optional[List[str]] = None
    D: Optional[float] = Field(None, ge=0)
    n_samples: int = Field(2000, ge=1)


@register_check(
    "gradient_estimate",
    "harmonic",
    "Gradient estimate sup_{B_a}|du|^2 <= C(m_u(2a)+1)^2",
    GradientParams,
)
def check_gradient_estimate(ctx: CheckContext, params: GradientParams) -> CheckOutcome:
    """ρ(a) 在倍增半径上不增长"""
    b = ctx.bundle
    u = SmoothMapSpec.from_expressions(params.u, b.manifold, _target(ctx, params.target))
    report = gradient_estimate_check(
        u,
        b.drift,
        b.m,
        params.a_values,
        _witness(ctx, params.D, ConditionId.B3),
        n_samples=params.n_samples,
        seed=_seed(ctx, params, "gradient_estimate"),
    )
    rho = [row.mean for row in report.rows]
    steps = [DOUBLING_SLACK * prev + 1e-12 - r for prev, r in zip(rho, rho[1:])]
    margin = min(steps) if steps else None
    return CheckOutcome(
        status=report.status,
        lhs=max(rho),
        margin=margin,
        note=report.note,
        rows=[row.model_dump(mode="json") for row in report.rows],
    )


class GrowthParams(SeededParams):
    u: List[str]
    radii: List[float]
    target: Optional[List[str]] = None
    expect: Optional[GrowthClass] = None
    n_samples: int = Field(2000, ge=1)


@register_check(
    "growth_classification",
    "harmonic",
    "Growth classes (G1)-(G3) of maps by m_u(a)",
    GrowthParams,
)
def check_growth_classification(ctx: CheckContext, params: GrowthParams) -> CheckOutcome:
    """按 m_u(a) 的增长给映射分类, 可与 expect 比对"""
    u = SmoothMapSpec.from_expressions(params.u, ctx.bundle.manifold, _target(ctx, params.target))
    profile = classify_growth(u, params.radii, n_samples=params.n_samples, seed=_seed(ctx, params, "growth_classification"))
    ok = params.expect is None or profile.growth_class == params.expect
    rows = [{"radius": a, "m_u": v} for a, v in zip(profile.radii, profile.m_u)]
    return CheckOutcome(
        status=PASS if ok else FAIL,
        note=f"class {profile.growth_class.value}; slopes {profile.slopes}",
        rows=rows,
    )


class GaugeParams(SeededParams):
    target: Optional[List[str]] = None
    o: Optional[List[float]] = None
    n_geodesics: int = Field(1000, ge=1)
    radius: Optional[float] = Field(None, gt=0)


def _gauge(target: ManifoldModel, o: Optional[List[float]]) -> ConvexGauge:
    if target.kind != ManifoldKind.SPHERE:
        raise PreconditionError(f"the convex gauge needs a sphere target, got {target.describe()}", param="target")
    return ConvexGauge(kappa=target.kappa, o=list(o) if o is not None else [0.0] * target.dim, target=target)


@register_check(
    "gauge_convexity",
    "harmonic",
    "Convex gauge φ = 1 - cos(√κ d) on regular balls",
    GaugeParams,
)
def check_gauge_convexity(ctx: CheckContext, params: GaugeParams) -> CheckOutcome:
    """沿随机测地线拟合 φ'' ≥ C(φ')² 中的 C"""
    gauge = _gauge(_target(ctx, params.target), params.o)
    C = gauge.fit_convexity(n_geodesics=params.n_geodesics, seed=_seed(ctx, params, "gauge_convexity"),
                            radius=params.radius)
    return CheckOutcome(
        status=PASS if C > 0 else FAIL,
        lhs=C,
        rhs=0.0,
        margin=C if math.isfinite(C) else None,
        note=f"fitted C = {C:.6g}; regular radius {gauge.regular_radius:.6g}",
        rows=[{"n_geodesics": params.n_geodesics, "C": C, "regular_radius": gauge.regular_radius}],
    )


class SubmartingaleParams(PathParams):
    boundary: List[str]
    radius: float = Field(..., gt=0)
    spacing: float = Field(..., gt=0)
    target: Optional[List[str]] = None
    t_grid: List[float] = Field(default_factory=lambda: list(DEFAULT_T_GRID))
    dt: float = Field(1e-3, gt=0)
    perturb_center: Optional[List[float]] = Field(None, description="把中心节点改成该像点, 作为反例")
    expect: Literal["pass", "fail"] = "pass"


@register_check(
    "submartingale_phi",
    "harmonic",
    "φ(u(X_t)) is a submartingale for harmonic maps into regular balls",
    SubmartingaleParams,
)
def check_submartingale_phi(ctx: CheckContext, params: SubmartingaleParams) -> CheckOutcome:
    """求解网格映射后检查 Δ_V φ(u) ≥ 0 与 φ(u(X_t)) 增量非负; expect = fail 时作为反例检验"""
    target = _target(ctx, params.target)
    grid = solve(ctx.bundle.manifold, target, params.boundary, params.radius, params.spacing, V=_solver_drift(ctx))
    if params.perturb_center is not None:
        values = grid.values.copy()
        values[grid.lattice.center_node()] = params.perturb_center
        grid = grid.with_values(values)
    gauge = _gauge(target, grid.regular_center)
    report = submartingale_phi_check(
        grid, gauge, params.n_paths, _seed(ctx, params, "submartingale_phi"), t_grid=params.t_grid, dt=params.dt
    )
    if params.expect == "pass":
        return _summarize(report, {"min_laplacian_phi": _at_least, "increment_phi": _at_least})
    outcome = _summarize(report, {})
    outcome.status = PASS if report.status == FAIL else FAIL
    outcome.note = f"negative control, underlying status {report.status.value}; {outcome.note}"
    return outcome


class GrowthLowerParams(PathParams):
    u: List[str]
    target: Optional[List[str]] = None
    t_grid: List[float]
    dt: float = Field(1e-3, gt=0)
    x0: Optional[List[float]] = None
    o: Optional[List[float]] = None


@register_check(
    "liouville_lower_bound",
    "harmonic",
    "Growth lower bound E d^2(u(X_t), o) - d^2(u(x0), o) >= 2E[t∧τ]|du|^2(x0)",
    GrowthLowerParams,
)
def check_liouville_lower_bound(ctx: CheckContext, params: GrowthLowerParams) -> CheckOutcome:
    """d²(u(X_t), o) 的期望增长不低于 2E[t∧τ]|du|²(x0)"""
    b = ctx.bundle
    u = SmoothMapSpec.from_expressions(params.u, b.manifold, _target(ctx, params.target))
    report = liouville_lower_bound_check(
        u,
        b.drift,
        b.m,
        params.t_grid,
        params.n_paths,
        _seed(ctx, params, "liouville_lower_bound"),
        x0=None if params.x0 is None else _point(ctx, params.x0),
        o=None if params.o is None else np.asarray(params.o, dtype=float),
        dt=params.dt,
    )
    return _summarize(report, {"growth": _at_least, "energy": _at_least})


class DecayParams(CheckParams):
    boundary: List[str]
    radii: List[float]
    target: Optional[List[str]] = None
    cells: int = Field(16, ge=2)
    tol: float = Field(1e-8, gt=0)


@register_check(
    "liouville_decay",
    "harmonic",
    "Energy density decay on expanding balls forces bounded V-harmonic maps to be constant",
    DecayParams,
)
def check_liouville_decay(ctx: CheckContext, params: DecayParams) -> CheckOutcome:
    """球族上中心能量密度随半径衰减"""
    b = ctx.bundle
    report = liouville_decay_demo(
        b.manifold,
        _target(ctx, params.target),
        params.boundary,
        params.radii,
        _solver_drift(ctx),
        b.m,
        cells=params.cells,
        tol=params.tol,
    )
    return _summarize(report, {"energy_density_center": _monotone, "loglog_slope": _at_most})


class BridgeParams(PathParams):
    a: float = Field(..., gt=0)
    r_start: float = Field(..., gt=0)
    b0: float = Field(..., gt=0)
    k_max: int = Field(2, ge=2)
    dt: float = Field(1e-3, gt=0)
    reference: Optional[List[float]] = Field(None, description="参考壳层 r1, r2")
    grid_radii: Optional[List[float]] = None
    grid_boundary: Optional[List[str]] = None
    grid_cells: int = Field(8, ge=2)
    target: Optional[List[str]] = None


@register_check(
    "recurrence_liouville_bridge",
    "harmonic",
    "Recurrence forces the oscillation of bounded V-harmonic functions to vanish",
    BridgeParams,
)
def check_recurrence_liouville_bridge(ctx: CheckContext, params: BridgeParams) -> CheckOutcome:
    """递归性扫描与有界 V-调和剖面在固定壳层上的振幅衰减互相印证"""
    b = ctx.bundle
    if params.reference is not None and len(params.reference) != 2:
        raise InputError("reference must list two radii", param="reference")
    grids, gauge = None, None
    if params.grid_radii and params.grid_boundary:
        target = _target(ctx, params.target)
        gauge = _gauge(target, None)
        grids = solve_family(
            b.manifold, target, params.grid_boundary, params.grid_radii, cells=params.grid_cells, V=_solver_drift(ctx)
        )
    report = recurrence_liouville_bridge(
        b.manifold,
        b.drift,
        params.a,
        params.r_start,
        params.b0,
        params.k_max,
        params.n_paths,
        _seed(ctx, params, "recurrence_liouville_bridge"),
        dt=params.dt,
        reference=tuple(params.reference) if params.reference is not None else None,
        grids=grids,
        gauge=gauge,
    )
    return _summarize(report, {"gauge_oscillation": _monotone})
