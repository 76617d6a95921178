"""
条件 (A1)–(A3)、(A1*)–(A3*)、(B1)–(B3) 的数值审计

每个条件都化为 "存在 D ≥ 1 使得 lhs(r) ≤ rhs(D, r)"。在几何半径网格 r_k = r_0·2^{k/4} 上
计算每个半径所需的最小 D_k; 当最后一个倍频程上 log D_k 对 log r 的斜率不超过
GROWTH_SLOPE_TOL 时判定条件成立, 见证常数 D = max(1, max_k D_k)。
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_simpson
from SimpleLLMFunc.logger import app_log, get_location, push_error, push_warning

from common.errors import InputError
from config.config import get_config
from geometry import CurvatureSample, EffectiveDimension, curvature_sampling
from .radial import f_V_profile, measured_laplacian_r, radial_drift_component
from .schemas import AuditRow, ComparisonInput, ConditionId, ConditionReport, ImplicationCheck, RadialFrame

GROWTH_SLOPE_TOL = 0.1
RADII_PER_OCTAVE = 4
_ROW_TOL = 1e-9

ALL_CONDITIONS = tuple(ConditionId)


class AuditData(NamedTuple):
    """所有射线在审计半径上的汇总测量"""

    radii: np.ndarray
    integral_v: np.ndarray  # ∫_0^r v(s) ds
    v_profile: np.ndarray  # v(r)
    min_drift: np.ndarray  # min over rays and t ≤ r of ⟨V, γ̇_t⟩
    oscillation: np.ndarray  # f̄_V(r) − f_V(r)
    r_lap: np.ndarray  # max over rays of r·Δ_V r_p
    f_increasing: bool

    @property
    def v_integrable(self) -> bool:
        return _bounded(self.radii, self.integral_v)

    @property
    def drift_nonnegative(self) -> bool:
        return bool(np.all(self.min_drift >= -_ROW_TOL))

    @property
    def f_bounded(self) -> bool:
        return _bounded(self.radii, self.oscillation)

    @property
    def drift_bounded(self) -> bool:
        return _bounded(self.radii, self.v_profile)


def audit_radii(r0: float, max_radius: float) -> np.ndarray:
    """r_0·2^{k/4}, k = 0, 1, ... 直到不超过 max_radius"""
    if r0 <= 0 or max_radius < r0:
        return np.array([])
    k_max = int(math.floor(RADII_PER_OCTAVE * math.log2(max_radius / r0) + 1e-12))
    return r0 * 2.0 ** (np.arange(k_max + 1) / RADII_PER_OCTAVE)


def growth_slope(radii: np.ndarray, values: np.ndarray) -> float:
    """最后一个倍频程 (r ≥ r_max/2) 上 log values 对 log r 的最小二乘斜率"""
    mask = radii >= radii[-1] / 2.0 - 1e-12
    if mask.sum() < 2:
        return 0.0
    if not np.all(np.isfinite(values[mask])):
        return math.inf
    slope, _ = np.polyfit(np.log(radii[mask]), np.log(values[mask]), 1)
    return float(slope)


def _bounded(radii: np.ndarray, values: np.ndarray) -> bool:
    values = np.abs(values)
    if np.all(values == 0.0):
        return True
    return growth_slope(radii, np.maximum(values, 1e-300)) <= GROWTH_SLOPE_TOL


def _measure_ray(inp: ComparisonInput, direction: np.ndarray, radii: np.ndarray):
    t, fv = f_V_profile(inp, direction, float(radii[-1]))
    idx = np.minimum(np.searchsorted(t, radii - 1e-12), len(t) - 1)
    if inp.drift.is_zero:
        min_drift = np.zeros_like(radii)
    else:
        min_drift = np.minimum.accumulate(radial_drift_component(inp, direction, t))[idx]
    increasing = bool(np.all(np.diff(fv) >= -_ROW_TOL))
    r_lap = radii * np.asarray(measured_laplacian_r(inp, direction, radii))
    return min_drift, np.maximum.accumulate(fv)[idx], np.minimum.accumulate(fv)[idx], increasing, r_lap


def measure_frame(
    inp: ComparisonInput, frame: RadialFrame, radii: np.ndarray, max_workers: Optional[int] = None
) -> AuditData:
    """逐射线测量 (线程池并行, 结果按方向顺序归并)"""
    directions = list(frame.directions())
    workers = max_workers if max_workers is not None else get_config().MAX_WORKERS
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rays = list(pool.map(lambda u: _measure_ray(inp, u, radii), directions))
    min_drift = np.min([ray[0] for ray in rays], axis=0)
    f_hi = np.max([ray[1] for ray in rays], axis=0)
    f_lo = np.min([ray[2] for ray in rays], axis=0)
    r_lap = np.max([ray[4] for ray in rays], axis=0)

    if inp.drift.is_zero:
        v_profile = integral_v = np.zeros_like(radii)
    else:
        grid = np.union1d(np.linspace(0.0, float(radii[-1]), 513), radii)
        v = inp.drift.radial_sup_profile(inp.manifold, grid, p=inp.point())
        pick = np.searchsorted(grid, radii)
        v_profile = v[pick]
        integral_v = cumulative_simpson(v, x=grid, initial=0.0)[pick]
    return AuditData(
        radii=radii,
        integral_v=integral_v,
        v_profile=v_profile,
        min_drift=min_drift,
        oscillation=f_hi - f_lo,
        r_lap=r_lap,
        f_increasing=all(ray[3] for ray in rays),
    )


def _build_report(
    cid: ConditionId,
    radii: np.ndarray,
    lhs: np.ndarray,
    required: np.ndarray,
    rhs_of: Callable[[float], np.ndarray],
    exact: Optional[bool] = None,
    note: str = "",
) -> ConditionReport:
    """
    由每个半径所需的 D_k 生成报告

    Args:
        lhs: 每个半径处的左端实测值
        required: 每个半径所需的最小 D (可为 inf)
        rhs_of: D ↦ 各半径处的右端值
        exact: 若给定, 成立与否由解析理由决定, 不做斜率判定
    """
    required = np.maximum(np.nan_to_num(required, nan=1.0), 1.0)
    slope = growth_slope(radii, required)
    holds = exact if exact is not None else slope <= GROWTH_SLOPE_TOL
    if holds:
        d = float(np.max(required)) if np.all(np.isfinite(required)) else 1.0
    else:
        head = required[radii < radii[-1] / 2.0 - 1e-12]
        head = head[np.isfinite(head)]
        d = float(np.max(head)) if head.size else 1.0
    rhs = np.broadcast_to(rhs_of(d), radii.shape)
    rows, violations = [], []
    for r, l, rh, req in zip(radii, lhs, rhs, required):
        ok = bool(holds or req <= d * (1.0 + _ROW_TOL))
        rows.append(
            AuditRow(condition_id=cid, radius=float(r), lhs=float(l), rhs=float(rh), d_witness=d, passed=ok)
        )
        if not ok:
            violations.append((float(r), float(l)))
    if not holds and not violations:
        violations.append((float(radii[-1]), float(lhs[-1])))
    return ConditionReport(
        condition_id=cid,
        holds=bool(holds),
        witness_constant=d,
        violation_points=[] if holds else violations,
        growth_slope=slope if math.isfinite(slope) else 1e300,
        rows=rows,
        note=note,
    )


def _growth_condition(cid: ConditionId, inp: ComparisonInput, data: AuditData) -> ConditionReport:
    """
    (A2)/(A3): ∫v ≤ (n−m)/4·log(D(1+r^{i−1}))
    (A2*)/(A3*): f̄_V − f_V ≤ (n−m)/2·log(D(1+r^{i−1}))
    """
    radii, m = data.radii, inp.m
    starred = cid.family == "A*"
    lhs = data.oscillation if starred else data.integral_v
    factor = 2.0 if starred else 4.0
    growth = 1.0 + radii ** (cid.index - 1)
    if m.is_infinite:
        return _build_report(cid, radii, lhs, np.ones_like(radii), lambda d: np.full_like(radii, np.inf),
                             exact=True, note="m = ±inf: right-hand side is infinite")
    gap = m.n_minus_m()
    if gap <= 0:
        vanishes = inp.drift.is_zero
        return _build_report(cid, radii, lhs, np.ones_like(radii) if vanishes else np.full_like(radii, np.inf),
                             lambda d: np.zeros_like(radii), exact=vanishes,
                             note="finite m >= n: holds only for V = 0")
    coeff = gap / factor
    with np.errstate(over="ignore"):
        required = np.exp(lhs / coeff) / growth
    return _build_report(cid, radii, lhs, required, lambda d: coeff * np.log(d * growth))


def condition_report(cid: ConditionId, inp: ComparisonInput, data: AuditData) -> ConditionReport:
    radii = data.radii
    zeros = np.zeros_like(radii)
    if cid == ConditionId.A1:
        holds = data.v_integrable or data.drift_nonnegative
        note = f"v integrable: {data.v_integrable}; radial drift nonnegative: {data.drift_nonnegative}"
        return _build_report(cid, radii, data.min_drift, np.ones_like(radii), lambda d: zeros, exact=holds, note=note)
    if cid == ConditionId.A1_STAR:
        holds = data.f_bounded or data.f_increasing
        note = f"f_V bounded: {data.f_bounded}; f_V increasing on all rays: {data.f_increasing}"
        return _build_report(cid, radii, data.oscillation, np.ones_like(radii), lambda d: zeros, exact=holds, note=note)
    if cid.family in ("A", "A*"):
        return _growth_condition(cid, inp, data)
    # (Bi): r·Δ_V r_p ≤ D(1 + r^{i−1})
    shape = 1.0 + radii ** (cid.index - 1)
    return _build_report(cid, radii, data.r_lap, data.r_lap / shape, lambda d: d * shape)


def audit_conditions(
    inp: ComparisonInput,
    frame: RadialFrame,
    which: Iterable[Union[ConditionId, str]] = ALL_CONDITIONS,
    r0: float = 0.125,
    curvature: Optional[CurvatureSample] = None,
    rng: Optional[np.random.Generator] = None,
    n_curvature_samples: int = 1000,
    max_workers: Optional[int] = None,
) -> List[ConditionReport]:
    """
    审计所请求的条件, 并对 B 类条件核对蕴含链

    Args:
        inp: 比较定理输入
        frame: 射线标架
        which: 条件集合
        r0: 最小半径
        curvature: 已有的 Ric_V^m 采样结果; 为 None 时在标架球内采样
        rng: 曲率采样用的随机数发生器
        n_curvature_samples: 采样点数
        max_workers: 射线并行的线程数

    Returns:
        与 which 顺序一致的 ConditionReport 列表
    """
    wanted = [ConditionId(c) for c in which]
    radii = audit_radii(r0, frame.max_radius)
    if radii.size == 0:
        raise InputError(f"no audit radii between r0={r0} and max_radius={frame.max_radius}", param="r0")
    app_log(f"🔍 Auditing {len(wanted)} conditions on {len(frame.ray_directions)} rays, "
            f"{radii.size} radii up to {radii[-1]:.3g}")
    data = measure_frame(inp, frame, radii, max_workers)

    reports: Dict[ConditionId, ConditionReport] = {cid: condition_report(cid, inp, data) for cid in wanted}

    if any(cid.family == "B" for cid in wanted):
        rng = rng if rng is not None else np.random.default_rng(0)
        if curvature is None:
            curvature = curvature_sampling(inp.manifold, inp.drift, inp.m, n_curvature_samples, frame.max_radius, rng)
        full = {cid: reports.get(cid) or condition_report(cid, inp, data) for cid in ConditionId}
        infinite_ok = infinite_ricci_bounded_below(inp, frame.max_radius, rng)
        for check in implication_checks(inp, full, data, curvature, infinite_ok):
            rep = reports.get(check.conclusion)
            if rep is None:
                continue
            if check.premise_holds:
                rep.implied_by.append(check.premise)
            if not check.consistent:
                rep.implication_consistent = False
                push_error(
                    f"❌ implication '{check.premise} => {check.conclusion.value}' violated on sampled data",
                    location=get_location(),
                )

    for cid in wanted:
        rep = reports[cid]
        app_log(f"{'✅' if rep.holds else '⚠️'} {cid.value}: holds={rep.holds}, "
                f"D={rep.witness_constant:.4g}, slope={rep.growth_slope:.3g}")
    return [reports[cid] for cid in wanted]


def implication_checks(
    inp: ComparisonInput,
    reports: Dict[ConditionId, ConditionReport],
    data: AuditData,
    curvature: CurvatureSample,
    infinite_ricci_ok: bool,
) -> List[ImplicationCheck]:
    """
    在采样数据上核对的定理链:

    - (Ai) 或 (Ai*) 且 Ric_V^m ≥ 0, m ≤ 1  ⇒  (Bi)
    - Ric_V^m ≥ −K, m ≤ 1, f_V 有界  ⇒  (B2)
    - Ric_V^m ≥ −K, m ≤ 1, |V| 有界  ⇒  (B3)
    - Ric_V^∞ ≥ −K  ⇒  (B3)
    - Ric_V^m ≥ −K, 有限 m ≥ n  ⇒  (B2)
    """
    m = inp.m
    generalized = m.in_comparison_range()
    classical = not m.is_infinite and float(m.value) >= m.dim
    checks: List[ImplicationCheck] = []

    def check(premise: str, premise_holds: bool, conclusion: ConditionId) -> None:
        checks.append(
            ImplicationCheck(
                premise=premise,
                conclusion=conclusion,
                premise_holds=bool(premise_holds),
                conclusion_holds=reports[conclusion].holds,
            )
        )

    chains = (
        (ConditionId.A1, ConditionId.A1_STAR, ConditionId.B1),
        (ConditionId.A2, ConditionId.A2_STAR, ConditionId.B2),
        (ConditionId.A3, ConditionId.A3_STAR, ConditionId.B3),
    )
    for a, a_star, b in chains:
        for premise in (a, a_star):
            check(f"{premise.value} and Ric_V^m >= 0 (m <= 1)",
                  generalized and curvature.nonnegative and reports[premise].holds, b)
    check("Ric_V^m >= -K (m <= 1) and f_V bounded", generalized and data.f_bounded, ConditionId.B2)
    check("Ric_V^m >= -K (m <= 1) and |V| bounded", generalized and data.drift_bounded, ConditionId.B3)
    check("Ric_V^inf >= -K", infinite_ricci_ok, ConditionId.B3)
    check("Ric_V^m >= -K with finite m >= n", classical, ConditionId.B2)
    return checks


def infinite_ricci_bounded_below(inp: ComparisonInput, radius: float, rng: np.random.Generator) -> bool:
    """在半径 radius/2 与 radius 的球内采样 Ric_V^∞/|v|² 的最小值, 要求下界不随半径发散"""
    m_inf = EffectiveDimension(value="+inf", dim=inp.manifold.dim)
    inner = curvature_sampling(inp.manifold, inp.drift, m_inf, 500, radius / 2.0, rng)
    outer = curvature_sampling(inp.manifold, inp.drift, m_inf, 500, radius, rng)
    k_inner = max(0.0, -inner.min_ratio)
    k_outer = max(0.0, -outer.min_ratio)
    bounded = k_outer < 1e-6 or k_outer <= 2.0 * k_inner + 1e-6
    if not bounded:
        push_warning(f"⚠️ sampled Ric_V^inf lower bound drifts from -{k_inner:.3g} to -{k_outer:.3g}")
    return bool(bounded)


def audit_rows_csv(reports: Sequence[ConditionReport], path: Union[str, Path]) -> Path:
    """按行写出 condition_id, radius, lhs, rhs, D_witness, pass"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["condition_id", "radius", "lhs", "rhs", "D_witness", "pass"])
        for rep in reports:
            for row in rep.rows:
                writer.writerow([
                    row.condition_id.value,
                    repr(row.radius),
                    repr(row.lhs),
                    repr(row.rhs),
                    repr(row.d_witness),
                    str(row.passed).lower(),
                ])
    return path
