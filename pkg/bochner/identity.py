"""
Bochner 恒等式及其推论的逐点数值检验

对映射 u: M → N 与漂移 V,
    ½Δ_V|du|² = |∇du|² + Σ⟨du(e_i), ∇_{e_i}τ_V(u)⟩ + Σ Ric_V^∞(e_i,e_j)⟨du(e_i), du(e_j)⟩
                − Σ⟨ᴺR(du e_i, du e_j)du e_j, du e_i⟩
左边的 Δ_V|du|² 需要三阶导数, 用步长 FD_OUTER_STEP 的嵌套中心差分加 Richardson 外推。

带自由参数 ε 的加强型 Bochner 不等式没有规范的 ε 取法, 不在这里检验。
"""

import csv
import math
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Union

import numpy as np
from SimpleLLMFunc.logger import app_log, push_error, push_warning

from common.errors import (
    InputError,
    InvalidConfigurationError,
    PreconditionError,
    UnsupportedConfigurationError,
)
from common.stats import VerdictStatus
from config.config import get_config
from geometry import (
    CallableField,
    DriftField,
    EffectiveDimension,
    ManifoldModel,
    as_scalar_field,
    hessian_scalar,
    laplacian_V,
    weighted_ricci_tensor,
)
from geometry.finite_difference import central_derivative
from .maps import (
    drift_image_squared,
    energy_density,
    hessian_norm_squared,
    pullback_gram,
    target_curvature,
    tension_field,
    tension_sup_norm,
)
from .schemas import BochnerReport, HilbertTraceResult, SmoothMapSpec

LOWER_BOUND_TOL = 1e-4
HARMONIC_TOL = 1e-6
SCALAR_TOL = 1e-6


class BochnerTerms(NamedTuple):
    lhs: np.ndarray  # ½Δ_V|du|²
    hessian: np.ndarray  # |∇du|²
    tension: np.ndarray  # Σ⟨du e_i, ∇_{e_i}τ_V⟩
    ricci: np.ndarray  # Σ Ric_V^∞(e_i,e_j)⟨du e_i, du e_j⟩
    curvature: np.ndarray  # Σ⟨ᴺR(du e_i, du e_j)du e_j, du e_i⟩

    @property
    def rhs(self) -> np.ndarray:
        return self.hessian + self.tension + self.ricci - self.curvature

    @property
    def residual(self) -> np.ndarray:
        return self.lhs - self.rhs


def _drift(V: Optional[DriftField], dim: int) -> DriftField:
    return DriftField.zero(dim) if V is None else V


def _infinite(dim: int) -> EffectiveDimension:
    return EffectiveDimension(value="+inf", dim=dim)


def _points(manifold: ManifoldModel, points) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return manifold.check_point(points)


def half_laplacian_energy(u: SmoothMapSpec, V: Optional[DriftField], x: np.ndarray, h: Optional[float] = None) -> np.ndarray:
    """½Δ_V|du|², |du|² 作为标量场再做一次差分"""
    outer = h if h is not None else get_config().FD_OUTER_STEP
    field = CallableField(lambda z: energy_density(u, z, h), u.domain.dim, step=outer)
    return 0.5 * np.asarray(laplacian_V(u.domain, V, field, x))


def bochner_terms(u: SmoothMapSpec, V: Optional[DriftField], x: np.ndarray, h: Optional[float] = None) -> BochnerTerms:
    """
    Bochner 恒等式两边的各项

    Args:
        h: 给定时所有导数都用该步长差分 (用于收敛阶检验), 否则优先使用精确导数
    """
    kappa = target_curvature(u.target)
    M = u.domain
    x = M.check_point(np.asarray(x, dtype=float))
    y = u.evaluate(x)
    J = u.jacobian(x, h)
    ginv = M.inverse_metric(x)
    hN = u.target.metric(y)

    outer = h if h is not None else get_config().FD_OUTER_STEP
    tau = tension_field(u, V, x, h)
    dtau = central_derivative(lambda z: tension_field(u, V, z, h), x, outer)  # (..., k, n)
    cov_dtau = dtau + np.einsum("...bgd,...gj,...d->...bj", u.target.christoffel(y), J, tau)
    tension_term = np.einsum("...ij,...ab,...ai,...bj->...", ginv, hN, J, cov_dtau)

    ric = weighted_ricci_tensor(M, _drift(V, M.dim), _infinite(M.dim), x)
    ricci_term = np.einsum("...ij,...ia,...jb,...ga,...gd,...db->...", ric, ginv, ginv, J, hN, J)

    P = pullback_gram(u, x, J)
    tr = np.trace(P, axis1=-2, axis2=-1)
    tr_sq = np.einsum("...ij,...ji->...", P, P)
    return BochnerTerms(
        lhs=half_laplacian_energy(u, V, x, h),
        hessian=hessian_norm_squared(u, x, h),
        tension=tension_term,
        ricci=ricci_term,
        curvature=kappa * (tr**2 - tr_sq),
    )


def bochner_residual(u: SmoothMapSpec, V: Optional[DriftField], x: np.ndarray, h: Optional[float] = None) -> Union[float, np.ndarray]:
    """
    ½Δ_V|du|² 减去恒等式右边, 应在差分误差内为 0

    Raises:
        UnsupportedConfigurationError: 目标不是常曲率模型
        ChartDomainError: 点或像点不在坐标卡内
    """
    res = bochner_terms(u, V, x, h).residual
    return float(res) if np.ndim(res) == 0 else res


def refinement_order(
    u: SmoothMapSpec,
    V: Optional[DriftField],
    x: np.ndarray,
    steps: Sequence[float] = (0.1, 0.05, 0.025),
) -> float:
    """
    逐次减半步长时残差的观测收敛阶 log2(|r(h)|/|r(h/2)|) 的平均

    观测阶低于 1.5 时发出精度警告 (u 的光滑性可能不足)。
    """
    steps = list(steps)
    if len(steps) < 2 or any(abs(a / b - 2.0) > 1e-9 for a, b in zip(steps, steps[1:])):
        raise InputError("refinement_order needs successively halved steps", param="steps")
    residuals = [abs(float(np.max(np.abs(bochner_residual(u, V, x, h))))) for h in steps]
    orders = [
        math.log2(a / b) for a, b in zip(residuals, residuals[1:]) if a > 0 and b > 0
    ]
    if not orders:
        return math.inf
    order = float(np.mean(orders))
    if order < 1.5:
        push_warning(f"⚠️ Bochner residual converges with order {order:.2f} < 1.5 under step refinement")
    return order


def hilbert_trace_check(h, k: int = 0, tol: float = 1e-12) -> HilbertTraceResult:
    """
    Σ‖h_ij‖² ≥ ‖Σ h_ii‖²/(n−k), h_ij = h_ji 取值于内积空间

    Args:
        h: 形状 (n, n) (标量) 或 (n, n, d) (向量取值)
        k: (h_ij) 的零特征值重数; k > 0 时先验证公共核的维数至少为 k

    Raises:
        InputError: 不对称, 或声明的零重数不成立
    """
    h = np.asarray(h, dtype=float)
    if h.ndim == 2:
        h = h[..., None]
    if h.ndim != 3 or h.shape[0] != h.shape[1]:
        raise InputError(f"expected an (n, n) or (n, n, d) array, got shape {h.shape}", param="h")
    n = h.shape[0]
    scale = max(1.0, float(np.max(np.abs(h))))
    if not np.allclose(h, np.swapaxes(h, 0, 1), atol=1e-12 * scale, rtol=0.0):
        raise InputError("h_ij must equal h_ji", param="h")
    if not 0 <= k < n:
        raise InputError(f"null multiplicity must lie in [0, {n - 1}], got {k}", param="k")
    if k > 0:
        # 各分量矩阵的公共核 = 纵向堆叠后的核
        stacked = np.concatenate([h[:, :, l] for l in range(h.shape[2])], axis=0)
        rank = np.linalg.matrix_rank(stacked, tol=1e-10 * scale)
        if n - rank < k:
            raise InputError(f"the family has a common kernel of dimension {n - rank} < {k}", param="k")
    lhs = float(np.sum(h**2))
    trace = np.einsum("iil->l", h)
    rhs = float(np.sum(trace**2) / (n - k))
    return HilbertTraceResult(lhs=lhs, rhs=rhs, passed=lhs >= rhs - tol * max(1.0, rhs), null_multiplicity=k)


def _min_ricci_ratio(manifold: ManifoldModel, V: Optional[DriftField], m: EffectiveDimension, points: np.ndarray) -> float:
    """各点 Ric_V^m 相对 g 的最小广义特征值"""
    ric = weighted_ricci_tensor(manifold, _drift(V, manifold.dim), m, points)
    L = np.linalg.cholesky(manifold.metric(points))
    Linv = np.linalg.inv(L)
    sym = Linv @ ric @ np.swapaxes(Linv, -1, -2)
    return float(np.min(np.linalg.eigvalsh(0.5 * (sym + np.swapaxes(sym, -1, -2)))))


def bochner_coefficient(m: EffectiveDimension) -> float:
    """Δ_V|du|² ≥ c·|du(V)|² 中的 c = 2m/(n(m−n)); m = ±∞ 时为 2/n"""
    n = m.dim
    if m.is_infinite:
        return 2.0 / n
    mv = float(m.value)
    return 2.0 * mv / (n * (mv - n))


def bochner_lower_bound_check(
    u: SmoothMapSpec,
    V: Optional[DriftField],
    m: EffectiveDimension,
    points,
    tol: float = LOWER_BOUND_TOL,
    harmonic_tol: float = HARMONIC_TOL,
) -> BochnerReport:
    """
    V-调和映射满足 Δ_V|du|² ≥ (2m/(n(m−n)))|du(V)|² ≥ 0

    前提: m ∈ [−∞,0] ∪ (n,+∞], 测试点上 Ric_V^m ≥ 0, Sect_N ≤ 0, 且 τ_V(u) ≈ 0。

    Raises:
        InvalidConfigurationError: m 不在 Liouville 参数范围或 m = n
        PreconditionError: 上述前提之一不成立
    """
    if not m.in_liouville_range() or m.equals_dim():
        raise InvalidConfigurationError(f"m = {m.label()} is outside [-inf,0] U (n,+inf]", param="m")
    pts = _points(u.domain, points)
    kappa = target_curvature(u.target)
    if kappa > 0:
        raise PreconditionError(f"target sectional curvature {kappa:g} is positive", param="target")
    ratio = _min_ricci_ratio(u.domain, V, m, pts)
    if ratio < -1e-8:
        raise PreconditionError(f"Ric_V^m has eigenvalue {ratio:.3g} < 0 at a test point", param="m")
    tension = tension_sup_norm(u, V, pts)
    if tension >= harmonic_tol:
        raise PreconditionError(f"u is not V-harmonic: sup|tau_V(u)| = {tension:.3g}", param="u")

    coef = bochner_coefficient(m)
    lhs = 2.0 * np.atleast_1d(half_laplacian_energy(u, V, pts))
    rhs = coef * np.atleast_1d(drift_image_squared(u, V, pts))
    report = BochnerReport(name="bochner_lower_bound", status=VerdictStatus.PASS)
    for x, a, b in zip(pts, lhs, rhs):
        report.add("bochner_lower_bound", x, a, b, tol)
    report.finalize()
    app_log(f"🔍 Bochner lower bound (coefficient {coef:.4g}) on {len(pts)} points: {report.status.value}")
    return report


def distance_laplacian_check(
    u: SmoothMapSpec,
    V: Optional[DriftField],
    o,
    points,
    tol: float = LOWER_BOUND_TOL,
    harmonic_tol: float = HARMONIC_TOL,
) -> BochnerReport:
    """
    Hadamard 目标中 V-调和映射满足 Δ_V d_N²(u, o) ≥ 2|du|²

    Raises:
        UnsupportedConfigurationError: 目标有正曲率 (割迹可达)
        PreconditionError: u 不是 V-调和的
    """
    N = u.target
    if not N.is_hadamard or N.kappa > 0:
        raise UnsupportedConfigurationError(
            f"distance Laplacian check needs a Hadamard target, got {N.describe()}", param="target"
        )
    pts = _points(u.domain, points)
    tension = tension_sup_norm(u, V, pts)
    if tension >= harmonic_tol:
        raise PreconditionError(f"u is not V-harmonic: sup|tau_V(u)| = {tension:.3g}", param="u")
    o = np.asarray(o, dtype=float)

    def squared_distance(z: np.ndarray) -> np.ndarray:
        y = u.fn(z)
        return N.distance(np.broadcast_to(o, np.shape(y)), y) ** 2

    field = CallableField(squared_distance, u.domain.dim, step=get_config().FD_OUTER_STEP)
    lhs = np.atleast_1d(laplacian_V(u.domain, V, field, pts))
    rhs = 2.0 * np.atleast_1d(energy_density(u, pts))
    report = BochnerReport(name="distance_laplacian", status=VerdictStatus.PASS)
    for x, a, b in zip(pts, lhs, rhs):
        report.add("distance_laplacian", x, a, b, tol)
    return report.finalize()


def scalar_bochner_check(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    m: EffectiveDimension,
    u,
    points,
    tol: float = SCALAR_TOL,
) -> BochnerReport:
    """
    标量函数 u 的三条 Bochner 不等式:

    - ½Δ_V|∇u|² ≥ (Δ_V u)²/n + 2Δ_V u⟨V,∇u⟩/n + ⟨∇Δ_V u,∇u⟩ + Ric_V^m(∇u,∇u) + m⟨V,∇u⟩²/(n(m−n))
    - ½Δ_V|∇u|² ≥ |Hess u|² + ⟨∇Δ_V u,∇u⟩ + Ric_V^m(∇u,∇u) + ⟨V,∇u⟩²/(m−n) (实为等式)
    - m < 0 或 m > n 时: ½Δ_V|∇u|² − ⟨∇Δ_V u,∇u⟩ ≥ Ric_V^m(∇u,∇u) + (Δ_V u)²/m

    前两条要求 m ∈ [−∞,0] ∪ (n,+∞]; 第三条只在 m < 0 或 m > n 时加入。
    """
    if not m.in_liouville_range() or m.equals_dim():
        raise InvalidConfigurationError(f"m = {m.label()} is outside [-inf,0] U (n,+inf]", param="m")
    n = manifold.dim
    field = as_scalar_field(u, n)
    V = _drift(V, n)
    pts = _points(manifold, points)

    grad = field.gradient(pts)
    ginv = manifold.inverse_metric(pts)
    grad_up = np.einsum("...ij,...j->...i", ginv, grad)
    hess = hessian_scalar(manifold, field, pts)
    hess_sq = np.einsum("...ia,...jb,...ij,...ab->...", ginv, ginv, hess, hess)
    lap_v = np.asarray(laplacian_V(manifold, V, field, pts))
    v_dot = np.einsum("...k,...k->...", V.vector_at(pts), grad)
    ric = np.einsum("...ij,...i,...j->...", weighted_ricci_tensor(manifold, V, m, pts), grad_up, grad_up)

    def grad_sq(z: np.ndarray) -> np.ndarray:
        gz = field.gradient(z)
        return np.einsum("...i,...ij,...j->...", gz, manifold.inverse_metric(z), gz)

    half_lap = 0.5 * np.asarray(
        laplacian_V(manifold, V, CallableField(grad_sq, n, step=get_config().FD_OUTER_STEP), pts)
    )
    d_lap = central_derivative(lambda z: np.asarray(laplacian_V(manifold, V, field, z)), pts, get_config().FD_STEP)
    cross = np.einsum("...k,...k->...", d_lap, grad_up)

    c = m.correction_coefficient()
    strong_coef = 1.0 / n if m.is_infinite else float(m.value) / (n * (float(m.value) - n))
    report = BochnerReport(name="scalar_bochner", status=VerdictStatus.PASS)
    for i, x in enumerate(pts):
        report.add(
            "scalar_cauchy_schwarz",
            x,
            half_lap[i],
            lap_v[i] ** 2 / n + 2.0 * lap_v[i] * v_dot[i] / n + cross[i] + ric[i] + strong_coef * v_dot[i] ** 2,
            tol,
        )
        report.add("scalar_identity", x, half_lap[i], hess_sq[i] + cross[i] + ric[i] + c * v_dot[i] ** 2, tol)
        mv = m.as_float()
        if mv < 0 or mv > n:
            extra = 0.0 if m.is_infinite else lap_v[i] ** 2 / mv
            report.add("scalar_dimensional", x, half_lap[i] - cross[i], ric[i] + extra, tol)
    report.finalize()
    if report.status == VerdictStatus.FAIL:
        push_error(f"❌ scalar Bochner inequality violated at {sum(not r.passed for r in report.rows)} rows")
    return report


def bochner_rows_csv(reports: Union[BochnerReport, List[BochnerReport]], path) -> Path:
    """CSV 表头: check_id, point, lhs, rhs, margin, pass"""
    if isinstance(reports, BochnerReport):
        reports = [reports]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["check_id", "point", "lhs", "rhs", "margin", "pass"])
        for rep in reports:
            for row in rep.rows:
                writer.writerow([
                    row.check_id,
                    " ".join(repr(c) for c in row.point),
                    repr(row.lhs),
                    repr(row.rhs),
                    repr(row.margin),
                    "true" if row.passed else "false",
                ])
    return path
