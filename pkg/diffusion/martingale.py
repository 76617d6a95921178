"""
生成元、Itô 鞅与 Kendall 径向分解的 Monte-Carlo 检验
"""

import math
from typing import Optional, Sequence

import numpy as np
from SimpleLLMFunc.logger import app_log, push_warning

from common.errors import UnsupportedConfigurationError
from common.stats import McEstimate, VerdictStatus, combine_status, verdict_close
from config.config import get_config
from geometry import DriftField, ManifoldModel, as_scalar_field, laplacian_V
from .engine import FieldFunctional, RadialFunctional, simulate_ensemble, step
from .schemas import DiffusionPath, DiffusionReport, RngSpec

QV_REL_TOL = 0.05


def ito_residual(path: DiffusionPath, manifold: ManifoldModel, V: Optional[DriftField], f) -> np.ndarray:
    """
    m_t^f = f(X_t) − f(X_0) − ∫_0^t Δ_V f(X_s) ds (左端点求积)

    Returns:
        与 path.times 等长的残差序列, m_0 = 0
    """
    field = as_scalar_field(f, manifold.dim)
    values = np.asarray(field.value(path.points), dtype=float)
    if len(path.times) == 1:
        return np.zeros(1)
    dt = np.diff(path.times)
    gen = np.asarray(laplacian_V(manifold, V, field, path.points[:-1]), dtype=float)
    integral = np.concatenate([[0.0], np.cumsum(gen * dt)])
    return values - values[0] - integral


def _relative_verdict(estimate: McEstimate, target: float, rel_tol: float, z: Optional[float] = None) -> VerdictStatus:
    """|mean − target| ≤ rel_tol·|target| + z·se"""
    z = get_config().Z_SLACK if z is None else z
    if abs(estimate.mean - target) <= rel_tol * abs(target) + z * estimate.stderr:
        return VerdictStatus.PASS
    return VerdictStatus.FAIL


def generator_check(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    f,
    x: np.ndarray,
    dt: float,
    n_trials: int,
    rng: RngSpec,
    z: Optional[float] = None,
) -> DiffusionReport:
    """
    (E[f(X_dt)] − f(x))/dt ≈ Δ_V f(x)

    用控制变量 √2·⟨∇f(x), σ(x)dW⟩ (均值为 0) 消去一阶噪声, 方差从 O(1/dt) 降为 O(1)。
    """
    field = as_scalar_field(f, manifold.dim)
    x = manifold.check_point(np.asarray(x, dtype=float))
    gen = rng.generator()
    dW = gen.standard_normal((n_trials, manifold.dim)) * math.sqrt(dt)
    y = step(manifold, V, np.broadcast_to(x, dW.shape), dW, dt)
    inside = np.asarray(manifold.contains(y), dtype=bool)
    grad = field.gradient(x)
    control = math.sqrt(2.0) * (manifold.diffusion_coefficient(x).T @ grad) @ dW.T
    samples = (np.asarray(field.value(y), dtype=float) - float(field.value(x)) - control) / dt
    estimate = McEstimate.from_samples(samples[inside])
    target = float(laplacian_V(manifold, V, field, x))
    verdict = verdict_close(estimate.mean, estimate.stderr, target, z)
    report = DiffusionReport(name="generator", status=verdict, truncated_fraction=float(1.0 - inside.mean()))
    report.add(dt, "generator", estimate, target, verdict)
    app_log(f"🔍 generator check: {estimate.mean:.6g} ± {estimate.stderr:.2g} vs Δ_V f = {target:.6g} -> {verdict.value}")
    return report


def ito_martingale_check(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    x0: np.ndarray,
    fields: Sequence,
    t_end: float,
    dt: float,
    n_paths: int,
    master_seed: int,
    z: Optional[float] = None,
    qv_rel_tol: float = QV_REL_TOL,
) -> DiffusionReport:
    """
    对每个 f 检验 E[m_t^f] = 0 与 ⟨m^f⟩_t ≈ 2∫|∇f|² ds
    """
    functionals = [FieldFunctional(manifold, V, f) for f in fields]
    ens = simulate_ensemble(manifold, V, x0, t_end, dt, n_paths, master_seed, functionals=functionals)
    report = DiffusionReport(name="ito_martingale", status=VerdictStatus.PASS,
                             truncated_fraction=float(np.mean(ens.truncated)))
    statuses = []
    for i, F in enumerate(functionals):
        res = McEstimate.from_samples(ens.residual[i, -1])
        v1 = verdict_close(res.mean, res.stderr, 0.0, z)
        report.add(t_end, f"residual[{F.name}]", res, 0.0, v1)
        # 二次变差与 2∫Γ(f) 的逐路径差, 其均值应为 O(dt)
        target = McEstimate.from_samples(2.0 * ens.carre_du_champ[i, -1])
        qv = McEstimate.from_samples(ens.quadratic_variation[i, -1])
        v2 = _relative_verdict(qv, target.mean, qv_rel_tol, z) if target.mean > 0 else (
            VerdictStatus.PASS if qv.mean <= 1e-12 else VerdictStatus.FAIL)
        report.add(t_end, f"quadratic_variation[{F.name}]", qv, target.mean, v2)
        statuses += [v1, v2]
    report.status = combine_status(statuses)
    return report


def weak_order_check(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    f,
    x0: np.ndarray,
    t_end: float,
    dts: Sequence[float],
    n_paths: int,
    rng: RngSpec,
    ratio_range=(1.5, 3.0),
    z: Optional[float] = None,
) -> DiffusionReport:
    """
    以耦合布朗增量比较逐次减半的步长, 检查一阶弱收敛

    dts 必须为 dt_0, dt_0/2, dt_0/4, ...; 最细层的增量两两相加得到粗层增量。
    差值 d_ℓ = E[f]_{dt_ℓ} − E[f]_{dt_{ℓ+1}} 的相邻比值应落在 ratio_range 内。
    """
    dts = [float(d) for d in dts]
    if len(dts) < 3 or any(abs(a / b - 2.0) > 1e-9 for a, b in zip(dts, dts[1:])):
        raise ValueError("weak_order_check needs at least three successively halved steps")
    field = as_scalar_field(f, manifold.dim)
    fine = dts[-1]
    k_fine = int(round(t_end / fine))
    x0 = manifold.check_point(np.asarray(x0, dtype=float))
    gen = rng.generator()
    levels = len(dts)
    states = [np.broadcast_to(x0, (n_paths, manifold.dim)).copy() for _ in range(levels)]
    pending = [np.zeros((n_paths, manifold.dim)) for _ in range(levels)]
    for k in range(k_fine):
        dW = gen.standard_normal((n_paths, manifold.dim)) * math.sqrt(fine)
        for lvl in range(levels):
            pending[lvl] += dW
            stride = 2 ** (levels - 1 - lvl)
            if (k + 1) % stride == 0:
                states[lvl] = step(manifold, V, states[lvl], pending[lvl], dts[lvl])
                pending[lvl][:] = 0.0
    values = [np.asarray(field.value(s), dtype=float) for s in states]

    report = DiffusionReport(name="weak_order", status=VerdictStatus.PASS)
    diffs = []
    for lvl in range(levels - 1):
        est = McEstimate.from_samples(values[lvl] - values[lvl + 1])
        diffs.append(est)
        report.add(t_end, f"difference[dt={dts[lvl]:g}]", est, float("nan"), VerdictStatus.PASS)
    statuses = []
    lo, hi = ratio_range
    for a, b in zip(diffs, diffs[1:]):
        ratio = a.mean / b.mean if b.mean != 0 else math.inf
        # 比值的一阶误差传播
        se = abs(ratio) * math.hypot(a.stderr / abs(a.mean) if a.mean else math.inf,
                                     b.stderr / abs(b.mean) if b.mean else math.inf)
        s = (get_config().Z_SLACK if z is None else z) * se
        if lo <= ratio <= hi:
            verdict = VerdictStatus.PASS
        elif ratio + s >= lo and ratio - s <= hi:
            verdict = VerdictStatus.BOUNDARY
        elif not math.isfinite(se) or se > 0.5 * abs(ratio):
            verdict = VerdictStatus.LOW_POWER
        else:
            verdict = VerdictStatus.FAIL
        ratio_est = McEstimate(mean=ratio if math.isfinite(ratio) else 1e300,
                               stderr=se if math.isfinite(se) else 1e300, n_samples=n_paths)
        report.add(t_end, "halving_ratio", ratio_est, lo, verdict)
        statuses.append(verdict)
    report.status = combine_status(statuses)
    if report.status == VerdictStatus.LOW_POWER:
        push_warning("⚠️ weak-order differences are below the Monte-Carlo noise; increase n_paths")
    return report


def kendall_check(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    x0: np.ndarray,
    t_grid: Sequence[float],
    dt: float,
    n_paths: int,
    master_seed: int,
    p: Optional[np.ndarray] = None,
    z: Optional[float] = None,
    qv_rel_tol: float = QV_REL_TOL,
) -> DiffusionReport:
    """
    β_t = (r_p(X_t) − r_p(X_0) − ∫Δ_V r_p ds)/√2 应为标准布朗运动:
    E[β_t] ≈ 0 且 ⟨β⟩_t ≈ t

    Raises:
        UnsupportedConfigurationError: 流形不是 Hadamard 型 (割迹可达)
    """
    if not manifold.is_hadamard:
        raise UnsupportedConfigurationError(
            f"Kendall decomposition check needs an empty cut locus; {manifold.describe()} is not Hadamard",
            param="manifold",
        )
    t_grid = sorted(float(t) for t in t_grid)
    radial = RadialFunctional(manifold, V, p)
    ens = simulate_ensemble(
        manifold, V, x0, max(t_grid), dt, n_paths, master_seed, p=p, observe_times=t_grid, functionals=[radial]
    )
    report = DiffusionReport(name="kendall", status=VerdictStatus.PASS,
                             truncated_fraction=float(np.mean(ens.truncated)))
    statuses = []
    for j, t in enumerate(ens.observe_times):
        beta = McEstimate.from_samples(ens.residual[0, j] / math.sqrt(2.0))
        v1 = verdict_close(beta.mean, beta.stderr, 0.0, z)
        report.add(float(t), "beta_mean", beta, 0.0, v1)
        qv = McEstimate.from_samples(ens.quadratic_variation[0, j] / 2.0)
        v2 = _relative_verdict(qv, float(t), qv_rel_tol, z)
        report.add(float(t), "beta_quadratic_variation", qv, float(t), v2)
        statuses += [v1, v2]
    report.status = combine_status(statuses)
    return report
