"""
矩上界、Lyapunov 型期望上界与保守性的 Monte-Carlo 检验

所有上界都是单侧的: mean + z·se ≤ bound 为 pass, 在 z·se 之内为 boundary。
"""

import math
from functools import partial
from typing import Optional, Sequence, Union

import numpy as np
from scipy.integrate import quad
from SimpleLLMFunc.logger import app_log, push_warning

from common.errors import PreconditionError
from common.stats import McEstimate, VerdictStatus, combine_status, verdict_at_most
from comparison.schemas import ConditionId, ConditionReport
from geometry import DriftField, ManifoldModel
from .engine import simulate_ensemble
from .schemas import DiffusionReport

WitnessLike = Union[float, ConditionReport, None]


def require_witness(D: WitnessLike, condition: ConditionId = ConditionId.B3) -> float:
    """从数值或审计报告中取见证常数 D; 缺失或条件不成立时报 PreconditionError"""
    if isinstance(D, ConditionReport):
        if D.condition_id != condition or not D.holds:
            raise PreconditionError(
                f"({condition.value}) witness required, got {D.condition_id.value} holds={D.holds}", param="D"
            )
        return D.witness_constant
    if D is None or not math.isfinite(D) or D < 0:
        raise PreconditionError(f"({condition.value}) witness constant D is missing", param="D")
    return float(D)


def second_moment_envelope(r0: float, D: float, t: float) -> float:
    """
    𝔇(t) = r0² + 2(1+D)t + 2D·e^{2Dt}∫_0^t (r0² + 2(1+D)s)e^{−2Ds} ds
    """
    if t <= 0:
        return r0**2
    base = r0**2 + 2.0 * (1.0 + D) * t
    if D == 0:
        return base
    integral, _ = quad(lambda s: (r0**2 + 2.0 * (1.0 + D) * s) * math.exp(-2.0 * D * s), 0.0, t)
    return base + 2.0 * D * math.exp(2.0 * D * t) * integral


def _integrated_envelope(r0: float, D: float, s: float) -> float:
    if s <= 0:
        return 0.0
    value, _ = quad(partial(second_moment_envelope, r0, D), 0.0, s)
    return value


def quartic_envelope(r0: float, D: float, t: float) -> float:
    """
    r0⁴ + 4(3+D)∫_0^t 𝔇 + 4D·e^{4Dt}∫_0^t (r0⁴ + 4(D+3)∫_0^s 𝔇)e^{−4Ds} ds
    """
    if t <= 0:
        return r0**4
    base = r0**4 + 4.0 * (3.0 + D) * _integrated_envelope(r0, D, t)
    if D == 0:
        return base

    def integrand(s: float) -> float:
        return (r0**4 + 4.0 * (D + 3.0) * _integrated_envelope(r0, D, s)) * math.exp(-4.0 * D * s)

    integral, _ = quad(integrand, 0.0, t, limit=100)
    return base + 4.0 * D * math.exp(4.0 * D * t) * integral


def _start_radius(manifold: ManifoldModel, p: Optional[np.ndarray], x0: np.ndarray) -> float:
    p = np.zeros(manifold.dim) if p is None else np.asarray(p, dtype=float)
    return float(manifold.distance(p, np.asarray(x0, dtype=float)))


def moment_bound_check(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    x0: np.ndarray,
    D: WitnessLike,
    t_grid: Sequence[float],
    n_paths: int,
    master_seed: int,
    dt: float = 1e-3,
    p: Optional[np.ndarray] = None,
    stop_radius: Optional[float] = None,
    z: Optional[float] = None,
) -> DiffusionReport:
    """
    E[r_p²(X_{t∧τ})] ≤ 𝔇(t) 与 E[r_p⁴(X_{t∧τ})] ≤ 四阶上界, τ 为停止球的首出时

    Raises:
        PreconditionError: 缺少 (B3) 的见证常数
    """
    d = require_witness(D, ConditionId.B3)
    r0 = _start_radius(manifold, p, x0)
    t_grid = sorted(float(t) for t in t_grid)
    ens = simulate_ensemble(manifold, V, x0, t_grid[-1], dt, n_paths, master_seed, p=p,
                            observe_times=t_grid, stop_radius=stop_radius)
    report = DiffusionReport(name="moment_bound", status=VerdictStatus.PASS,
                             truncated_fraction=float(np.mean(ens.truncated)))
    statuses = []
    for j, t in enumerate(ens.observe_times):
        r = ens.radial[j]
        for label, samples, bound in (
            ("E[r^2]", r**2, second_moment_envelope(r0, d, t)),
            ("E[r^4]", r**4, quartic_envelope(r0, d, t)),
        ):
            est = McEstimate.from_samples(samples)
            verdict = verdict_at_most(est.mean, est.stderr, bound, z)
            report.add(float(t), label, est, bound, verdict)
            statuses.append(verdict)
    report.status = combine_status(statuses)
    app_log(f"✅ moment bound check finished: {report.status.value}")
    return report


LYAPUNOV_FUNCTIONS = {
    ConditionId.B1: ("E[r^2]", lambda r: r**2, lambda r0, D, t: r0**2 + 2.0 * (1.0 + D) * t),
    ConditionId.B2: (
        "E[r - log(1+r)]",
        lambda r: r - np.log1p(r),
        lambda r0, D, t: r0 - math.log1p(r0) + (1.0 + D) * t,
    ),
    ConditionId.B3: (
        "E[log(1+r^2)]",
        lambda r: np.log1p(r**2),
        lambda r0, D, t: math.log1p(r0**2) + 2.0 * (1.0 + D) * t,
    ),
}


def lyapunov_bound(condition: Union[ConditionId, str], r0: float, D: float, t: float) -> float:
    return LYAPUNOV_FUNCTIONS[ConditionId(condition)][2](r0, D, t)


def lyapunov_check(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    x0: np.ndarray,
    D: WitnessLike,
    condition: Union[ConditionId, str],
    t: float,
    n_paths: int,
    master_seed: int,
    dt: float = 1e-3,
    p: Optional[np.ndarray] = None,
    stop_radius: Optional[float] = None,
    z: Optional[float] = None,
) -> DiffusionReport:
    """
    (B1): E[r²] ≤ r0² + 2(1+D)t
    (B2): E[r − log(1+r)] ≤ r0 − log(1+r0) + (1+D)t
    (B3): E[log(1+r²)] ≤ log(1+r0²) + 2(1+D)t
    """
    cid = ConditionId(condition)
    if cid.family != "B":
        raise ValueError(f"lyapunov_check needs one of B1, B2, B3, got {cid.value}")
    d = require_witness(D, cid)
    r0 = _start_radius(manifold, p, x0)
    label, fn, bound_fn = LYAPUNOV_FUNCTIONS[cid]
    ens = simulate_ensemble(manifold, V, x0, t, dt, n_paths, master_seed, p=p, stop_radius=stop_radius)
    est = McEstimate.from_samples(fn(ens.radial[-1]))
    bound = bound_fn(r0, d, t)
    verdict = verdict_at_most(est.mean, est.stderr, bound, z)
    if verdict == VerdictStatus.BOUNDARY:
        push_warning(f"⚠️ {label} = {est.mean:.5g} ± {est.stderr:.2g} sits on the bound {bound:.5g}")
    report = DiffusionReport(name=f"lyapunov_{cid.value}", status=verdict,
                             truncated_fraction=float(np.mean(ens.truncated)))
    report.add(t, label, est, bound, verdict)
    return report


def conservativeness_check(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    x0: np.ndarray,
    D: WitnessLike,
    radii: Sequence[float],
    n_paths: int,
    master_seed: int,
    t: float = 1.0,
    dt: float = 1e-3,
    p: Optional[np.ndarray] = None,
    z: Optional[float] = None,
) -> DiffusionReport:
    """
    离开半径 R 的球的路径比例 P(sup_{s≤t} r_p > R) 随 R 递减,
    且不超过 Chebyshev 包络 𝔇(t)/R²
    """
    d = require_witness(D, ConditionId.B3)
    r0 = _start_radius(manifold, p, x0)
    radii = sorted(float(R) for R in radii)
    ens = simulate_ensemble(manifold, V, x0, t, dt, n_paths, master_seed, p=p)
    envelope = second_moment_envelope(r0, d, t)
    report = DiffusionReport(name="conservativeness", status=VerdictStatus.PASS,
                             truncated_fraction=float(np.mean(ens.truncated)))
    statuses, fractions = [], []
    for R in radii:
        left = (ens.max_radial >= R) | ens.truncated
        est = McEstimate.from_samples(left.astype(float))
        bound = min(1.0, envelope / R**2)
        verdict = verdict_at_most(est.mean, est.stderr, bound, z)
        report.add(t, f"exit_fraction[R={R:g}]", est, bound, verdict)
        statuses.append(verdict)
        fractions.append(est.mean)
    if any(b > a + 1e-15 for a, b in zip(fractions, fractions[1:])):
        statuses.append(VerdictStatus.FAIL)
        report.note = "exit fraction is not monotone in R"
    report.status = combine_status(statuses)
    return report
