"""
两边界首达概率与递归/暂留的数值判别

P_b = P(r_p 先到达 a 再到达 b), 由 r_start ∈ (a, b) 出发。
离散路径在一步之内穿越边界的概率用布朗桥修正:
径向扩散系数为 2 时, 两端到边界距离为 d1, d2 的一步穿越概率为 exp(−d1·d2/dt)。
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_simpson
from SimpleLLMFunc.logger import app_log, push_warning

from common.errors import ChartDomainError, CutLocusError, InputError
from common.stats import McEstimate
from config.config import get_config
from geometry import DriftField, ManifoldModel
from .engine import RadialFunctional, batch_sizes, step
from .schemas import RecurrenceClass, RngSpec

RECURRENT_RATIO = 0.75


def _start_point(manifold: ManifoldModel, p: np.ndarray, r_start: float, direction: Optional[np.ndarray]) -> np.ndarray:
    if direction is None:
        direction = np.eye(manifold.dim)[0]
    u = manifold.unit_direction(p, np.asarray(direction, dtype=float))
    return manifold.check_point(manifold.geodesic(p, u, r_start))


def _check_annulus(manifold: ManifoldModel, a: float, b: float, r_start: float) -> None:
    if not 0 < a < r_start < b:
        raise InputError(f"need 0 < a < r_start < b, got a={a}, r_start={r_start}, b={b}", param="r_start")
    if b >= manifold.cut_locus_radius:
        raise CutLocusError(f"outer radius {b} reaches the cut locus", param="b")


def _probe_batch(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    p: np.ndarray,
    x_start: np.ndarray,
    a: float,
    b: float,
    dt: float,
    size: int,
    rng: RngSpec,
    budget: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """返回 (hit_a, censored) 两个布尔数组; budget 是每条路径的步数上限"""
    n = manifold.dim
    gen = rng.generator()
    sqrt_dt = math.sqrt(dt)
    x = np.broadcast_to(x_start, (size, n)).copy()
    r = np.asarray(manifold.distance(p, x), dtype=float)
    alive = np.ones(size, dtype=bool)
    hit_a = np.zeros(size, dtype=bool)
    censored = np.zeros(size, dtype=bool)
    steps = 0
    while alive.any():
        if steps >= budget:
            censored |= alive
            break
        # 整批抽取, 同一 RngSpec 下不同 b 的路径在离开 (a, b) 之前逐位相同
        dW = gen.standard_normal((size, n)) * sqrt_dt
        U = gen.random((size, 2))
        idx = np.flatnonzero(alive)
        steps += 1
        x_new = step(manifold, V, x[idx], dW[idx], dt)
        inside = np.asarray(manifold.contains(x_new), dtype=bool)
        r_new = np.full(idx.size, np.inf)
        if inside.any():
            r_new[inside] = manifold.distance(p, x_new[inside])
        r_old = r[idx]
        with np.errstate(over="ignore", invalid="ignore"):
            p_a = np.where(r_new > a, np.exp(-(r_old - a) * (r_new - a) / dt), 1.0)
            p_b = np.where(r_new < b, np.exp(-(b - r_old) * (b - r_new) / dt), 1.0)
        cross_a = (r_new <= a) | (U[idx, 0] < p_a)
        cross_b = (r_new >= b) | (U[idx, 1] < p_b)
        # 同一步内两侧都穿越时按终点更近的一侧计
        both = cross_a & cross_b
        cross_a[both] = (r_new[both] - a) < (b - r_new[both])
        cross_b[both] = ~cross_a[both]
        done = cross_a | cross_b
        hit_a[idx[cross_a]] = True
        alive[idx[done]] = False
        cont = ~done
        x[idx[cont]] = x_new[cont]
        r[idx[cont]] = r_new[cont]
    return hit_a, censored


def hitting_probability(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    a: float,
    b: float,
    r_start: float,
    n_paths: int,
    master_seed: int,
    dt: float = 1e-3,
    p: Optional[np.ndarray] = None,
    direction: Optional[np.ndarray] = None,
    step_budget: Optional[float] = None,
) -> Tuple[McEstimate, float]:
    """
    同 recurrence_probe, 另返回删失 (步数用尽仍未离开 (a, b)) 的路径比例
    """
    _check_annulus(manifold, a, b, r_start)
    p = np.zeros(manifold.dim) if p is None else np.asarray(p, dtype=float)
    x_start = _start_point(manifold, p, r_start, direction)
    budget = get_config().STEP_BUDGET if step_budget is None else step_budget
    hits: List[np.ndarray] = []
    cens: List[np.ndarray] = []
    for stream, size in enumerate(batch_sizes(n_paths)):
        ha, ce = _probe_batch(manifold, V, p, x_start, a, b, dt, size,
                              RngSpec(master_seed=master_seed, stream_id=stream), budget)
        hits.append(ha)
        cens.append(ce)
    hit_a = np.concatenate(hits)
    censored = np.concatenate(cens)
    frac = float(censored.mean())
    finished = ~censored
    if not finished.any():
        raise ChartDomainError("every path was censored; raise the step budget", param="step_budget")
    estimate = McEstimate.from_samples(hit_a[finished].astype(float))
    if frac > get_config().CENSOR_CAP:
        push_warning(f"⚠️ {frac:.2%} of paths hit the step budget before leaving ({a:g}, {b:g})")
    return estimate, frac


def recurrence_probe(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    a: float,
    b: float,
    r_start: float,
    n_paths: int,
    master_seed: int,
    dt: float = 1e-3,
    p: Optional[np.ndarray] = None,
    direction: Optional[np.ndarray] = None,
    step_budget: Optional[float] = None,
) -> McEstimate:
    """
    估计 P(先到达 r = a 再到达 r = b)

    Args:
        a, b: 内外半径, 0 < a < r_start < b < 割迹半径
        r_start: 起点到 p 的距离, 起点取在 direction 方向 (默认第一坐标轴) 的测地线上
        step_budget: 每条路径的步数上限, 用尽后仍未离开的路径记为删失

    Returns:
        未删失路径上的首达概率估计
    """
    estimate, frac = hitting_probability(
        manifold, V, a, b, r_start, n_paths, master_seed, dt, p, direction, step_budget
    )
    app_log(f"🔍 P(hit {a:g} before {b:g}) = {estimate.mean:.4f} ± {estimate.stderr:.4f} (censored {frac:.2%})")
    return estimate


def classify_scale_increments(probabilities: Sequence[float]) -> Tuple[str, List[float], Optional[float]]:
    """
    S_b = 1/(1 − P_b) 在 b 倍增时的增量: 增量几何平均比 ≥ 0.75 视为递归 (S_b → ∞),
    否则为暂留; 出现非正增量时无法判断
    """
    S = [1.0 / (1.0 - P) if P < 1.0 else math.inf for P in probabilities]
    increments, ratio = increment_ratio(S)
    if ratio is None:
        return "inconclusive", increments, None
    return ("recurrent" if ratio >= RECURRENT_RATIO else "transient"), increments, ratio


def increment_ratio(values: Sequence[float]) -> Tuple[List[float], Optional[float]]:
    """相邻增量之比的几何平均; 增量不全为正且有限时比值为 None"""
    increments = [float(v2 - v1) for v1, v2 in zip(values, values[1:])]
    if len(increments) < 2 or any(not (d > 0) or not math.isfinite(d) for d in increments):
        return increments, None
    ratios = [d2 / d1 for d1, d2 in zip(increments, increments[1:])]
    return increments, float(math.exp(np.mean(np.log(ratios))))


def recurrence_scan(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    a: float,
    r_start: float,
    b0: float,
    k_max: int,
    n_paths: int,
    master_seed: int,
    dt: float = 1e-3,
    p: Optional[np.ndarray] = None,
    direction: Optional[np.ndarray] = None,
    step_budget: Optional[float] = None,
) -> RecurrenceClass:
    """
    对 b = b0·2^k (k = 0..k_max) 估计 P_b 并判别递归性

    各 b 使用同一组随机流, P_b 关于 b 单调, 增量的噪声远小于独立抽样。
    """
    if k_max < 2:
        raise InputError("recurrence_scan needs k_max >= 2", param="k_max")
    b_values = [b0 * 2.0**k for k in range(k_max + 1)]
    estimates, censored = [], []
    for b in b_values:
        est, frac = hitting_probability(
            manifold, V, a, b, r_start, n_paths, master_seed, dt, p, direction, step_budget
        )
        estimates.append(est)
        censored.append(frac)
    label, increments, ratio = classify_scale_increments([e.mean for e in estimates])
    if max(censored) > get_config().CENSOR_CAP:
        label = "inconclusive"
    app_log(f"✅ recurrence scan over b = {b_values}: {label} (ratio {ratio})")
    return RecurrenceClass(
        classification=label,
        b_values=b_values,
        probabilities=estimates,
        scale_increments=increments,
        ratio=ratio,
        censored_fraction=max(censored),
    )


def scale_function_probability(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    a: float,
    b: float,
    r_start: float,
    p: Optional[np.ndarray] = None,
    direction: Optional[np.ndarray] = None,
    n_grid: int = 4001,
) -> float:
    """
    径向一维扩散 dr = √2 dβ + Δ_V r dt 的两边界首达概率
    (s(b) − s(r_start))/(s(b) − s(a)), s'(r) = exp(−∫_a^r Δ_V r)

    只在 Δ_V r 沿各方向相同 (旋转对称的模型与漂移) 时等于 recurrence_probe 的极限。
    """
    _check_annulus(manifold, a, b, r_start)
    p = np.zeros(manifold.dim) if p is None else np.asarray(p, dtype=float)
    if direction is None:
        direction = np.eye(manifold.dim)[0]
    u = manifold.unit_direction(p, np.asarray(direction, dtype=float))
    half = max(3, n_grid // 2)
    grid = np.concatenate([np.linspace(a, r_start, half), np.linspace(r_start, b, half)[1:]])
    lap = np.asarray(RadialFunctional(manifold, V, p).generator(manifold.geodesic(p, u, grid)), dtype=float)
    log_sprime = -cumulative_simpson(lap, x=grid, initial=0.0)
    s = cumulative_simpson(np.exp(log_sprime), x=grid, initial=0.0)
    s_start = s[half - 1]
    return float((s[-1] - s_start) / s[-1])
