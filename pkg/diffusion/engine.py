"""
Δ_V-扩散的坐标卡 Euler–Maruyama 模拟

坐标卡中的 Itô 方程
    dX = √2·σ(X) dW + b(X) dt,   σσᵀ = g⁻¹,   b^k = −g^{ij}Γ^k_ij − V^k
的生成元恰为 Δ_V。批量模拟按批次划分随机流: 第 b 批使用 RngSpec(master_seed, b),
批内各路径为该批生成器输出的各行, 因此结果与线程数无关。
"""

import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np
from SimpleLLMFunc.logger import app_log, push_warning

from common.errors import ChartDomainError, InputError
from config.config import get_config
from geometry import DriftField, ManifoldModel, ScalarField, as_scalar_field, laplacian_V
from .schemas import DiffusionPath, EnsembleResult, RngSpec


# ==================== 泛函 ====================


class Functional(ABC):
    """沿路径累计 Itô 量的函数: 取值、生成元 Lf 与 carré du champ |∇f|²"""

    name: str = "functional"

    @abstractmethod
    def value(self, x: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def generator(self, x: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def carre(self, x: np.ndarray) -> np.ndarray:
        pass


class FieldFunctional(Functional):
    def __init__(self, manifold: ManifoldModel, drift: Optional[DriftField], field, name: Optional[str] = None):
        self.manifold = manifold
        self.drift = drift
        self.field: ScalarField = as_scalar_field(field, manifold.dim)
        self.name = name or getattr(self.field, "text", "f")

    def value(self, x):
        return self.field.value(x)

    def generator(self, x):
        return np.asarray(laplacian_V(self.manifold, self.drift, self.field, x))

    def carre(self, x):
        grad = self.field.gradient(x)
        return np.einsum("...i,...ij,...j->...", grad, self.manifold.inverse_metric(x), grad)


class RadialFunctional(Functional):
    """r_p 本身, 生成元为 Δ_V r_p = Δr_p − ⟨V, ∇r_p⟩, |∇r_p| = 1"""

    def __init__(self, manifold: ManifoldModel, drift: Optional[DriftField], p: Optional[np.ndarray] = None):
        self.manifold = manifold
        self.drift = drift
        self.p = np.zeros(manifold.dim) if p is None else np.asarray(p, dtype=float)
        self.name = "r_p"

    def value(self, x):
        return self.manifold.distance(self.p, x)

    def generator(self, x):
        lap = self.manifold.radial_laplacian(self.p, x)
        if self.drift is None or self.drift.is_zero:
            return lap
        return lap - self.manifold.inner(x, self.drift.vector_at(x), self.manifold.radial_gradient(self.p, x))

    def carre(self, x):
        return np.ones(np.shape(x)[:-1])


# ==================== 单步与单条路径 ====================


def drift_term(manifold: ManifoldModel, V: Optional[DriftField], x: np.ndarray) -> np.ndarray:
    """b = −g^{ij}Γ^k_ij − V"""
    b = -manifold.contracted_christoffel(x)
    if V is not None and not V.is_zero:
        b = b - V.vector_at(x)
    return b


def step(manifold: ManifoldModel, V: Optional[DriftField], x: np.ndarray, dW: np.ndarray, dt: float) -> np.ndarray:
    """
    一步 Euler–Maruyama: x + √2·σ(x)dW + b(x)dt

    Args:
        manifold: 模型流形
        V: 漂移场 (None 视为 0)
        x: 坐标点 (..., n)
        dW: 布朗增量 (..., n), 协方差 dt·I
        dt: 步长

    Returns:
        下一个坐标点; 调用方负责检查是否仍在坐标卡内
    """
    if dt <= 0:
        raise InputError(f"dt must be positive, got {dt}", param="dt")
    x = np.asarray(x, dtype=float)
    sigma = manifold.diffusion_coefficient(x)
    noise = np.einsum("...ij,...j->...i", sigma, np.asarray(dW, dtype=float))
    return x + math.sqrt(2.0) * noise + drift_term(manifold, V, x) * dt


def _n_steps(t_end: float, dt: float) -> int:
    if t_end <= 0 or dt <= 0:
        raise InputError("t_end and dt must be positive", param="dt")
    k = int(round(t_end / dt))
    if abs(k * dt - t_end) > 1e-9 * t_end:
        raise InputError(f"t_end={t_end} is not a multiple of dt={dt}", param="dt")
    return k


def simulate(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    x0: np.ndarray,
    t_end: float,
    dt: float,
    rng: RngSpec,
    p: Optional[np.ndarray] = None,
) -> DiffusionPath:
    """单条路径的完整记录; 离开坐标卡时截断并设置 exited 标志"""
    x = manifold.check_point(np.asarray(x0, dtype=float))
    p = np.zeros(manifold.dim) if p is None else np.asarray(p, dtype=float)
    k_steps = _n_steps(t_end, dt)
    gen = rng.generator()
    increments = gen.standard_normal((k_steps, manifold.dim)) * math.sqrt(dt)

    points = [x]
    exited = None
    for k in range(k_steps):
        x_new = step(manifold, V, x, increments[k], dt)
        if not bool(manifold.contains(x_new)):
            exited = (k, "chart")
            push_warning(f"⚠️ path left the chart domain at step {k}; truncating")
            break
        x = x_new
        points.append(x)
    points = np.asarray(points)
    n_kept = len(points)
    return DiffusionPath(
        times=np.arange(n_kept) * dt,
        points=points,
        radial=np.asarray(manifold.distance(p, points)),
        brownian_increments=increments[: n_kept - 1],
        exited=exited,
        local_time_residual=np.zeros(n_kept),
    )


# ==================== 批量模拟 ====================


class _EnsemblePlan:
    def __init__(self, manifold, V, x0, t_end, dt, master_seed, p, observe_times, stop_radius, functionals):
        self.manifold = manifold
        self.V = V
        self.x0 = manifold.check_point(np.asarray(x0, dtype=float))
        self.dt = dt
        self.k_steps = _n_steps(t_end, dt)
        self.master_seed = master_seed
        self.p = np.zeros(manifold.dim) if p is None else np.asarray(p, dtype=float)
        obs = np.asarray([t_end] if observe_times is None else observe_times, dtype=float)
        self.observe_times = obs
        self.observe_steps = np.array([_n_steps(t, dt) if t > 0 else 0 for t in obs], dtype=int)
        if np.any(self.observe_steps > self.k_steps):
            raise InputError("observe times must not exceed t_end", param="observe_times")
        self.stop_radius = stop_radius
        self.functionals: List[Functional] = list(functionals)


def _run_batch(plan: _EnsemblePlan, stream: int, size: int) -> Dict[str, np.ndarray]:
    M, n, dt = plan.manifold, plan.manifold.dim, plan.dt
    gen = RngSpec(master_seed=plan.master_seed, stream_id=stream).generator()
    sqrt_dt = math.sqrt(dt)
    n_obs, n_fun = len(plan.observe_times), len(plan.functionals)

    x = np.broadcast_to(plan.x0, (size, n)).copy()
    r = np.asarray(M.distance(plan.p, x), dtype=float)
    r_max = r.copy()
    alive = np.ones(size, dtype=bool)
    exited = np.zeros(size, dtype=bool)
    truncated = np.zeros(size, dtype=bool)
    exit_times = np.full(size, np.nan)
    f_now = [np.asarray(F.value(x), dtype=float) for F in plan.functionals]
    res = np.zeros((n_fun, size))
    qv = np.zeros((n_fun, size))
    cdc = np.zeros((n_fun, size))

    out = {
        "points": np.empty((n_obs, size, n)),
        "radial": np.empty((n_obs, size)),
        "residual": np.empty((n_fun, n_obs, size)),
        "qv": np.empty((n_fun, n_obs, size)),
        "cdc": np.empty((n_fun, n_obs, size)),
    }

    def snapshot(k: int) -> None:
        for j in np.flatnonzero(plan.observe_steps == k):
            out["points"][j] = x
            out["radial"][j] = r
            out["residual"][:, j] = res
            out["qv"][:, j] = qv
            out["cdc"][:, j] = cdc

    snapshot(0)
    for k in range(plan.k_steps):
        # 整批抽取, 使随机流与存活路径数无关
        dW = gen.standard_normal((size, n)) * sqrt_dt
        idx = np.flatnonzero(alive)
        if idx.size:
            xa = x[idx]
            gens = [F.generator(xa) for F in plan.functionals]
            carres = [F.carre(xa) for F in plan.functionals]
            x_new = step(M, plan.V, xa, dW[idx], dt)
            inside = np.asarray(M.contains(x_new), dtype=bool)
            if not np.all(inside):
                lost = idx[~inside]
                truncated[lost] = True
                alive[lost] = False
            keep = idx[inside]
            x[keep] = x_new[inside]
            for i, F in enumerate(plan.functionals):
                f_new = np.asarray(F.value(x_new[inside]), dtype=float)
                innov = f_new - f_now[i][keep] - gens[i][inside] * dt
                res[i, keep] += innov
                qv[i, keep] += innov**2
                cdc[i, keep] += carres[i][inside] * dt
                f_now[i][keep] = f_new
            r_keep = np.asarray(M.distance(plan.p, x[keep]), dtype=float)
            r[keep] = r_keep
            r_max[keep] = np.maximum(r_max[keep], r_keep)
            if plan.stop_radius is not None:
                gone = keep[r_keep >= plan.stop_radius]
                exited[gone] = True
                exit_times[gone] = (k + 1) * dt
                alive[gone] = False
        snapshot(k + 1)

    out.update(max_radial=r_max, exited=exited, exit_times=exit_times, truncated=truncated)
    return out


def batch_sizes(n_paths: int, batch_size: Optional[int] = None) -> List[int]:
    size = batch_size or get_config().BATCH_SIZE
    full, rest = divmod(n_paths, size)
    return [size] * full + ([rest] if rest else [])


def simulate_ensemble(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    x0: np.ndarray,
    t_end: float,
    dt: float,
    n_paths: int,
    master_seed: int,
    p: Optional[np.ndarray] = None,
    observe_times: Optional[Sequence[float]] = None,
    stop_radius: Optional[float] = None,
    functionals: Sequence[Functional] = (),
    batch_size: Optional[int] = None,
    max_workers: Optional[int] = None,
) -> EnsembleResult:
    """
    批量模拟 n_paths 条从 x0 出发的路径

    Args:
        observe_times: 记录快照的时刻 (dt 的整数倍), 默认只记录 t_end
        stop_radius: 停止球半径; 路径首次满足 r_p ≥ stop_radius 后停止 (X_{t∧τ})
        functionals: 沿路径累计 ∫Lf、残差与二次变差的泛函
        batch_size: 每个随机流的路径数, 默认取配置 BATCH_SIZE
        max_workers: 线程数, 不影响结果

    Returns:
        EnsembleResult, 行顺序为 (批次, 批内行号)
    """
    if n_paths < 1:
        raise InputError("n_paths must be positive", param="n_paths")
    if not bool(manifold.contains(np.asarray(x0, dtype=float))):
        raise ChartDomainError("starting point outside the chart domain", param="x0")
    plan = _EnsemblePlan(manifold, V, x0, t_end, dt, master_seed, p, observe_times, stop_radius, functionals)
    sizes = batch_sizes(n_paths, batch_size)
    workers = max_workers if max_workers is not None else get_config().MAX_WORKERS
    app_log(f"🚀 Simulating {n_paths} paths in {len(sizes)} batches, {plan.k_steps} steps of dt={dt:g}")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda job: _run_batch(plan, job[0], job[1]), enumerate(sizes)))

    def cat(key: str, axis: int) -> np.ndarray:
        return np.concatenate([part[key] for part in parts], axis=axis)

    result = EnsembleResult(
        observe_times=plan.observe_times,
        points=cat("points", 1),
        radial=cat("radial", 1),
        max_radial=cat("max_radial", 0),
        exited=cat("exited", 0),
        exit_times=cat("exit_times", 0),
        truncated=cat("truncated", 0),
        residual=cat("residual", 2),
        quadratic_variation=cat("qv", 2),
        carre_du_champ=cat("cdc", 2),
        dt=dt,
        n_paths=n_paths,
        master_seed=master_seed,
    )
    frac = float(np.mean(result.truncated))
    if frac > 0:
        push_warning(f"⚠️ {frac:.2%} of paths left the chart domain and were truncated")
    return result


def truncated_fraction(result: EnsembleResult) -> float:
    return float(np.mean(result.truncated))

