"""
梯度估计 sup_{B_a}|du|² ≤ C(m_u(2a)+1)² 的数值检验与增长类型判别
"""

import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from SimpleLLMFunc.logger import app_log

from bochner.maps import energy_density
from bochner.schemas import SmoothMapSpec
from common.errors import InputError, PreconditionError
from common.stats import McEstimate, VerdictStatus, combine_status
from comparison.schemas import ConditionId
from diffusion.bounds import WitnessLike, require_witness
from diffusion.schemas import DiffusionReport
from geometry import DriftField, EffectiveDimension, ManifoldModel, curvature_sampling
from .schemas import GrowthClass, GrowthProfile, MapGrid

DOUBLING_SLACK = 1.2
GROWTH_SLOPE = 0.9
BOUNDED_RATIO = 1.01
CURVATURE_SAMPLES = 500

MapSource = Union[MapGrid, SmoothMapSpec]


def require_nonnegative_curvature(
    manifold: ManifoldModel, V: Optional[DriftField], m: EffectiveDimension, radius: float, seed: int = 0
) -> None:
    """Ric_V^m ≥ 0 的采样前提, 不满足时报 PreconditionError"""
    V = DriftField.zero(manifold.dim) if V is None else V
    sample = curvature_sampling(manifold, V, m, CURVATURE_SAMPLES, radius, np.random.default_rng(seed))
    if not sample.nonnegative:
        raise PreconditionError(
            f"Ric_V^m sampling found {sample.min_ratio:.3e} < 0 at {sample.argmin_point}", param="m"
        )


def _ball_samples(manifold: ManifoldModel, radius: float, n_samples: int, seed: int) -> np.ndarray:
    """球内随机点加球面上的确定性方向, 用于 sup 的采样近似"""
    rng = np.random.default_rng(seed)
    inner = manifold.sample_points(rng, n_samples, radius)
    origin = np.zeros(manifold.dim)
    z = rng.standard_normal((n_samples, manifold.dim))
    sphere = manifold.geodesic(origin, z / manifold.norm(origin, z)[:, None], radius)
    return np.concatenate([origin[None, :], inner, sphere], axis=0)


def _map_m_u(u: SmoothMapSpec, a: float, o: np.ndarray, n_samples: int, seed: int) -> float:
    points = _ball_samples(u.domain, a, n_samples, seed)
    return float(np.max(u.target.distance(o, u.evaluate(points))))


def gradient_ratio(u: MapSource, a: float, o: Optional[np.ndarray] = None, n_samples: int = 2000, seed: int = 0) -> Tuple[float, float, float]:
    """
    (sup_{B_a}|du|², m_u(2a), ρ(a)), ρ(a) = sup|du|²/(m_u(2a)+1)²

    MapGrid 的半径应为 2a; SmoothMapSpec 用球内采样近似 sup。
    """
    o = np.zeros(u.target.dim) if o is None else np.asarray(o, dtype=float)
    if isinstance(u, MapGrid):
        if u.radius < 2 * a * (1 - 1e-9):
            raise InputError(f"grid of radius {u.radius:g} does not cover B_{2 * a:g}", param="a")
        dist = u.domain.distance(u.center, u.nodes)
        density = u.energy_density()[dist <= a + 1e-12]
        sup_du = float(np.max(density)) if density.size else 0.0
        m_2a = u.m_u(o, 2 * a)
    else:
        points = _ball_samples(u.domain, a, n_samples, seed)
        sup_du = float(np.max(energy_density(u, points)))
        m_2a = _map_m_u(u, 2 * a, o, n_samples, seed)
    return sup_du, m_2a, sup_du / (m_2a + 1.0) ** 2


def gradient_estimate_check(
    u: Union[MapSource, Sequence[MapGrid]],
    V: Optional[DriftField],
    m: EffectiveDimension,
    a_values: Sequence[float],
    witness: WitnessLike,
    o: Optional[np.ndarray] = None,
    n_samples: int = 2000,
    seed: int = 0,
) -> DiffusionReport:
    """
    ρ(a) 在倍增序列 a_values 上有界

    Args:
        u: SmoothMapSpec, 或与 a_values 一一对应、半径为 2a 的 MapGrid 列表
        witness: (B3) 的见证常数或审计报告

    Returns:
        每个 a 一行 (statistic="rho"), bound 为拟合常数 C = max ρ;
        相邻两项 ρ(a_{k+1}) ≤ 1.2·ρ(a_k) 时为 pass

    Raises:
        PreconditionError: Ric_V^m 采样为负、缺少 (B3) 见证, 或网格未求解
    """
    require_witness(witness, ConditionId.B3)
    if len(a_values) < 2:
        raise InputError("need at least two radii", param="a_values")
    if isinstance(u, (MapGrid, SmoothMapSpec)):
        sources = [u] * len(a_values)
    else:
        sources = list(u)
        if len(sources) != len(a_values):
            raise InputError("one grid per radius is required", param="u")
    domain = sources[0].domain
    require_nonnegative_curvature(domain, V, m, 2 * max(a_values), seed)
    for grid in sources:
        if isinstance(grid, MapGrid) and not grid.converged:
            raise PreconditionError(
                f"map on B_{grid.radius:g} is not solved (residual {grid.residual:.3e})", param="u"
            )

    rows = [gradient_ratio(src, a, o, n_samples, seed) for src, a in zip(sources, a_values)]
    rho = [r[2] for r in rows]
    C = max(rho)
    report = DiffusionReport(name="gradient_estimate", status=VerdictStatus.PASS)
    statuses: List[VerdictStatus] = []
    for idx, (a, (sup_du, m_2a, r)) in enumerate(zip(a_values, rows)):
        prev = rho[idx - 1] if idx else r
        ok = r <= DOUBLING_SLACK * prev + 1e-12
        status = VerdictStatus.PASS if ok else VerdictStatus.FAIL
        statuses.append(status)
        report.add(float(a), "rho", McEstimate(mean=r, stderr=0.0, n_samples=1), C, status)
    report.status = combine_status(statuses)
    report.note = f"fitted C = {C:.6g}; m_u(2a) = {[round(r[1], 6) for r in rows]}"
    app_log(f"🔍 gradient estimate rho(a) = {[f'{r:.4g}' for r in rho]}, C = {C:.4g}")
    return report


def _loglog_slope(x: np.ndarray, y: np.ndarray) -> float:
    if np.any(y <= 0):
        return math.inf
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def classify_growth(
    u: Union[MapSource, Sequence[float]],
    radii: Sequence[float],
    o: Optional[np.ndarray] = None,
    n_samples: int = 2000,
    seed: int = 0,
) -> GrowthProfile:
    """
    由 m_u(a) 判别增长类型

    u 可以是 MapGrid (半径须覆盖 max radii)、SmoothMapSpec, 或直接给出的 m_u 序列。
    取后半段半径, 分别对 a、√a、√log(1+a²) 做 log-log 拟合:
    斜率 < 0.9 即视为 o(包络)。后半段的相对增长不超过 1% 时为 bounded。

    Raises:
        InputError: 半径少于 4 个、不递增, 或给定的 m_u 序列递减
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size < 4:
        raise InputError("classify_growth needs at least 4 radii", param="radii")
    if np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise InputError("radii must be positive and increasing", param="radii")

    if isinstance(u, MapGrid):
        if u.radius < radii[-1] * (1 - 1e-9):
            raise InputError(f"grid of radius {u.radius:g} does not cover a = {radii[-1]:g}", param="radii")
        values = np.array([u.m_u(o, a) for a in radii])
    elif isinstance(u, SmoothMapSpec):
        o = np.zeros(u.target.dim) if o is None else np.asarray(o, dtype=float)
        values = np.maximum.accumulate([_map_m_u(u, a, o, n_samples, seed) for a in radii])
    else:
        values = np.asarray(u, dtype=float)
        if values.shape != radii.shape:
            raise InputError("m_u values must match the radii", param="u")
        if np.any(np.diff(values) < -1e-12 * np.maximum(1.0, np.abs(values[:-1]))):
            raise InputError("m_u must be nondecreasing in the radius", param="u")

    tail = slice(radii.size - max(3, math.ceil(radii.size / 2)), None)
    a_tail, m_tail = radii[tail], values[tail]
    slopes = {
        "a": _loglog_slope(a_tail, m_tail),
        "sqrt_a": _loglog_slope(np.sqrt(a_tail), m_tail),
        "sqrt_log_a": _loglog_slope(np.sqrt(np.log1p(a_tail**2)), m_tail),
    }
    if m_tail[-1] <= BOUNDED_RATIO * m_tail[0] + 1e-12:
        label = GrowthClass.BOUNDED
    elif slopes["sqrt_log_a"] < GROWTH_SLOPE:
        label = GrowthClass.G3
    elif slopes["sqrt_a"] < GROWTH_SLOPE:
        label = GrowthClass.G2
    elif slopes["a"] < GROWTH_SLOPE:
        label = GrowthClass.G1
    else:
        label = GrowthClass.SUPERLINEAR
    return GrowthProfile(
        radii=radii.tolist(),
        m_u=values.tolist(),
        growth_class=label,
        slopes={k: (v if math.isfinite(v) else None) for k, v in slopes.items()},
    )
