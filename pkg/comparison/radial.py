"""
沿射线的径向量: f_V, s_p, cot_κ, 比较上界与实测 Δ_V r_p

所有积分沿唯一的单位速度测地线 γ (γ_0 = p) 进行, 半径必须严格小于割迹半径。
"""

import math
from typing import Tuple, Union

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from SimpleLLMFunc.logger import push_warning

from common.errors import ChartDomainError, CutLocusError, InputError, InvalidConfigurationError, PoleError
from config.config import get_config
from geometry import DriftField, EffectiveDimension, ManifoldModel
from geometry.ModelSpaces import cot_kappa_array
from .schemas import ComparisonInput

ArrayLike = Union[float, np.ndarray]


def _panels(r: float) -> int:
    """Simpson 面板数: 每单位半径至少 QUAD_PANELS_PER_UNIT 个, 且为偶数"""
    per_unit = get_config().QUAD_PANELS_PER_UNIT
    n = max(per_unit, int(math.ceil(per_unit * r)))
    return n + (n % 2)


def _check_radius(manifold: ManifoldModel, r: float) -> None:
    if r < 0 or not math.isfinite(r):
        raise InputError(f"radius must be finite and non-negative, got {r}", param="r")
    if r >= manifold.cut_locus_radius:
        raise CutLocusError(
            f"radius {r} reaches the cut locus at {manifold.cut_locus_radius}", param="r"
        )


def _unit(inp: ComparisonInput, direction: np.ndarray) -> np.ndarray:
    return inp.manifold.unit_direction(inp.point(), np.asarray(direction, dtype=float))


def radial_drift_component(inp: ComparisonInput, direction: np.ndarray, t: np.ndarray) -> np.ndarray:
    """⟨V, γ̇_t⟩ 在弧长 t 处的值 (t 可以为数组, t=0 处用初速度)"""
    M, V, p = inp.manifold, inp.drift, inp.point()
    u = _unit(inp, direction)
    t = np.asarray(t, dtype=float)
    if V.is_zero:
        return np.zeros_like(t)
    pts = M.geodesic(p, u, t)
    safe = np.where(t > 0, t, 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        velocity = M.radial_gradient(p, M.geodesic(p, u, safe))
    velocity = np.where((t > 0)[..., None], velocity, u)
    return M.inner(pts, V.vector_at(pts), velocity)


def f_V_profile(inp: ComparisonInput, direction: np.ndarray, r: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    V_γ(t) = ∫_0^t ⟨V, γ̇_s⟩ ds 在 [0, r] 的 Simpson 网格上的累计值

    Returns:
        (t, V_γ(t)) 两个等长数组
    """
    _check_radius(inp.manifold, r)
    t = np.linspace(0.0, r, _panels(r) + 1)
    if r == 0.0 or inp.drift.is_zero:
        return t, np.zeros_like(t)
    integrand = radial_drift_component(inp, direction, t)
    return t, cumulative_simpson(integrand, x=t, initial=0.0)


def f_V_along_ray(inp: ComparisonInput, direction: np.ndarray, r: float) -> float:
    """f_V(γ_r), 即沿射线的漂移径向分量积分"""
    _check_radius(inp.manifold, r)
    if r == 0.0 or inp.drift.is_zero:
        return 0.0
    t = np.linspace(0.0, r, _panels(r) + 1)
    return float(simpson(radial_drift_component(inp, direction, t), x=t))


def _require_finite_gap(m: EffectiveDimension) -> None:
    if m.equals_dim():
        raise InvalidConfigurationError("s_p is undefined for m = n", param="m")


def s_p(inp: ComparisonInput, direction: np.ndarray, r: float) -> float:
    """
    s_p = C_p ∫_0^r exp(−2 V_γ(t)/(n−m)) dt

    m = ±∞ 时指数项恒为 1, s_p = C_p·r。
    """
    _require_finite_gap(inp.m)
    t, fv = f_V_profile(inp, direction, r)
    if r == 0.0:
        return 0.0
    if inp.m.is_infinite:
        return inp.c_p * r
    weight = np.exp(-2.0 * fv / inp.n_minus_m)
    return float(inp.c_p * simpson(weight, x=t))


def cot_kappa(kappa: float, r: float) -> float:
    """
    cot_κ(r) = 𝔰_κ'(r)/𝔰_κ(r)

    Raises:
        PoleError: r = 0
        ChartDomainError: κ > 0 且 r ≥ π/√κ
    """
    if r == 0.0:
        raise PoleError("cot_kappa has a pole at r = 0", param="r")
    if r < 0 or not math.isfinite(r):
        raise InputError(f"cot_kappa needs a positive finite radius, got {r}", param="r")
    if kappa > 0 and r >= math.pi / math.sqrt(kappa):
        raise ChartDomainError(
            f"cot_kappa with kappa={kappa} is only defined for r < {math.pi / math.sqrt(kappa)}",
            param="r",
        )
    if kappa == 0:
        return 1.0 / r
    return float(cot_kappa_array(kappa, r))


def default_c_p(manifold: ManifoldModel, drift: DriftField, m: EffectiveDimension, p=None) -> float:
    """C_p 的默认值: 梯度情形 exp(−2f(p)/(n−m)), 否则 1"""
    if drift.gradient_potential is None or m.is_infinite or m.equals_dim():
        return 1.0
    p = np.zeros(manifold.dim) if p is None else np.asarray(p, dtype=float)
    f_p = float(drift.gradient_potential.value(p))
    return math.exp(-2.0 * f_p / m.n_minus_m())


def classical_comparison_bound(m: Union[EffectiveDimension, float], kappa: float, r: float) -> float:
    """
    经典比较上界 (m−1)·cot_κ(r), m ∈ [n, +∞)

    κ < 0 时即 (m−1)√−κ·coth(√−κ r); κ → 0 时退化为 (m−1)/r。
    """
    if isinstance(m, EffectiveDimension):
        if m.is_infinite or float(m.value) < m.dim:
            raise InvalidConfigurationError(
                f"classical comparison needs finite m >= n, got m={m.label()}", param="m"
            )
        m_value = float(m.value)
    else:
        m_value = float(m)
        if not math.isfinite(m_value) or m_value < 1.0:
            raise InvalidConfigurationError(f"classical comparison needs finite m >= 1, got {m}", param="m")
    return (m_value - 1.0) * cot_kappa(kappa, r)


def laplacian_comparison_bound(inp: ComparisonInput, direction: np.ndarray, r: float) -> float:
    """
    Δ_V r_p 在 γ_r 处的比较上界

    - m ≤ 1: (n−m)·cot_κ(s_p)·exp(−2f_V/(n−m))·C_p
    - 有限 m ≥ n: 经典上界 (m−1)·cot_κ(r)
    - m = ±∞: 无有限维比较, 返回 +∞
    """
    m = inp.m
    if m.is_infinite:
        push_warning(f"⚠️ m={m.label()} has no finite-dimensional comparison bound; returning +inf")
        return math.inf
    if float(m.value) >= m.dim:
        if m.equals_dim() and not inp.drift.is_zero:
            raise InvalidConfigurationError("m = n requires V to vanish identically", param="m")
        _check_radius(inp.manifold, r)
        return classical_comparison_bound(m, inp.kappa, r)
    gap = inp.n_minus_m
    t, fv = f_V_profile(inp, direction, r)
    if r == 0.0:
        raise PoleError("comparison bound has a pole at r = 0", param="r")
    s = float(inp.c_p * simpson(np.exp(-2.0 * fv / gap), x=t))
    return gap * cot_kappa(inp.kappa, s) * math.exp(-2.0 * float(fv[-1]) / gap) * inp.c_p


def measured_laplacian_r(inp: ComparisonInput, direction: np.ndarray, r: ArrayLike) -> ArrayLike:
    """实测 Δ_V r_p(γ_r) = Δr_p − ⟨V, ∇r_p⟩, r 可以为数组"""
    M, V, p = inp.manifold, inp.drift, inp.point()
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise PoleError("Δ_V r_p is singular at the base point", param="r")
    if np.any(r_arr >= M.cut_locus_radius):
        raise CutLocusError("radius reaches the cut locus", param="r")
    u = _unit(inp, direction)
    x = M.geodesic(p, u, r_arr)
    value = M.radial_laplacian(p, x)
    if not V.is_zero:
        value = value - M.inner(x, V.vector_at(x), M.radial_gradient(p, x))
    return float(value) if np.ndim(value) == 0 else np.asarray(value)
