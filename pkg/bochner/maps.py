"""
映射的微分几何量: du, |du|², 第二基本形式 ∇du, 张力场 τ(u) 与 τ_V(u)

全部在坐标卡中计算, 输入点可带批量维 (..., n)。
"""

from typing import NamedTuple, Optional

import numpy as np

from common.errors import UnsupportedConfigurationError
from config.config import get_config
from geometry import DriftField, ManifoldKind, ManifoldModel
from .schemas import SmoothMapSpec


class MapDifferential(NamedTuple):
    frame_matrix: np.ndarray  # (..., k, n) du(e_i) 在 N 的正交标架下的分量
    squared_norm: np.ndarray  # (...,) |du|²


def orthonormal_frame(manifold: ManifoldModel, x: np.ndarray) -> np.ndarray:
    """
    按坐标基顺序做 Gram–Schmidt 得到的 g-正交标架, 列向量为 e_i

    g = LLᵀ 时标架为 L^{-T} (上三角, 对角元为正), 满足 EᵀgE = I。
    """
    L = np.linalg.cholesky(manifold.metric(x))
    eye = np.broadcast_to(np.eye(manifold.dim), L.shape)
    return np.swapaxes(np.linalg.solve(L, eye), -1, -2)


def target_curvature(target: ManifoldModel) -> float:
    """常曲率目标的截面曲率; 其他目标不支持"""
    if target.kind not in (ManifoldKind.EUCLIDEAN, ManifoldKind.HYPERBOLIC, ManifoldKind.SPHERE):
        raise UnsupportedConfigurationError(
            f"target curvature is only available for constant-curvature models, got {target.describe()}",
            param="target",
        )
    return float(target.kappa)


def pullback_gram(u: SmoothMapSpec, x: np.ndarray, J: Optional[np.ndarray] = None) -> np.ndarray:
    """P = Jᵀ h(u) J g⁻¹, tr P = |du|², tr P² = Σ⟨du e_i, du e_j⟩²"""
    J = u.jacobian(x) if J is None else J
    hN = u.target.metric(u.evaluate(x))
    return np.einsum("...ai,...ab,...bj,...jk->...ik", J, hN, J, u.domain.inverse_metric(x))


def energy_density(u: SmoothMapSpec, x: np.ndarray, h: Optional[float] = None) -> np.ndarray:
    """|du|² = g^{ij} h_αβ ∂_i u^α ∂_j u^β"""
    J = u.jacobian(x, h)
    return np.trace(pullback_gram(u, x, J), axis1=-2, axis2=-1)


def map_differential(u: SmoothMapSpec, x: np.ndarray) -> MapDifferential:
    """
    du 在正交标架下的矩阵与 |du|²

    没有精确导数时 Jacobian 用步长 MAP_FD_STEP 的中心差分。

    Raises:
        ChartDomainError: x 不在定义域坐标卡内, 或像点不在目标坐标卡内
    """
    x = u.domain.check_point(x)
    y = u.evaluate(x)
    J = u.jacobian(x, None if u.has_exact_derivatives else get_config().MAP_FD_STEP)
    E_M = orthonormal_frame(u.domain, x)
    E_N = orthonormal_frame(u.target, y)
    # du(e_i) 在 N 的标架中的系数: E_N^{-1} J E_M
    matrix = np.linalg.solve(E_N, J @ E_M)
    return MapDifferential(frame_matrix=matrix, squared_norm=np.sum(matrix**2, axis=(-2, -1)))


def second_fundamental_form(u: SmoothMapSpec, x: np.ndarray, h: Optional[float] = None) -> np.ndarray:
    """
    (∇du)^γ_ij = ∂_ij u^γ − Γ^l_ij(M) ∂_l u^γ + Γ^γ_αβ(N)(u) ∂_i u^α ∂_j u^β

    Returns:
        形状 (..., k, n, n)
    """
    y = u.evaluate(x)
    J = u.jacobian(x, h)
    H = u.hessian(x, h)
    gamma_M = u.domain.christoffel(x)
    gamma_N = u.target.christoffel(y)
    return (
        H
        - np.einsum("...lij,...gl->...gij", gamma_M, J)
        + np.einsum("...gab,...ai,...bj->...gij", gamma_N, J, J)
    )


def hessian_norm_squared(u: SmoothMapSpec, x: np.ndarray, h: Optional[float] = None) -> np.ndarray:
    B = second_fundamental_form(u, x, h)
    ginv = u.domain.inverse_metric(x)
    hN = u.target.metric(u.evaluate(x))
    return np.einsum("...ia,...jb,...gd,...gij,...dab->...", ginv, ginv, hN, B, B)


def tension_field(u: SmoothMapSpec, V: Optional[DriftField], x: np.ndarray, h: Optional[float] = None) -> np.ndarray:
    """τ_V(u) = g^{ij}(∇du)_ij − du(V), 目标坐标卡中的分量 (..., k)"""
    tau = np.einsum("...ij,...gij->...g", u.domain.inverse_metric(x), second_fundamental_form(u, x, h))
    if V is not None and not V.is_zero:
        tau = tau - np.einsum("...gi,...i->...g", u.jacobian(x, h), V.vector_at(x))
    return tau


def tension_sup_norm(u: SmoothMapSpec, V: Optional[DriftField], points: np.ndarray) -> float:
    """测试点上 |τ_V(u)|_h 的最大值"""
    points = u.domain.check_point(points)
    tau = tension_field(u, V, points)
    return float(np.max(u.target.norm(u.evaluate(points), tau)))


def is_v_harmonic(u: SmoothMapSpec, V: Optional[DriftField], points: np.ndarray, tol: float = 1e-6) -> bool:
    return tension_sup_norm(u, V, points) < tol


def drift_image_squared(u: SmoothMapSpec, V: Optional[DriftField], x: np.ndarray) -> np.ndarray:
    """|du(V)|²_h"""
    if V is None or V.is_zero:
        return np.zeros(np.shape(x)[:-1])
    duV = np.einsum("...gi,...i->...g", u.jacobian(x), V.vector_at(x))
    return u.target.norm(u.evaluate(x), duV) ** 2
