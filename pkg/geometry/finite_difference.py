"""
差分预言机

与解析曲率完全独立的数值管线, 仅作为测试对照: 中心差分加一次 Richardson 外推,
Ricci 由 Christoffel 符号的嵌套差分得到, Laplace 用散度形式
(1/√|g|) ∂_i(√|g| g^{ij} ∂_j f)。所有函数只处理单个坐标点。
"""

from typing import Callable, Optional

import numpy as np

from config.config import get_config
from .ManifoldModel import ManifoldModel

PointFn = Callable[[np.ndarray], np.ndarray]


def central_derivative(fn: PointFn, x: np.ndarray, h: float) -> np.ndarray:
    """
    ∂_m fn(x), 输出形状 fn(x).shape + (n,)

    D(h) = (fn(x+h e_m) − fn(x−h e_m))/(2h), 返回 (4·D(h/2) − D(h))/3。
    """
    x = np.asarray(x, dtype=float)
    eye = np.eye(x.shape[-1])

    def central(step: float) -> np.ndarray:
        cols = [
            (np.asarray(fn(x + step * e), dtype=float) - np.asarray(fn(x - step * e), dtype=float))
            / (2.0 * step)
            for e in eye
        ]
        return np.stack(cols, axis=-1)

    return (4.0 * central(h / 2.0) - central(h)) / 3.0


def second_derivative(fn: PointFn, x: np.ndarray, h: float) -> np.ndarray:
    """∂_ij fn(x), 四点交叉差分加 Richardson"""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    eye = np.eye(n)

    def cross(step: float) -> np.ndarray:
        out = np.zeros(np.shape(fn(x)) + (n, n))
        for i in range(n):
            for j in range(i, n):
                ei, ej = step * eye[i], step * eye[j]
                val = (fn(x + ei + ej) - fn(x + ei - ej) - fn(x - ei + ej) + fn(x - ei - ej)) / (
                    4.0 * step * step
                )
                out[..., i, j] = val
                out[..., j, i] = val
        return out

    return (4.0 * cross(h / 2.0) - cross(h)) / 3.0


def christoffel_fd(manifold: ManifoldModel, x: np.ndarray, h: Optional[float] = None) -> np.ndarray:
    """由度量差分得到的 Γ^k_ij"""
    h = h if h is not None else get_config().FD_STEP
    x = np.asarray(x, dtype=float)
    dg = central_derivative(manifold.metric, x, h)  # dg[i, j, l] = ∂_l g_ij
    lowered = 0.5 * (
        np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg) - np.einsum("ijl->lij", dg)
    )
    ginv = np.linalg.inv(manifold.metric(x))
    return np.einsum("kl,lij->kij", ginv, lowered)


def riemann_fd(
    manifold: ManifoldModel,
    x: np.ndarray,
    h_inner: Optional[float] = None,
    h_outer: Optional[float] = None,
) -> np.ndarray:
    """
    R^ρ_{σμν} = ∂_μΓ^ρ_{νσ} − ∂_νΓ^ρ_{μσ} + Γ^ρ_{μλ}Γ^λ_{νσ} − Γ^ρ_{νλ}Γ^λ_{μσ}

    返回数组下标顺序为 [ρ, σ, μ, ν]。
    """
    config = get_config()
    h_inner = h_inner if h_inner is not None else config.FD_STEP
    h_outer = h_outer if h_outer is not None else config.FD_OUTER_STEP
    x = np.asarray(x, dtype=float)
    G = christoffel_fd(manifold, x, h_inner)
    dG = central_derivative(lambda y: christoffel_fd(manifold, y, h_inner), x, h_outer)
    term1 = np.einsum("rnsm->rsmn", dG)
    term2 = np.einsum("rmsn->rsmn", dG)
    term3 = np.einsum("rml,lns->rsmn", G, G)
    term4 = np.einsum("rnl,lms->rsmn", G, G)
    return term1 - term2 + term3 - term4


def ricci_fd(manifold: ManifoldModel, x: np.ndarray, **steps) -> np.ndarray:
    """Ric_{σν} = R^ρ_{σρν}"""
    R = riemann_fd(manifold, x, **steps)
    ric = np.einsum("rsrn->sn", R)
    return 0.5 * (ric + ric.T)


def hessian_fd(manifold: ManifoldModel, f: PointFn, x: np.ndarray, h: Optional[float] = None) -> np.ndarray:
    """协变 Hessian ∂_ij f − Γ^k_ij ∂_k f, 全部由差分得到"""
    h = h if h is not None else get_config().FD_OUTER_STEP
    x = np.asarray(x, dtype=float)
    d2 = second_derivative(f, x, h)
    d1 = central_derivative(f, x, get_config().FD_STEP)
    G = christoffel_fd(manifold, x)
    return d2 - np.einsum("kij,k->ij", G, d1)


def laplacian_fd(
    manifold: ManifoldModel,
    f: PointFn,
    x: np.ndarray,
    h_inner: Optional[float] = None,
    h_outer: Optional[float] = None,
) -> float:
    """散度形式的 Laplace–Beltrami 算子"""
    config = get_config()
    h_inner = h_inner if h_inner is not None else config.FD_STEP
    h_outer = h_outer if h_outer is not None else config.FD_OUTER_STEP
    x = np.asarray(x, dtype=float)

    def flux(y: np.ndarray) -> np.ndarray:
        g = manifold.metric(y)
        grad = central_derivative(f, y, h_inner)
        return np.sqrt(np.linalg.det(g)) * np.linalg.solve(g, grad)

    div = np.trace(central_derivative(flux, x, h_outer))
    return float(div / np.sqrt(np.linalg.det(manifold.metric(x))))


def laplacian_V_fd(manifold: ManifoldModel, drift, f: PointFn, x: np.ndarray) -> float:
    """Δ_V f = Δf − ⟨V, ∇f⟩ 的差分版本"""
    x = np.asarray(x, dtype=float)
    d1 = central_derivative(f, x, get_config().FD_STEP)
    return laplacian_fd(manifold, f, x) - float(np.dot(drift.vector_at(x), d1))
