"""
几何层的公开运算: Christoffel 符号、Ricci 张量、加权 Ricci 曲率 Ric_V^m、
V-Laplace 算子与协变 Hessian
"""

from typing import Callable, Optional, Union

import numpy as np

from common.errors import InvalidConfigurationError
from .DriftField import DriftField
from .expression import CallableField, ExpressionField, ScalarField
from .ManifoldModel import ManifoldModel
from .schemas import CurvatureSample, EffectiveDimension

FieldLike = Union[ScalarField, str, Callable[[np.ndarray], np.ndarray]]


def as_scalar_field(f: FieldLike, dim: int) -> ScalarField:
    if isinstance(f, ScalarField):
        return f
    if isinstance(f, str):
        return ExpressionField(f, dim)
    return CallableField(f, dim)


def christoffel(manifold: ManifoldModel, x: np.ndarray) -> np.ndarray:
    """Γ^k_ij(x), 形状 (..., k, i, j)"""
    return manifold.christoffel(manifold.check_point(x))


def ricci(manifold: ManifoldModel, x: np.ndarray) -> np.ndarray:
    return manifold.ricci(manifold.check_point(x))


def covariant_derivative(manifold: ManifoldModel, V: DriftField, x: np.ndarray) -> np.ndarray:
    """(∇_j V)^i = ∂_j V^i + Γ^i_jk V^k, 形状 (..., i, j)"""
    gamma = manifold.christoffel(x)
    return V.jacobian(x) + np.einsum("...ijk,...k->...ij", gamma, V.vector_at(x))


def _check_dimension(V: DriftField, m: EffectiveDimension) -> None:
    if m.equals_dim() and not V.is_zero:
        raise InvalidConfigurationError(
            "m = n requires V to vanish identically", param="m"
        )


def weighted_ricci_tensor(
    manifold: ManifoldModel, V: DriftField, m: EffectiveDimension, x: np.ndarray
) -> np.ndarray:
    """
    Ric_V^m = Ric + ½ L_V g − V♭⊗V♭/(m−n) 的坐标分量

    Lie 导数项 (L_V g)_ij = g(∇_i V, ∂_j) + g(∇_j V, ∂_i); m=±∞ 时修正项精确为 0。
    """
    _check_dimension(V, m)
    x = manifold.check_point(x)
    g = manifold.metric(x)
    lowered = np.einsum("...il,...lj->...ij", g, covariant_derivative(manifold, V, x))
    half_lie = 0.5 * (lowered + np.swapaxes(lowered, -1, -2))
    tensor = manifold.ricci(x) + half_lie
    coeff = m.correction_coefficient()
    if coeff != 0.0:
        flat = np.einsum("...ij,...j->...i", g, V.vector_at(x))
        tensor = tensor - coeff * np.einsum("...i,...j->...ij", flat, flat)
    return tensor


def weighted_ricci(
    manifold: ManifoldModel,
    V: DriftField,
    m: EffectiveDimension,
    x: np.ndarray,
    v: np.ndarray,
) -> Union[float, np.ndarray]:
    """
    Ric_V^m(v, v)

    v = 0 时返回 0 (二次型)。x, v 可以带前导批量维。
    """
    v = np.asarray(v, dtype=float)
    tensor = weighted_ricci_tensor(manifold, V, m, x)
    value = np.einsum("...i,...ij,...j->...", v, tensor, v)
    value = np.where(np.all(v == 0.0, axis=-1), 0.0, value)
    return float(value) if np.ndim(value) == 0 else value


def hessian_scalar(manifold: ManifoldModel, f: FieldLike, x: np.ndarray) -> np.ndarray:
    """协变 Hessian ∂_ij f − Γ^k_ij ∂_k f"""
    field = as_scalar_field(f, manifold.dim)
    x = manifold.check_point(x)
    return field.hessian(x) - np.einsum("...kij,...k->...ij", manifold.christoffel(x), field.gradient(x))


def laplacian_V(
    manifold: ManifoldModel,
    V: Optional[DriftField],
    f: FieldLike,
    x: np.ndarray,
) -> Union[float, np.ndarray]:
    """
    Δ_V f = Δf − ⟨V, ∇f⟩

    Args:
        manifold: 模型流形
        V: 漂移场, None 视为 0
        f: 标量场 (表达式字符串、ScalarField 或向量化函数)
        x: 坐标点, 可带批量维

    Returns:
        标量或数组
    """
    field = as_scalar_field(f, manifold.dim)
    x = manifold.check_point(x)
    hess = hessian_scalar(manifold, field, x)
    value = np.einsum("...ij,...ij->...", manifold.inverse_metric(x), hess)
    if V is not None and not V.is_zero:
        value = value - np.einsum("...k,...k->...", V.vector_at(x), field.gradient(x))
    return float(value) if np.ndim(value) == 0 else value


def curvature_sampling(
    manifold: ManifoldModel,
    V: DriftField,
    m: EffectiveDimension,
    n_samples: int,
    radius: float,
    rng: np.random.Generator,
    tol: float = 1e-10,
) -> CurvatureSample:
    """在测地球 B_radius(0) 内随机采样 (x, v), 返回 Ric_V^m(v,v)/|v|² 的最小值"""
    x = manifold.sample_points(rng, n_samples, radius)
    v = rng.standard_normal((n_samples, manifold.dim))
    values = np.asarray(weighted_ricci(manifold, V, m, x, v))
    ratios = values / manifold.inner(x, v, v)
    i = int(np.argmin(ratios))
    return CurvatureSample(
        min_ratio=float(ratios[i]),
        n_samples=n_samples,
        radius=radius,
        argmin_point=[float(c) for c in x[i]],
        nonnegative=bool(ratios[i] >= -tol),
    )


def example_potential(n: int, m: float) -> str:
    """f = c·log(c + |x|²), c = n − m > 0"""
    c = float(n) - float(m)
    if c <= 0:
        raise InvalidConfigurationError("example potential needs n - m > 0", param="m")
    return f"{c!r}*log({c!r}+|x|^2)"


def closed_form_weighted_ricci(
    x: np.ndarray, v: np.ndarray, c: float, m: EffectiveDimension
) -> np.ndarray:
    """
    欧氏空间上 f = c·log(c+|x|²) 的 Ric_f^m(v,v) 精确值

    Hess f(v,v) = 2c((c+|x|²)|v|² − 2⟨x,v⟩²)/(c+|x|²)², ⟨∇f,v⟩ = 2c⟨x,v⟩/(c+|x|²)。
    当 c = n − m 时化简为 2c|v|²/(c+|x|²)。
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    s = c + np.sum(x * x, axis=-1)
    xv = np.sum(x * v, axis=-1)
    vv = np.sum(v * v, axis=-1)
    hess = 2.0 * c * (s * vv - 2.0 * xv**2) / s**2
    drift = 2.0 * c * xv / s
    return hess - m.correction_coefficient() * drift**2
