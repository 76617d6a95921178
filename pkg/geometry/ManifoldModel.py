"""
ManifoldModel 基类

一个 ManifoldModel 是单一坐标卡上的 (M, g): 度量场、Christoffel 符号、Ricci 张量、
解析距离与测地线。所有方法都作用在形状 (..., n) 的坐标点上, 不持有可变状态。
"""

from abc import ABC, abstractmethod
import math
from typing import Optional

import numpy as np

from common.errors import ChartDomainError, DegenerateMetricError
from .schemas import ManifoldKind


class ManifoldModel(ABC):
    """单卡模型流形的抽象基类"""

    kind: ManifoldKind

    def __init__(self, dim: int, kappa: float = 0.0):
        self.dim = int(dim)
        self.kappa = float(kappa)

    # ==================== 度量 ====================

    @abstractmethod
    def metric(self, x: np.ndarray) -> np.ndarray:
        """度量矩阵 g_ij, 形状 (..., n, n)"""

    def metric_at(self, x: np.ndarray) -> np.ndarray:
        return self.metric(self.check_point(x))

    def inverse_metric(self, x: np.ndarray) -> np.ndarray:
        g = self.metric(x)
        det = np.linalg.det(g)
        if np.any(~np.isfinite(det)) or np.any(np.abs(det) < 1e-300):
            raise DegenerateMetricError("metric is not invertible at the given point", param="x")
        return np.linalg.inv(g)

    def inner(self, x: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.einsum("...i,...ij,...j->...", u, self.metric(x), v)

    def norm(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.sqrt(np.maximum(self.inner(x, v, v), 0.0))

    def volume_density(self, x: np.ndarray) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.metric(x)))

    # ==================== 联络与曲率 ====================

    @abstractmethod
    def christoffel(self, x: np.ndarray) -> np.ndarray:
        """Γ^k_ij, 形状 (..., k, i, j), 关于 (i, j) 对称"""

    @abstractmethod
    def ricci(self, x: np.ndarray) -> np.ndarray:
        """Ricci 张量的坐标分量, 形状 (..., n, n)"""

    def contracted_christoffel(self, x: np.ndarray) -> np.ndarray:
        """g^{ij} Γ^k_ij"""
        return np.einsum("...ij,...kij->...k", self.inverse_metric(x), self.christoffel(x))

    def diffusion_coefficient(self, x: np.ndarray) -> np.ndarray:
        """σ(x) 满足 σσᵀ = g^{-1}; 默认取批量 Cholesky 分解"""
        return np.linalg.cholesky(self.inverse_metric(x))

    # ==================== 距离与测地线 ====================

    @property
    @abstractmethod
    def cut_locus_radius(self) -> float:
        """割迹半径: Hadamard 型为 ∞, 球面为 π/√κ"""

    @property
    def sectional_bound(self) -> Optional[float]:
        return None

    @property
    def is_hadamard(self) -> bool:
        return math.isinf(self.cut_locus_radius)

    @abstractmethod
    def distance(self, p: np.ndarray, x: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def exp_map(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def log_map(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        pass

    def geodesic(self, p: np.ndarray, direction: np.ndarray, r) -> np.ndarray:
        """
        单位速度测地线 γ(r) = exp_p(r·u)

        Args:
            p: 起点
            direction: p 处 g-单位切向量 u
            r: 弧长, 标量或数组 (在前导维上广播)
        """
        r = np.asarray(r, dtype=float)
        return self.exp_map(p, r[..., None] * np.asarray(direction, dtype=float))

    def radial_gradient(self, p: np.ndarray, x: np.ndarray) -> np.ndarray:
        """∇r_p(x) = −log_x(p)/d(p,x) (逆变分量)"""
        d = self.distance(p, x)
        log = self.log_map(x, np.broadcast_to(p, np.shape(x)))
        with np.errstate(divide="ignore", invalid="ignore"):
            return -log / d[..., None]

    @abstractmethod
    def radial_laplacian(self, p: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Δ r_p(x), x 不在割迹上且 x ≠ p"""

    def chart_radius(self, r: float) -> float:
        """以坐标原点为心、测地半径 r 的球在坐标中的半径"""
        e1 = np.zeros(self.dim)
        e1[0] = 1.0
        origin = np.zeros(self.dim)
        u = e1 / float(self.norm(origin, e1))
        return float(np.linalg.norm(self.geodesic(origin, u, r)))

    def unit_direction(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        return v / self.norm(p, v)[..., None]

    # ==================== 坐标域 ====================

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all(np.isfinite(x), axis=-1)

    def check_point(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ChartDomainError(
                f"expected points of dimension {self.dim}, got shape {x.shape}", param="x"
            )
        if not np.all(self.contains(x)):
            raise ChartDomainError("point outside the chart domain", param="x")
        return x

    def sample_points(self, rng: np.random.Generator, n_samples: int, radius: float) -> np.ndarray:
        """在以原点为心、测地半径 radius 的球内确定性采样"""
        z = rng.standard_normal((n_samples, self.dim))
        z /= np.linalg.norm(z, axis=-1, keepdims=True)
        s = radius * rng.random(n_samples) ** (1.0 / self.dim)
        origin = np.zeros(self.dim)
        u = z / self.norm(origin, z)[..., None]
        return self.geodesic(origin, u, s)

    # ==================== 共形结构 ====================

    @property
    def is_conformal(self) -> bool:
        return False

    def conformal_factor(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{self.kind.value} model is not conformally flat in its chart")

    def describe(self) -> str:
        return f"{self.kind.value}(n={self.dim}, kappa={self.kappa:g})"

    def __repr__(self) -> str:
        return self.describe()
