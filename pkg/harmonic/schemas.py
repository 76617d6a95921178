"""
调和映射模块的数据模型: 网格解 MapGrid、增长类型 GrowthProfile 与凸规范函数 ConvexGauge
"""

from enum import Enum
import math
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator
from scipy.interpolate import RectBivariateSpline, RegularGridInterpolator
from scipy.spatial import cKDTree

from bochner.schemas import SmoothMapSpec
from common.errors import InputError
from geometry import DriftField, ManifoldKind, ManifoldModel
from .lattice import Lattice, chart_derivatives, target_weight


class MapGrid(BaseModel):
    """
    坐标球格点上的映射 u: B_a(p) → N

    values 为内部节点的目标坐标, boundary_values 为固定的 Dirichlet 数据。
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    domain: ManifoldModel
    target: ManifoldModel
    drift: Optional[DriftField] = None
    radius: float = Field(..., gt=0, description="定义域球的测地半径 a")
    lattice: Lattice
    values: np.ndarray  # (N, k)
    boundary_values: np.ndarray  # (B, k)
    energies: List[float] = Field(default_factory=list)
    residual: float = math.inf
    iterations: int = 0
    converged: bool = False
    projected: bool = False
    regular_center: Optional[List[float]] = None

    _interp: dict = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def check_shapes(self) -> "MapGrid":
        k = self.target.dim
        if self.values.shape != (self.lattice.n_nodes, k):
            raise ValueError(f"values must have shape {(self.lattice.n_nodes, k)}, got {self.values.shape}")
        if self.boundary_values.shape != (len(self.lattice.boundary_points), k):
            raise ValueError("boundary values do not match the boundary points")
        return self

    @property
    def center(self) -> np.ndarray:
        return self.lattice.center

    @property
    def spacing(self) -> float:
        return self.lattice.spacing

    @property
    def nodes(self) -> np.ndarray:
        return self.lattice.nodes

    def all_points(self) -> np.ndarray:
        return np.concatenate([self.lattice.nodes, self.lattice.boundary_points], axis=0)

    def all_values(self) -> np.ndarray:
        return np.concatenate([self.values, self.boundary_values], axis=0)

    def with_values(self, values: np.ndarray) -> "MapGrid":
        """同一网格上的另一组内部取值 (视为未求解)"""
        return MapGrid(
            domain=self.domain,
            target=self.target,
            drift=self.drift,
            radius=self.radius,
            lattice=self.lattice,
            values=np.asarray(values, dtype=float),
            boundary_values=self.boundary_values,
            regular_center=self.regular_center,
        )

    # ==================== 微分量 ====================

    def differential(self) -> np.ndarray:
        """∂_i u^α, 形状 (N, k, n)"""
        return chart_derivatives(self.lattice, self.values, self.boundary_values)

    def energy_density(self) -> np.ndarray:
        """内部节点上的 |du|² = μ⁻² λ²(u) Σ_i |∂_i u|²"""
        J = self.differential()
        mu = self.domain.conformal_factor(self.nodes)
        lam2, _ = target_weight(self.target, self.values)
        return lam2 / mu**2 * np.sum(J**2, axis=(-2, -1))

    def center_energy_density(self) -> float:
        i = self.lattice.center_node()
        if i < 0:
            return float(self.energy_density_at(self.center))
        return float(self.energy_density()[i])

    def m_u(self, o: Optional[np.ndarray] = None, a: Optional[float] = None) -> float:
        """
        m_u(a) = sup_{B_a(p)} d_N(u(x), o)

        a 缺省时取整个网格 (含边界点); o 缺省时取目标坐标原点。
        """
        o = np.zeros(self.target.dim) if o is None else np.asarray(o, dtype=float)
        if a is None or a >= self.radius:
            points = self.all_values()
        else:
            dist = self.domain.distance(self.center, self.nodes)
            points = self.values[dist <= a + 1e-12]
        if len(points) == 0:
            return 0.0
        return float(np.max(self.target.distance(o, points)))

    # ==================== 插值 ====================

    def _full_lattice(self, nodal: np.ndarray, fill_points: np.ndarray, fill_values: np.ndarray) -> np.ndarray:
        K = self.lattice.half_width
        n = self.domain.dim
        shape = (2 * K + 1,) * n
        axis = np.arange(-K, K + 1)
        full_index = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
        points = self.center + self.spacing * full_index
        _, nearest = cKDTree(fill_points).query(points)
        full = fill_values[nearest]
        flat = np.ravel_multi_index(tuple((self.lattice.index + K).T), shape)
        full[flat] = nodal
        return full.reshape(shape + nodal.shape[1:])

    def _interpolator(self, key: str) -> RegularGridInterpolator:
        if key not in self._interp:
            if key == "values":
                full = self._full_lattice(self.values, self.lattice.boundary_points, self.boundary_values)
            else:
                density = self.energy_density()
                full = self._full_lattice(density, self.nodes, density)
            self._interp[key] = RegularGridInterpolator(self.lattice.axes, full, bounds_error=False, fill_value=None)
        return self._interp[key]

    def _clip(self, x: np.ndarray) -> np.ndarray:
        axes = self.lattice.axes
        lo = np.array([a[0] for a in axes])
        hi = np.array([a[-1] for a in axes])
        return np.clip(np.asarray(x, dtype=float), lo, hi)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """
        分片线性插值, 球外格点取最近边界点的值

        Args:
            x: 定义域坐标点 (..., n)

        Returns:
            (..., k)
        """
        x = np.asarray(x, dtype=float)
        out = self._interpolator("values")(self._clip(x).reshape(-1, self.domain.dim))
        return out.reshape(x.shape[:-1] + (self.target.dim,))

    def energy_density_at(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self._interpolator("energy")(self._clip(x).reshape(-1, self.domain.dim))
        return out.reshape(x.shape[:-1])

    def as_map_spec(self) -> SmoothMapSpec:
        """二维定义域上的双三次样条插值, 导数取样条的精确导数"""
        if self.domain.dim != 2:
            raise InputError("spline interpolant needs a 2-D domain", param="domain")
        full = self._full_lattice(self.values, self.lattice.boundary_points, self.boundary_values)
        xs, ys = self.lattice.axes
        splines = [RectBivariateSpline(xs, ys, full[..., c]) for c in range(self.target.dim)]

        def ev(x: np.ndarray, dx: int = 0, dy: int = 0) -> np.ndarray:
            x = np.asarray(x, dtype=float)
            flat = x.reshape(-1, 2)
            cols = [s.ev(flat[:, 0], flat[:, 1], dx=dx, dy=dy) for s in splines]
            return np.stack(cols, axis=-1).reshape(x.shape[:-1] + (len(splines),))

        def jac(x: np.ndarray) -> np.ndarray:
            return np.stack([ev(x, 1, 0), ev(x, 0, 1)], axis=-1)

        def hess(x: np.ndarray) -> np.ndarray:
            dxy = ev(x, 1, 1)
            row0 = np.stack([ev(x, 2, 0), dxy], axis=-1)
            row1 = np.stack([dxy, ev(x, 0, 2)], axis=-1)
            return np.stack([row0, row1], axis=-2)

        return SmoothMapSpec(
            domain=self.domain,
            target=self.target,
            fn=ev,
            exact_jacobian=jac,
            exact_hessian=hess,
            label=f"grid(a={self.radius:g}, h={self.spacing:g})",
        )


class GrowthClass(str, Enum):
    BOUNDED = "bounded"
    G3 = "G3"
    G2 = "G2"
    G1 = "G1"
    SUPERLINEAR = "superlinear"

    def satisfies(self, other: "GrowthClass") -> bool:
        """bounded ⇒ G3 ⇒ G2 ⇒ G1"""
        order = [GrowthClass.BOUNDED, GrowthClass.G3, GrowthClass.G2, GrowthClass.G1, GrowthClass.SUPERLINEAR]
        return order.index(self) <= order.index(other) and other != GrowthClass.SUPERLINEAR


class GrowthProfile(BaseModel):
    radii: List[float]
    m_u: List[float]
    growth_class: GrowthClass
    slopes: dict = Field(default_factory=dict, description="对各包络的 log-log 斜率")

    @model_validator(mode="after")
    def check_monotone(self) -> "GrowthProfile":
        if len(self.radii) != len(self.m_u):
            raise ValueError("radii and m_u must have the same length")
        if any(b < a - 1e-12 * max(1.0, abs(a)) for a, b in zip(self.m_u, self.m_u[1:])):
            raise ValueError("m_u must be nondecreasing in the radius")
        return self


class ConvexGauge(BaseModel):
    """
    φ(y) = 1 − cos(√κ·d_N(y, o))

    在正则球 B_R(o), R < π/(2√κ) 内沿测地线严格凸。
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    kappa: float = Field(..., gt=0, description="目标截面曲率上界 κ")
    o: List[float] = Field(..., description="正则球中心")
    target: ManifoldModel

    @model_validator(mode="after")
    def check_target(self) -> "ConvexGauge":
        if self.target.kind != ManifoldKind.SPHERE or not math.isclose(self.target.kappa, self.kappa):
            raise ValueError(f"gauge kappa={self.kappa:g} is inconsistent with target {self.target.describe()}")
        if len(self.o) != self.target.dim:
            raise ValueError("gauge centre has the wrong dimension")
        return self

    @property
    def regular_radius(self) -> float:
        return math.pi / (2.0 * math.sqrt(self.kappa))

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        d = self.target.distance(np.asarray(self.o), np.asarray(y, dtype=float))
        return 1.0 - np.cos(math.sqrt(self.kappa) * d)

    def __call__(self, y: np.ndarray) -> np.ndarray:
        return self.evaluate(y)

    def fit_convexity(
        self,
        n_geodesics: int = 1000,
        seed: int = 0,
        radius: Optional[float] = None,
        step: float = 1e-3,
    ) -> float:
        """
        在 B_radius(o) 内随机取测地线, 返回 min φ''/(φ')² (二阶、一阶中心差分)

        C > 0 即说明在采样意义下 φ'' ≥ C(φ')²。
        """
        R = 0.9 * self.regular_radius if radius is None else float(radius)
        if not 0 < R < self.regular_radius:
            raise InputError(f"sampling radius must lie in (0, {self.regular_radius:g})", param="radius")
        rng = np.random.default_rng(seed)
        k = self.target.dim
        o = np.broadcast_to(np.asarray(self.o, dtype=float), (n_geodesics, k))
        z = rng.standard_normal((n_geodesics, k))
        s = R * rng.random(n_geodesics) ** (1.0 / k)
        start = self.target.exp_map(o, z / self.target.norm(o, z)[:, None] * s[:, None])
        w = rng.standard_normal((n_geodesics, k))
        w = w / self.target.norm(start, w)[:, None]
        phi_p = self.evaluate(self.target.exp_map(start, step * w))
        phi_0 = self.evaluate(start)
        phi_m = self.evaluate(self.target.exp_map(start, -step * w))
        second = (phi_p - 2.0 * phi_0 + phi_m) / step**2
        first = (phi_p - phi_m) / (2.0 * step)
        usable = first**2 > 1e-10
        if not np.any(usable):
            return math.inf
        if np.any(second <= 0):
            return float(np.min(second))
        return float(np.min(second[usable] / first[usable] ** 2))
