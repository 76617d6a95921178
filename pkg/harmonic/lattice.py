"""
坐标球上的规则格点与变分离散

内部节点: 到球心的坐标距离 < ρ − 0.1h; 离球面更近的格点并入边界。
每个内部节点在 ±e_i 方向各有一条边, 伸出球外的边截短到与球面的交点,
交点 (或被并入的格点) 即为边界点。
"""

import math
from typing import Callable, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from common.errors import InputError, UnsupportedConfigurationError
from geometry import DriftField, ManifoldKind, ManifoldModel
from geometry.expression import coordinate_symbols, lambdify_broadcast, parse_scalar

ABSORB_FRACTION = 0.1

BoundaryData = Union[Callable[[np.ndarray], np.ndarray], Sequence[str], Sequence[float]]


class Lattice:
    """格点几何, 只读"""

    def __init__(
        self,
        center: np.ndarray,
        chart_radius: float,
        spacing: float,
        half_width: int,
        index: np.ndarray,
        nodes: np.ndarray,
        neighbors: np.ndarray,
        lengths: np.ndarray,
        boundary_points: np.ndarray,
    ):
        self.center = center  # (n,)
        self.chart_radius = chart_radius
        self.spacing = spacing
        self.half_width = half_width  # 格点下标范围 [−K, K]
        self.index = index  # (N, n) 内部节点的整数下标
        self.nodes = nodes  # (N, n)
        self.neighbors = neighbors  # (N, n, 2) ≥0 为内部节点, <0 为边界点 −1−b; 最后一维为 (+, −)
        self.lengths = lengths  # (N, n, 2) 边长
        self.boundary_points = boundary_points  # (B, n)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def axes(self) -> list:
        k = np.arange(-self.half_width, self.half_width + 1)
        return [self.center[i] + self.spacing * k for i in range(len(self.center))]

    def center_node(self) -> int:
        hit = np.flatnonzero(np.all(self.index == 0, axis=-1))
        return int(hit[0]) if hit.size else -1


class EdgeSet(NamedTuple):
    """无重复的边表: 内部边 (i, j) 与边界边 (i, b)"""

    inner_i: np.ndarray
    inner_j: np.ndarray
    inner_len: np.ndarray
    bnd_i: np.ndarray
    bnd_b: np.ndarray
    bnd_len: np.ndarray


def require_conformal(manifold: ManifoldModel, role: str) -> None:
    if not manifold.is_conformal:
        raise UnsupportedConfigurationError(
            f"harmonic solver needs a conformal {role} model, got {manifold.describe()}", param=role
        )


def build_lattice(domain: ManifoldModel, radius: float, spacing: float, center=None) -> Lattice:
    """
    在以 center 为心、测地半径 radius 的球上构造格点

    非欧氏定义域只支持以坐标原点为心的球 (此时测地球就是坐标球)。
    """
    require_conformal(domain, "domain")
    n = domain.dim
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float).reshape(n)
    if domain.kind != ManifoldKind.EUCLIDEAN and np.any(center != 0.0):
        raise InputError("curved domains only support balls centred at the chart origin", param="center")
    if not radius > 0:
        raise InputError(f"radius must be positive, got {radius}", param="radius")
    rho = float(radius) if domain.kind == ManifoldKind.EUCLIDEAN else domain.chart_radius(radius)
    if not 0 < spacing < rho:
        raise InputError(f"spacing must lie in (0, {rho:g}), got {spacing}", param="spacing")

    K = int(math.ceil(rho / spacing)) + 1
    axis = np.arange(-K, K + 1)
    full = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    points = center + spacing * full
    inside = np.linalg.norm(points - center, axis=-1) < rho - ABSORB_FRACTION * spacing
    index = full[inside]
    nodes = points[inside]
    N = len(nodes)
    if N == 0:
        raise InputError("lattice has no interior nodes; decrease the spacing", param="spacing")

    table = np.full((2 * K + 1,) * n, -1, dtype=np.int64)
    table[tuple((index + K).T)] = np.arange(N)

    neighbors = np.empty((N, n, 2), dtype=np.int64)
    lengths = np.empty((N, n, 2))
    boundary = []
    n_boundary = 0
    for i in range(n):
        for side, s in enumerate((1, -1)):
            nb = index.copy()
            nb[:, i] += s
            j = table[tuple((nb + K).T)]
            hit = j >= 0
            neighbors[hit, i, side] = j[hit]
            lengths[hit, i, side] = spacing

            miss = ~hit
            w = nodes[miss] - center
            disc = w[:, i] ** 2 - np.sum(w * w, axis=-1) + rho**2
            ell = np.minimum(-s * w[:, i] + np.sqrt(disc), spacing)
            bp = nodes[miss].copy()
            bp[:, i] += s * ell
            count = len(bp)
            neighbors[miss, i, side] = -1 - (n_boundary + np.arange(count))
            lengths[miss, i, side] = ell
            boundary.append(bp)
            n_boundary += count

    return Lattice(
        center=center,
        chart_radius=rho,
        spacing=float(spacing),
        half_width=K,
        index=index,
        nodes=nodes,
        neighbors=neighbors,
        lengths=lengths,
        boundary_points=np.concatenate(boundary, axis=0),
    )


def edge_set(lattice: Lattice) -> EdgeSet:
    rows = np.broadcast_to(np.arange(lattice.n_nodes)[:, None, None], lattice.neighbors.shape)
    # 内部边只从 + 方向计一次, 边界边两个方向都计
    inner = lattice.neighbors[:, :, 0] >= 0
    bnd = lattice.neighbors < 0
    return EdgeSet(
        inner_i=rows[:, :, 0][inner],
        inner_j=lattice.neighbors[:, :, 0][inner],
        inner_len=lattice.lengths[:, :, 0][inner],
        bnd_i=rows[bnd],
        bnd_b=-1 - lattice.neighbors[bnd],
        bnd_len=lattice.lengths[bnd],
    )


def neighbor_values(values: np.ndarray, boundary_values: np.ndarray, neighbors: np.ndarray) -> np.ndarray:
    """(N, n, 2, k) 的邻点取值"""
    stacked = np.concatenate([values, boundary_values[::-1]], axis=0)
    # −1−b 在 stacked 中的位置为 N + (B−1−b), 即负下标 −1−b
    return stacked[neighbors]


def chart_derivatives(lattice: Lattice, values: np.ndarray, boundary_values: np.ndarray) -> np.ndarray:
    """
    非均匀三点公式的一阶偏导 ∂_i u^α, 形状 (N, k, n)

    u' ≈ [ℓ₋²(u₊ − u) + ℓ₊²(u − u₋)] / (ℓ₊ℓ₋(ℓ₊ + ℓ₋)), 对二次函数精确。
    """
    nv = neighbor_values(values, boundary_values, lattice.neighbors)
    lp = lattice.lengths[:, :, 0][..., None]
    lm = lattice.lengths[:, :, 1][..., None]
    u = values[:, None, :]
    d = (lm**2 * (nv[:, :, 0] - u) + lp**2 * (u - nv[:, :, 1])) / (lp * lm * (lp + lm))
    return np.swapaxes(d, -1, -2)


def target_weight(target: ManifoldModel, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """共形目标 h = λ²δ 的 λ²(y) 与 ∇λ²(y)"""
    y = np.asarray(y, dtype=float)
    if target.kind == ManifoldKind.EUCLIDEAN:
        return np.ones(y.shape[:-1]), np.zeros_like(y)
    lam = target.conformal_factor(y)
    return lam**2, (-2.0 * target.kappa * lam**3)[..., None] * y


def drift_potential(V: Optional[DriftField]) -> Callable[[np.ndarray], np.ndarray]:
    """V = ∇f 的势函数 f; 非梯度漂移不支持"""
    if V is None:
        return lambda x: np.zeros(np.shape(x)[:-1])
    if not V.is_gradient:
        raise UnsupportedConfigurationError("harmonic solver needs a gradient drift V = ∇f", param="V")
    return V.gradient_potential.value


def as_boundary_fn(boundary: BoundaryData, dim: int, target_dim: int) -> Callable[[np.ndarray], np.ndarray]:
    """
    把边界数据统一为 (..., n) → (..., k) 的函数

    可以是函数、各分量的表达式字符串, 或常数点。
    """
    if callable(boundary):
        def fn(x: np.ndarray) -> np.ndarray:
            out = np.asarray(boundary(np.asarray(x, dtype=float)), dtype=float)
            return out.reshape(np.shape(x)[:-1] + (target_dim,))

        return fn
    items = list(boundary)
    if len(items) != target_dim:
        raise InputError(f"boundary data needs {target_dim} components, got {len(items)}", param="boundary")
    if all(isinstance(c, str) for c in items):
        syms = coordinate_symbols(dim)
        return lambdify_broadcast(syms, [parse_scalar(c, dim) for c in items])
    q = np.asarray(items, dtype=float)
    return lambda x: np.broadcast_to(q, np.shape(x)[:-1] + (target_dim,)).copy()
