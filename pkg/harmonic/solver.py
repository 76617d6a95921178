"""
离散 V-调和映射求解器

格点能量 E(u) = Σ_e W_e λ²(ū_e)|u_y − u_x|², 其中
W_e = μ(m_e)^{n−2} e^{−f(m_e)} h^{n−1}/ℓ_e (μ 为定义域共形因子, V = ∇f, m_e 为边中点),
节点质量 m_x = μ(x)^n e^{−f(x)} h^n。离散张力场
τ_x = −∂E/∂u_x / (2 m_x λ²(u_x)) 是 τ_V(u) 的相容离散。

张力流 u ← exp_u(η·v) 只在能量不增时接受, 否则 η 减半。
"""

from concurrent.futures import ThreadPoolExecutor
import math
from typing import Callable, List, Literal, Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import splu
from SimpleLLMFunc.logger import app_log, push_warning

from common.errors import InputError, NoConvergenceError
from config.config import get_config
from geometry import DriftField, ManifoldKind, ManifoldModel
from .lattice import (
    BoundaryData,
    EdgeSet,
    Lattice,
    as_boundary_fn,
    build_lattice,
    drift_potential,
    edge_set,
    require_conformal,
    target_weight,
)
from .schemas import MapGrid

Preconditioner = Literal["sobolev", "none"]
ROUNDING_SLACK = 64.0 * np.finfo(float).eps


class LatticeEnergy:
    """固定边界数据下的格点能量、梯度与张力"""

    def __init__(
        self,
        lattice: Lattice,
        domain: ManifoldModel,
        target: ManifoldModel,
        V: Optional[DriftField],
        boundary_values: np.ndarray,
    ):
        self.lattice = lattice
        self.target = target
        self.boundary_values = boundary_values
        self.edges: EdgeSet = edge_set(lattice)
        n = domain.dim
        h = lattice.spacing
        f = drift_potential(V)
        f0 = float(f(lattice.center[None, :])[0])

        def edge_weight(mid: np.ndarray, length: np.ndarray) -> np.ndarray:
            mu = domain.conformal_factor(mid)
            return mu ** (n - 2) * np.exp(-(f(mid) - f0)) * h ** (n - 1) / length

        e = self.edges
        nodes = lattice.nodes
        self.inner_w = edge_weight(0.5 * (nodes[e.inner_i] + nodes[e.inner_j]), e.inner_len)
        self.bnd_w = edge_weight(0.5 * (nodes[e.bnd_i] + lattice.boundary_points[e.bnd_b]), e.bnd_len)
        self.mass = domain.conformal_factor(nodes) ** n * np.exp(-(f(nodes) - f0)) * h**n

    def energy(self, U: np.ndarray) -> float:
        e = self.edges
        d_in = U[e.inner_j] - U[e.inner_i]
        lam_in, _ = target_weight(self.target, 0.5 * (U[e.inner_j] + U[e.inner_i]))
        ub = self.boundary_values[e.bnd_b]
        d_b = ub - U[e.bnd_i]
        lam_b, _ = target_weight(self.target, 0.5 * (ub + U[e.bnd_i]))
        return float(
            np.sum(self.inner_w * lam_in * np.sum(d_in**2, axis=-1))
            + np.sum(self.bnd_w * lam_b * np.sum(d_b**2, axis=-1))
        )

    def gradient(self, U: np.ndarray) -> np.ndarray:
        """∂E/∂u_x, 形状 (N, k)"""
        e = self.edges
        G = np.zeros_like(U)

        d_in = U[e.inner_j] - U[e.inner_i]
        lam, dlam = target_weight(self.target, 0.5 * (U[e.inner_j] + U[e.inner_i]))
        w = self.inner_w[:, None]
        common = 0.5 * w * np.sum(d_in**2, axis=-1, keepdims=True) * dlam
        np.add.at(G, e.inner_i, -2.0 * w * lam[:, None] * d_in + common)
        np.add.at(G, e.inner_j, 2.0 * w * lam[:, None] * d_in + common)

        ub = self.boundary_values[e.bnd_b]
        d_b = ub - U[e.bnd_i]
        lam, dlam = target_weight(self.target, 0.5 * (ub + U[e.bnd_i]))
        w = self.bnd_w[:, None]
        np.add.at(G, e.bnd_i, -2.0 * w * lam[:, None] * d_b + 0.5 * w * np.sum(d_b**2, axis=-1, keepdims=True) * dlam)
        return G

    def tension(self, U: np.ndarray, G: Optional[np.ndarray] = None) -> np.ndarray:
        G = self.gradient(U) if G is None else G
        lam, _ = target_weight(self.target, U)
        return -G / (2.0 * self.mass[:, None] * lam[:, None])

    def tension_norm(self, U: np.ndarray, tau: np.ndarray) -> np.ndarray:
        lam, _ = target_weight(self.target, U)
        return np.sqrt(lam) * np.linalg.norm(tau, axis=-1)

    def laplacian(self):
        """λ ≡ 1 时能量的 Hessian (加权图 Laplace 矩阵的 2 倍), 稀疏 LU 分解"""
        e = self.edges
        N = self.lattice.n_nodes
        w = 2.0 * self.inner_w
        rows = np.concatenate([e.inner_i, e.inner_j, e.inner_i, e.inner_j, e.bnd_i])
        cols = np.concatenate([e.inner_i, e.inner_j, e.inner_j, e.inner_i, e.bnd_i])
        data = np.concatenate([w, w, -w, -w, 2.0 * self.bnd_w])
        return splu(coo_matrix((data, (rows, cols)), shape=(N, N)).tocsc())

    def boundary_load(self) -> np.ndarray:
        """Σ_边界边 2W·g_b, 线性问题的右端项"""
        e = self.edges
        rhs = np.zeros((self.lattice.n_nodes, self.boundary_values.shape[1]))
        np.add.at(rhs, e.bnd_i, 2.0 * self.bnd_w[:, None] * self.boundary_values[e.bnd_b])
        return rhs


def _regular_radius(target: ManifoldModel) -> Optional[float]:
    if target.kind == ManifoldKind.SPHERE:
        return math.pi / (2.0 * math.sqrt(target.kappa))
    return None


def _project(target: ManifoldModel, U: np.ndarray, o: np.ndarray, cap: float) -> tuple:
    d = target.distance(o, U)
    over = d >= cap
    if not np.any(over):
        return U, False
    U = U.copy()
    oo = np.broadcast_to(o, U[over].shape)
    U[over] = target.exp_map(oo, target.log_map(oo, U[over]) * (cap / d[over])[:, None])
    return U, True


def solve(
    domain: ManifoldModel,
    target: ManifoldModel,
    boundary: BoundaryData,
    radius: float,
    spacing: float,
    V: Optional[DriftField] = None,
    center: Optional[Sequence[float]] = None,
    eta: Optional[float] = None,
    tol: float = 1e-8,
    preconditioner: Preconditioner = "sobolev",
    max_iter: Optional[int] = None,
    initial: Optional[np.ndarray] = None,
    regular_center: Optional[Sequence[float]] = None,
) -> MapGrid:
    """
    在 B_radius(center) 上求解 Dirichlet 问题 τ_V(u) = 0

    Args:
        domain: 定义域模型 (欧氏或球极投影模型)
        target: 目标模型 (欧氏或球极投影模型)
        boundary: 边界数据, 函数 / 分量表达式 / 常数点
        radius: 测地半径 a
        spacing: 坐标格距 h
        V: 梯度型漂移场, None 视为 0
        eta: 初始步长, 默认 sobolev 取 1, none 取 0.9·h²min μ²/(2n)
        tol: sup|τ_V(u)|_h 的收敛阈值
        preconditioner: "sobolev" 用加权 Laplace 矩阵预条件, "none" 为普通张力流
        max_iter: 最大迭代数, 默认取配置 SOLVER_MAX_ITER
        initial: 内部节点初值 (N, k), 默认为边界坐标的调和插值
        regular_center: κ>0 目标的正则球中心, 默认为坐标原点

    Returns:
        MapGrid; 达到 max_iter 仍未收敛时 converged=False

    Raises:
        InputError: 边界数据不在正则球内, 或初值形状不符
        NoConvergenceError: 连续 SOLVER_MAX_HALVINGS 次减半后能量仍上升
    """
    cfg = get_config()
    require_conformal(target, "target")
    lattice = build_lattice(domain, radius, spacing, center)
    k = target.dim
    g = as_boundary_fn(boundary, domain.dim, k)
    UB = np.asarray(g(lattice.boundary_points), dtype=float)
    if not np.all(target.contains(UB)):
        raise InputError("boundary data leaves the target chart", param="boundary")

    R = _regular_radius(target)
    o = np.zeros(k) if regular_center is None else np.asarray(regular_center, dtype=float)
    if R is not None:
        reach = float(np.max(target.distance(o, UB)))
        if reach >= R:
            raise InputError(
                f"boundary data reaches distance {reach:.4g} >= regular radius {R:.4g}", param="boundary"
            )
        cap = R * (1.0 - 1e-6)

    energy = LatticeEnergy(lattice, domain, target, V, UB)
    lu = energy.laplacian()
    if initial is None:
        U = lu.solve(energy.boundary_load())
    else:
        U = np.array(initial, dtype=float)
        if U.shape != (lattice.n_nodes, k):
            raise InputError(f"initial values must have shape {(lattice.n_nodes, k)}", param="initial")
    projected = False
    if R is not None:
        U, hit = _project(target, U, o, cap)
        projected |= hit

    mu_min = float(np.min(domain.conformal_factor(lattice.nodes)))
    eta0 = eta if eta is not None else (
        1.0 if preconditioner == "sobolev" else 0.9 * spacing**2 * mu_min**2 / (2.0 * domain.dim)
    )
    max_iter = max_iter if max_iter is not None else cfg.SOLVER_MAX_ITER

    E = energy.energy(U)
    energies: List[float] = [E]
    step_size = eta0
    converged = False
    residual = math.inf
    it = 0
    app_log(
        f"🚀 Solving V-harmonic map on {lattice.n_nodes} nodes (a={radius:g}, h={spacing:g}, "
        f"preconditioner={preconditioner})"
    )
    while True:
        G = energy.gradient(U)
        tau = energy.tension(U, G)
        residual = float(np.max(energy.tension_norm(U, tau)))
        if residual < tol:
            converged = True
            break
        if it >= max_iter:
            break
        lam, _ = target_weight(target, U)
        if preconditioner == "sobolev":
            # D^{1/2} L⁻¹ D^{1/2}, D = λ⁻², 保持对称正定
            scale = 1.0 / np.sqrt(lam)[:, None]
            v = -scale * lu.solve(scale * G)
        else:
            v = tau

        halvings = 0
        while True:
            candidate = target.exp_map(U, step_size * v)
            hit = False
            if R is not None:
                candidate, hit = _project(target, candidate, o, cap)
            if np.all(target.contains(candidate)):
                E_new = energy.energy(candidate)
                if E_new <= E + ROUNDING_SLACK * abs(E):
                    break
            halvings += 1
            if halvings > cfg.SOLVER_MAX_HALVINGS:
                raise NoConvergenceError(
                    f"energy still increases after {cfg.SOLVER_MAX_HALVINGS} step halvings "
                    f"(iteration {it}, residual {residual:.3e})",
                    param="eta",
                )
            step_size *= 0.5
        if hit:
            projected = True
            push_warning(f"⚠️ iterate left the regular ball at iteration {it}; projected back")
        U = candidate
        E = E_new
        energies.append(E)
        step_size = min(2.0 * step_size, eta0)
        it += 1

    if converged:
        app_log(f"✅ Converged after {it} iterations, residual {residual:.3e}")
    else:
        push_warning(f"⚠️ Solver stopped after {it} iterations with residual {residual:.3e} >= tol {tol:g}")
    return MapGrid(
        domain=domain,
        target=target,
        drift=V,
        radius=float(radius),
        lattice=lattice,
        values=U,
        boundary_values=UB,
        energies=energies,
        residual=residual,
        iterations=it,
        converged=converged,
        projected=projected,
        regular_center=[float(c) for c in o] if R is not None else None,
    )


def solve_family(
    domain: ManifoldModel,
    target: ManifoldModel,
    boundary: BoundaryData,
    radii: Sequence[float],
    cells: int = 16,
    V: Optional[DriftField] = None,
    tol: float = 1e-8,
    max_workers: Optional[int] = None,
    **kwargs,
) -> List[MapGrid]:
    """
    在一列同心球上分别求解, 格距取坐标半径的 1/cells

    各网格互相独立, 用线程池并行, 结果按 radii 的顺序返回。
    """
    if cells < 2:
        raise InputError("cells must be at least 2", param="cells")

    def one(a: float) -> MapGrid:
        rho = float(a) if domain.kind == ManifoldKind.EUCLIDEAN else domain.chart_radius(a)
        return solve(domain, target, boundary, a, rho / cells, V=V, tol=tol, **kwargs)

    workers = max_workers if max_workers is not None else get_config().MAX_WORKERS
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, [float(a) for a in radii]))


def discrete_laplacian_V(grid: MapGrid, psi: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """
    用求解器的权重计算 Δ_V(ψ∘u) 的节点值: (1/m_x) Σ_e W_e (ψ(u_y) − ψ(u_x))

    ψ 作用在目标坐标点上, 返回标量。
    """
    energy = LatticeEnergy(grid.lattice, grid.domain, grid.target, grid.drift, grid.boundary_values)
    e = energy.edges
    inner = np.asarray(psi(grid.values), dtype=float)
    outer = np.asarray(psi(grid.boundary_values), dtype=float)
    acc = np.zeros(grid.lattice.n_nodes)
    diff = inner[e.inner_j] - inner[e.inner_i]
    np.add.at(acc, e.inner_i, energy.inner_w * diff)
    np.add.at(acc, e.inner_j, -energy.inner_w * diff)
    np.add.at(acc, e.bnd_i, energy.bnd_w * (outer[e.bnd_b] - inner[e.bnd_i]))
    return acc / energy.mass
