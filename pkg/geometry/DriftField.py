"""
DriftField: 坐标卡上的 C¹ 向量场 V
"""

from typing import Callable, List, Optional, Sequence

import numpy as np

from common.errors import InputError
from .expression import ExpressionField, ScalarField, coordinate_symbols, lambdify_broadcast, parse_scalar
from .ManifoldModel import ManifoldModel
from .ModelSpaces import EuclideanSpace

import sympy as sp

VectorFn = Callable[[np.ndarray], np.ndarray]


class DriftField:
    """
    漂移场 V

    Attributes:
        dim: 维数
        gradient_potential: V = ∇f 时的势函数 f, 否则为 None
        is_zero: V ≡ 0
    """

    def __init__(
        self,
        dim: int,
        vector_fn: VectorFn,
        jacobian_fn: Optional[VectorFn] = None,
        gradient_potential: Optional[ScalarField] = None,
        manifold: Optional[ManifoldModel] = None,
        is_zero: bool = False,
        name: str = "V",
        fd_step: float = 1e-4,
    ):
        self.dim = int(dim)
        self._vector_fn = vector_fn
        self._jacobian_fn = jacobian_fn
        self.gradient_potential = gradient_potential
        self.manifold = manifold
        self.is_zero = is_zero
        self.name = name
        self.fd_step = fd_step

    # ==================== 构造函数 ====================

    @classmethod
    def zero(cls, dim: int) -> "DriftField":
        def vec(x):
            return np.zeros(np.shape(x))

        def jac(x):
            return np.zeros(np.shape(x) + (dim,))

        potential = ExpressionField("0", dim)
        return cls(dim, vec, jac, gradient_potential=potential, is_zero=True, name="0")

    @classmethod
    def constant(cls, c: Sequence[float]) -> "DriftField":
        c = np.asarray(c, dtype=float)
        dim = c.size

        def vec(x):
            return np.broadcast_to(c, np.shape(x)).copy()

        def jac(x):
            return np.zeros(np.shape(x) + (dim,))

        text = " + ".join(f"({float(ci)!r})*x_{i + 1}" for i, ci in enumerate(c))
        potential = ExpressionField(text, dim)
        return cls(dim, vec, jac, gradient_potential=potential, is_zero=not np.any(c), name=f"const{c.tolist()}")

    @classmethod
    def linear(cls, A: Sequence[Sequence[float]]) -> "DriftField":
        """V(x) = A x; A 对称时带势函数 ½ xᵀAx"""
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InputError("linear drift needs a square matrix", param="linear")
        dim = A.shape[0]

        def vec(x):
            return np.einsum("ij,...j->...i", A, x)

        def jac(x):
            return np.broadcast_to(A, np.shape(x)[:-1] + (dim, dim)).copy()

        potential = None
        if np.allclose(A, A.T):
            terms = [f"({float(0.5 * A[i, j])!r})*x_{i + 1}*x_{j + 1}" for i in range(dim) for j in range(dim)]
            potential = ExpressionField(" + ".join(terms), dim)
        return cls(dim, vec, jac, gradient_potential=potential, is_zero=not np.any(A), name="linear")

    @classmethod
    def from_expressions(cls, components: List[str], dim: Optional[int] = None) -> "DriftField":
        dim = dim or len(components)
        if len(components) != dim:
            raise InputError(f"drift needs {dim} components, got {len(components)}", param="components")
        syms = coordinate_symbols(dim)
        exprs = [parse_scalar(c, dim) for c in components]
        jac = [[sp.diff(e, s) for s in syms] for e in exprs]
        zero = all(sp.simplify(e) == 0 for e in exprs)
        return cls(
            dim,
            lambdify_broadcast(syms, exprs),
            lambdify_broadcast(syms, jac),
            is_zero=zero,
            name="(" + ", ".join(components) + ")",
        )

    @classmethod
    def from_potential(cls, potential, manifold: ManifoldModel) -> "DriftField":
        """V = ∇f = g^{-1} df; 欧氏情形雅可比即 Hess f, 其余情形用差分"""
        dim = manifold.dim
        field = ExpressionField(potential, dim) if isinstance(potential, str) else potential

        def vec(x):
            return np.einsum("...ij,...j->...i", manifold.inverse_metric(x), field.gradient(x))

        jac = field.hessian if isinstance(manifold, EuclideanSpace) else None
        is_zero = isinstance(field, ExpressionField) and field.expr.is_number
        return cls(
            dim,
            vec,
            jac,
            gradient_potential=field,
            manifold=manifold,
            is_zero=bool(is_zero),
            name=f"grad({getattr(field, 'text', 'f')})",
        )

    # ==================== 取值 ====================

    def vector_at(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.asarray(self._vector_fn(x), dtype=float)

    __call__ = vector_at

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        """∂_j V^i, 形状 (..., i, j)"""
        x = np.asarray(x, dtype=float)
        if self._jacobian_fn is not None:
            return np.asarray(self._jacobian_fn(x), dtype=float)
        eye = np.eye(self.dim)

        def central(h: float) -> np.ndarray:
            cols = [(self._vector_fn(x + h * e) - self._vector_fn(x - h * e)) / (2.0 * h) for e in eye]
            return np.stack(cols, axis=-1)

        h = self.fd_step
        return (4.0 * central(h / 2.0) - central(h)) / 3.0

    @property
    def is_gradient(self) -> bool:
        return self.gradient_potential is not None

    def norm(self, manifold: ManifoldModel, x: np.ndarray) -> np.ndarray:
        return manifold.norm(x, self.vector_at(x))

    def gradient_mismatch(self, manifold: ManifoldModel, x: np.ndarray, step: float = 1e-4) -> float:
        """|V − g^{-1}∇f| 的最大值, ∇f 用差分计算; 无势函数时返回 0"""
        if self.gradient_potential is None:
            return 0.0
        x = np.atleast_2d(np.asarray(x, dtype=float))
        f = self.gradient_potential
        eye = np.eye(self.dim)
        df = np.stack(
            [(f.value(x + step * e) - f.value(x - step * e)) / (2.0 * step) for e in eye], axis=-1
        )
        grad = np.einsum("...ij,...j->...i", manifold.inverse_metric(x), df)
        return float(np.max(np.abs(grad - self.vector_at(x))))

    def radial_sup_profile(
        self,
        manifold: ManifoldModel,
        radii: Sequence[float],
        p: Optional[np.ndarray] = None,
        n_directions: int = 64,
        n_shells: int = 256,
    ) -> np.ndarray:
        """
        v(r) = sup_{B_r(p)} |V| 的采样近似

        在测地球面上按确定性方向采样 |V|_g, 再取累计最大值, 因此结果关于 r 单调不减。
        """
        radii = np.asarray(radii, dtype=float)
        if radii.size == 0:
            return radii
        p = np.zeros(self.dim) if p is None else np.asarray(p, dtype=float)
        dirs = deterministic_directions(self.dim, n_directions)
        units = dirs / manifold.norm(p, dirs)[..., None]
        shells = np.union1d(np.linspace(0.0, float(radii.max()), n_shells), radii)
        pts = manifold.geodesic(p, units[None, :, :], shells[:, None])
        sup_shell = np.max(self.norm(manifold, pts), axis=1)
        cum = np.maximum.accumulate(sup_shell)
        idx = np.searchsorted(shells, radii)
        return cum[idx]

    def __repr__(self) -> str:
        return f"DriftField({self.name}, dim={self.dim})"


def deterministic_directions(dim: int, count: int) -> np.ndarray:
    """
    确定性的单位方向集合: 坐标轴 ±e_i 之后用黄金角 (二维) 或固定种子的高斯方向补齐
    """
    eye = np.eye(dim)
    dirs = [v for i in range(dim) for v in (eye[i], -eye[i])]
    if dim == 1 or count <= len(dirs):
        return np.array(dirs[: max(count, 2) if dim == 1 else count])
    extra = count - len(dirs)
    if dim == 2:
        golden = (1.0 + 5.0**0.5) / 2.0
        theta = 2.0 * np.pi * ((np.arange(1, extra + 1) / golden) % 1.0)
        fill = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    else:
        # 高维: 固定种子的高斯方向
        z = np.random.default_rng(7919 * dim + count).standard_normal((extra, dim))
        fill = z / np.linalg.norm(z, axis=-1, keepdims=True)
    return np.concatenate([np.array(dirs), fill], axis=0)
