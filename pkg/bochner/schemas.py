"""
光滑映射与 Bochner 类检验的数据模型
"""

from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from pydantic import BaseModel, ConfigDict, Field

from common.errors import ChartDomainError, InputError
from common.stats import VerdictStatus
from config.config import get_config
from geometry import ManifoldModel
from geometry.expression import coordinate_symbols, lambdify_broadcast, parse_scalar
from geometry.finite_difference import central_derivative, second_derivative

MapFn = Callable[[np.ndarray], np.ndarray]


class SmoothMapSpec(BaseModel):
    """
    坐标卡之间的光滑映射 u: M → N

    fn 作用在 (..., n) 上并返回 (..., k)。由表达式构造时一阶、二阶偏导为 sympy 精确导数,
    否则用中心差分。
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    domain: ManifoldModel
    target: ManifoldModel
    fn: MapFn
    exact_jacobian: Optional[MapFn] = None
    exact_hessian: Optional[MapFn] = None
    label: str = "u"

    @classmethod
    def from_expressions(
        cls, components: Sequence[str], domain: ManifoldModel, target: ManifoldModel
    ) -> "SmoothMapSpec":
        """
        Args:
            components: 目标坐标卡中的各分量表达式, 个数等于 target.dim
        """
        if len(components) != target.dim:
            raise InputError(
                f"map needs {target.dim} components, got {len(components)}", param="components"
            )
        syms = coordinate_symbols(domain.dim)
        exprs = [parse_scalar(text, domain.dim) for text in components]
        jac = [[sp.diff(e, s) for s in syms] for e in exprs]
        hess = [[[sp.diff(d, s) for s in syms] for d in row] for row in jac]
        return cls(
            domain=domain,
            target=target,
            fn=lambdify_broadcast(syms, exprs),
            exact_jacobian=lambdify_broadcast(syms, jac),
            exact_hessian=lambdify_broadcast(syms, hess),
            label="(" + ", ".join(components) + ")",
        )

    @classmethod
    def linear(
        cls,
        A: Sequence[Sequence[float]],
        domain: ManifoldModel,
        target: ManifoldModel,
        b: Optional[Sequence[float]] = None,
    ) -> "SmoothMapSpec":
        """u(x) = Ax + b"""
        A = np.asarray(A, dtype=float)
        if A.shape != (target.dim, domain.dim):
            raise InputError(f"A must have shape {(target.dim, domain.dim)}, got {A.shape}", param="A")
        b = np.zeros(target.dim) if b is None else np.asarray(b, dtype=float)

        def fn(x: np.ndarray) -> np.ndarray:
            return np.asarray(x, dtype=float) @ A.T + b

        def jac(x: np.ndarray) -> np.ndarray:
            return np.broadcast_to(A, np.shape(x)[:-1] + A.shape).copy()

        def hess(x: np.ndarray) -> np.ndarray:
            return np.zeros(np.shape(x)[:-1] + A.shape + (domain.dim,))

        return cls(domain=domain, target=target, fn=fn, exact_jacobian=jac, exact_hessian=hess, label="Ax+b")

    @classmethod
    def constant(cls, q: Sequence[float], domain: ManifoldModel, target: ManifoldModel) -> "SmoothMapSpec":
        return cls.linear(np.zeros((target.dim, domain.dim)), domain, target, b=q)

    @property
    def has_exact_derivatives(self) -> bool:
        return self.exact_jacobian is not None and self.exact_hessian is not None

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """u(x); 像点离开目标坐标卡时报 ChartDomainError"""
        y = np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)
        if not np.all(self.target.contains(y)):
            raise ChartDomainError(f"image of {self.label} leaves the target chart", param="u")
        return y

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.evaluate(x)

    def jacobian(self, x: np.ndarray, h: Optional[float] = None) -> np.ndarray:
        """∂_i u^α, 形状 (..., k, n); h 给定时强制使用差分"""
        if self.exact_jacobian is not None and h is None:
            return self.exact_jacobian(x)
        step = h if h is not None else get_config().FD_STEP
        return central_derivative(self.fn, x, step)

    def hessian(self, x: np.ndarray, h: Optional[float] = None) -> np.ndarray:
        """∂_ij u^α, 形状 (..., k, n, n)"""
        if self.exact_hessian is not None and h is None:
            return self.exact_hessian(x)
        step = h if h is not None else get_config().FD_OUTER_STEP
        return second_derivative(self.fn, x, step)


class BochnerRow(BaseModel):
    """一行逐点检验 (也是 CSV 行)"""

    check_id: str
    point: Tuple[float, ...]
    lhs: float
    rhs: float
    margin: float
    passed: bool


class BochnerReport(BaseModel):
    name: str
    status: VerdictStatus
    rows: List[BochnerRow] = Field(default_factory=list)
    note: str = ""

    def add(self, check_id: str, point: np.ndarray, lhs: float, rhs: float, tol: float) -> BochnerRow:
        row = BochnerRow(
            check_id=check_id,
            point=tuple(float(c) for c in np.ravel(point)),
            lhs=float(lhs),
            rhs=float(rhs),
            margin=float(lhs - rhs),
            passed=bool(lhs >= rhs - tol),
        )
        self.rows.append(row)
        return row

    def finalize(self) -> "BochnerReport":
        self.status = VerdictStatus.PASS if all(r.passed for r in self.rows) else VerdictStatus.FAIL
        return self


class HilbertTraceResult(BaseModel):
    lhs: float = Field(..., description="Σ‖h_ij‖²")
    rhs: float = Field(..., description="‖Σ h_ii‖²/(n−k)")
    passed: bool
    null_multiplicity: int = 0
