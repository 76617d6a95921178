"""
标量场与表达式文法

支持的文法: 实数常量, x_1 … x_n, |x| (欧氏范数), + - * / ^ ( ** ),
以及 log, exp, sin, cos, tanh, sinh, cosh, sqrt。表达式由 sympy 解析并符号求导,
再用 lambdify 转为 numpy 向量化函数。
"""

from abc import ABC, abstractmethod
import re
from typing import Callable, Dict, List, Optional

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from common.errors import InputError

_TRANSFORMS = standard_transformations + (convert_xor,)
_FUNCTIONS = {
    "log": sp.log,
    "exp": sp.exp,
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "tanh": sp.tanh,
    "sinh": sp.sinh,
    "cosh": sp.cosh,
    "sqrt": sp.sqrt,
    "pi": sp.pi,
}
_NORM = re.compile(r"\|\s*x\s*\|")


def coordinate_symbols(dim: int) -> List[sp.Symbol]:
    return list(sp.symbols(f"x_1:{dim + 1}", real=True))


def parse_scalar(text: str, dim: int) -> sp.Expr:
    """
    把表达式字符串解析为 x_1..x_n 上的 sympy 表达式

    Args:
        text: 表达式, 例如 "2*log(2+|x|^2)"
        dim: 坐标维数 n

    Returns:
        sympy 表达式

    Raises:
        InputError: 语法错误或出现未知符号
    """
    syms = coordinate_symbols(dim)
    local: Dict[str, object] = dict(_FUNCTIONS)
    local.update({s.name: s for s in syms})
    local["_R"] = sp.sqrt(sum(s**2 for s in syms))
    source = _NORM.sub("_R", text.strip())
    if not source:
        raise InputError("empty expression", param="expression")
    try:
        expr = parse_expr(source, local_dict=local, transformations=_TRANSFORMS)
    except Exception as e:  # sympy 抛出的异常类型多样
        raise InputError(f"cannot parse expression '{text}': {e}", param="expression")
    if not isinstance(expr, sp.Expr):
        raise InputError(f"expression '{text}' is not scalar", param="expression")
    unknown = expr.free_symbols - set(syms)
    if unknown:
        names = ", ".join(sorted(s.name for s in unknown))
        raise InputError(f"unknown symbols in '{text}': {names}", param="expression")
    return expr


def parse_radial(text: str) -> sp.Expr:
    """解析只依赖半径 r 的表达式 (旋转对称模型的 warp 函数)"""
    r = sp.Symbol("r", positive=True)
    local: Dict[str, object] = dict(_FUNCTIONS)
    local["r"] = r
    try:
        expr = parse_expr(text.strip(), local_dict=local, transformations=_TRANSFORMS)
    except Exception as e:
        raise InputError(f"cannot parse warp '{text}': {e}", param="warp")
    unknown = expr.free_symbols - {r}
    if unknown:
        raise InputError(f"warp '{text}' may only depend on r", param="warp")
    return expr


def radial_symbol() -> sp.Symbol:
    return sp.Symbol("r", positive=True)


def lambdify_broadcast(syms: List[sp.Symbol], exprs) -> Callable[[np.ndarray], np.ndarray]:
    """
    把 (嵌套) 表达式列表编译为作用在 (..., n) 数组上的函数

    常量分量会被广播成与输入同形, 输出形状为 (...,) + 表达式形状。
    """
    array = sp.Array(exprs) if isinstance(exprs, (list, tuple, sp.Array, sp.Matrix)) else None
    if array is None:
        fn = sp.lambdify(syms, exprs, modules="numpy")

        def scalar(x: np.ndarray) -> np.ndarray:
            x = np.asarray(x, dtype=float)
            out = fn(*np.moveaxis(x, -1, 0))
            return np.broadcast_to(np.asarray(out, dtype=float), x.shape[:-1]).copy()

        return scalar

    shape = array.shape
    flat = [array[idx] for idx in np.ndindex(*shape)]
    fns = [sp.lambdify(syms, e, modules="numpy") for e in flat]

    def tensor(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        cols = np.moveaxis(x, -1, 0)
        lead = x.shape[:-1]
        parts = [np.broadcast_to(np.asarray(f(*cols), dtype=float), lead) for f in fns]
        return np.stack(parts, axis=-1).reshape(lead + tuple(shape))

    return tensor


class ScalarField(ABC):
    """标量场: 值、欧氏梯度 ∂_i f 与二阶偏导 ∂_ij f, 全部作用在 (..., n) 上"""

    dim: int

    @abstractmethod
    def value(self, x: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def gradient(self, x: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def hessian(self, x: np.ndarray) -> np.ndarray:
        pass

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.value(x)


class ExpressionField(ScalarField):
    """由文法表达式给出的标量场, 导数为精确的符号导数"""

    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.symbols = coordinate_symbols(dim)
        self.expr = parse_scalar(text, dim)
        grad = [sp.diff(self.expr, s) for s in self.symbols]
        hess = [[sp.diff(g, s) for s in self.symbols] for g in grad]
        self._value = lambdify_broadcast(self.symbols, self.expr)
        self._gradient = lambdify_broadcast(self.symbols, grad)
        self._hessian = lambdify_broadcast(self.symbols, hess)

    def value(self, x: np.ndarray) -> np.ndarray:
        return self._value(x)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self._gradient(x)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        return self._hessian(x)

    def __repr__(self) -> str:
        return f"ExpressionField({self.text!r}, dim={self.dim})"


class CallableField(ScalarField):
    """
    由任意向量化函数给出的标量场

    导数用中心差分加一次 Richardson 外推: D = (4·D(h/2) − D(h))/3。
    """

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], dim: int, step: Optional[float] = None):
        self.fn = fn
        self.dim = dim
        self.step = step if step is not None else 1e-4

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        eye = np.eye(self.dim)

        def central(h: float) -> np.ndarray:
            cols = [(self.fn(x + h * e) - self.fn(x - h * e)) / (2.0 * h) for e in eye]
            return np.stack(cols, axis=-1)

        h = self.step
        return (4.0 * central(h / 2.0) - central(h)) / 3.0

    def hessian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        eye = np.eye(self.dim)

        def second(h: float) -> np.ndarray:
            rows = []
            for ei in eye:
                row = []
                for ej in eye:
                    fpp = self.fn(x + h * ei + h * ej)
                    fpm = self.fn(x + h * ei - h * ej)
                    fmp = self.fn(x - h * ei + h * ej)
                    fmm = self.fn(x - h * ei - h * ej)
                    row.append((fpp - fpm - fmp + fmm) / (4.0 * h * h))
                rows.append(np.stack(row, axis=-1))
            return np.stack(rows, axis=-2)

        h = max(self.step, 1e-3)
        hess = (4.0 * second(h / 2.0) - second(h)) / 3.0
        return 0.5 * (hess + np.swapaxes(hess, -1, -2))
