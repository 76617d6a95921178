"""
geometry 模块的数据模型
"""

from enum import Enum
import math
from typing import List, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator


class ManifoldKind(str, Enum):
    EUCLIDEAN = "euclidean"
    HYPERBOLIC = "hyperbolic"
    SPHERE = "sphere"
    ROTATIONALLY_SYMMETRIC = "rotationally_symmetric"


class Infinity(str, Enum):
    """符号化的 ±∞, 不用大浮点数近似"""
    PLUS = "+inf"
    MINUS = "-inf"


_INF_ALIASES = {
    "inf": Infinity.PLUS,
    "+inf": Infinity.PLUS,
    "infinity": Infinity.PLUS,
    "+infinity": Infinity.PLUS,
    "∞": Infinity.PLUS,
    "+∞": Infinity.PLUS,
    "-inf": Infinity.MINUS,
    "-infinity": Infinity.MINUS,
    "-∞": Infinity.MINUS,
}


class EffectiveDimension(BaseModel):
    """
    有效维数 m

    可取值为 (−∞,1] ∪ [n,+∞] 以及符号 ±∞。m = ±∞ 时修正项 V*⊗V*/(m−n) 恒为 0。
    Liouville 类结论只用 [−∞,0] ∪ [n,+∞] 这一部分, 见 in_liouville_range。
    """

    value: Union[Infinity, float] = Field(..., description="m 的取值, 或 ±∞")
    dim: int = Field(..., ge=1, description="流形维数 n")

    @field_validator("value", mode="before")
    @classmethod
    def normalize_value(cls, v):
        if isinstance(v, Infinity):
            return v
        if isinstance(v, str):
            key = v.strip().lower()
            if key in _INF_ALIASES:
                return _INF_ALIASES[key]
            return float(key)
        if isinstance(v, (int, float)) and math.isinf(v):
            return Infinity.PLUS if v > 0 else Infinity.MINUS
        return v

    @model_validator(mode="after")
    def check_range(self) -> "EffectiveDimension":
        if isinstance(self.value, Infinity):
            return self
        if math.isnan(self.value):
            raise ValueError("m must not be NaN")
        if 1.0 < self.value < self.dim:
            raise ValueError(
                f"effective dimension m={self.value} lies in the forbidden interval (1, {self.dim})"
            )
        return self

    @property
    def is_infinite(self) -> bool:
        return isinstance(self.value, Infinity)

    def as_float(self) -> float:
        if self.value is Infinity.PLUS:
            return math.inf
        if self.value is Infinity.MINUS:
            return -math.inf
        return float(self.value)

    def equals_dim(self) -> bool:
        return not self.is_infinite and float(self.value) == float(self.dim)

    def correction_coefficient(self) -> float:
        """1/(m−n); m=±∞ 时精确为 0。m=n 时返回 0 (此时要求 V ≡ 0)"""
        if self.is_infinite or self.equals_dim():
            return 0.0
        return 1.0 / (float(self.value) - self.dim)

    def n_minus_m(self) -> float:
        return self.dim - self.as_float()

    def in_comparison_range(self) -> bool:
        """广义比较定理的参数范围 m ≤ 1 (有限)"""
        return not self.is_infinite and float(self.value) <= 1.0

    def in_liouville_range(self) -> bool:
        """[−∞,0] ∪ [n,+∞]"""
        if self.is_infinite:
            return True
        return float(self.value) <= 0.0 or float(self.value) >= self.dim

    def label(self) -> str:
        if self.is_infinite:
            return self.value.value
        return repr(float(self.value))


class ManifoldSpec(BaseModel):
    """模型流形的声明式描述 (配置文件中的 [manifold] / [target] 段)"""

    kind: ManifoldKind = Field(..., description="流形类型")
    dim: int = Field(..., ge=1, description="维数")
    kappa: float = Field(0.0, description="常截面曲率 κ")
    warp: Optional[str] = Field(None, description="旋转对称模型的 warp 函数 φ(r)")

    @model_validator(mode="after")
    def check_kind(self) -> "ManifoldSpec":
        if self.kind != ManifoldKind.EUCLIDEAN and self.dim < 2:
            raise ValueError(f"{self.kind.value} manifolds require dim >= 2")
        if self.kind == ManifoldKind.EUCLIDEAN and self.kappa != 0.0:
            raise ValueError("euclidean kind requires kappa = 0")
        if self.kind == ManifoldKind.HYPERBOLIC and not self.kappa < 0.0:
            raise ValueError("hyperbolic kind requires kappa < 0")
        if self.kind == ManifoldKind.SPHERE and not self.kappa > 0.0:
            raise ValueError("sphere kind requires kappa > 0")
        if self.kind == ManifoldKind.ROTATIONALLY_SYMMETRIC and not self.warp:
            raise ValueError("rotationally_symmetric kind requires a warp expression")
        return self


class DriftSpec(BaseModel):
    """漂移场 V 的声明式描述, 四种给法恰好选一种 (全部缺省时为 V ≡ 0)"""

    potential: Optional[str] = Field(None, description="V = ∇f 的势函数 f")
    components: Optional[List[str]] = Field(None, description="逐分量表达式")
    constant: Optional[List[float]] = Field(None, description="常向量场")
    linear: Optional[List[List[float]]] = Field(None, description="线性场 V(x) = A x")

    @model_validator(mode="after")
    def check_exclusive(self) -> "DriftSpec":
        given = [
            name
            for name in ("potential", "components", "constant", "linear")
            if getattr(self, name) is not None
        ]
        if len(given) > 1:
            raise ValueError(f"drift must be given in exactly one form, got {', '.join(given)}")
        return self


class CurvatureSample(BaseModel):
    """Ric_V^m 的随机采样结果"""

    min_ratio: float = Field(..., description="min Ric_V^m(v,v)/|v|²")
    n_samples: int = Field(..., description="采样数")
    radius: float = Field(..., description="采样球半径")
    argmin_point: List[float] = Field(..., description="取到最小值的点")
    nonnegative: bool = Field(..., description="最小值是否 ≥ −tol")
