"""
比较定理层的数据模型
"""

import math
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from common.errors import CutLocusError, InputError
from geometry import DriftField, EffectiveDimension, ManifoldModel, deterministic_directions


class ConditionId(str, Enum):
    A1 = "A1"
    A2 = "A2"
    A3 = "A3"
    A1_STAR = "A1*"
    A2_STAR = "A2*"
    A3_STAR = "A3*"
    B1 = "B1"
    B2 = "B2"
    B3 = "B3"

    @property
    def index(self) -> int:
        return int(self.value[1])

    @property
    def family(self) -> str:
        return "B" if self.value.startswith("B") else ("A*" if self.value.endswith("*") else "A")


class RadialFrame(BaseModel):
    """
    以 p 为中心的射线标架: 基点、p 处 g-单位方向集合、最大半径 (严格小于割迹半径)
    """

    base_point: List[float] = Field(..., description="基点 p 的坐标")
    ray_directions: List[List[float]] = Field(..., description="p 处的 g-单位切向量")
    max_radius: float = Field(..., gt=0, description="射线最大弧长")

    @classmethod
    def build(
        cls,
        manifold: ManifoldModel,
        directions: np.ndarray,
        max_radius: float,
        base_point: Optional[np.ndarray] = None,
    ) -> "RadialFrame":
        p = np.zeros(manifold.dim) if base_point is None else np.asarray(base_point, dtype=float)
        if max_radius >= manifold.cut_locus_radius:
            raise CutLocusError(
                f"max_radius {max_radius} reaches the cut locus at {manifold.cut_locus_radius}",
                param="max_radius",
            )
        dirs = np.atleast_2d(np.asarray(directions, dtype=float))
        if dirs.shape[-1] != manifold.dim or dirs.shape[0] == 0:
            raise InputError("ray directions must be a non-empty (k, n) array", param="directions")
        units = manifold.unit_direction(p, dirs)
        return cls(
            base_point=[float(c) for c in p],
            ray_directions=units.tolist(),
            max_radius=float(max_radius),
        )

    @classmethod
    def default(
        cls, manifold: ManifoldModel, n_directions: int = 16, max_radius: float = 8.0
    ) -> "RadialFrame":
        """坐标轴方向加黄金角/固定种子方向, 半径截断在割迹半径的 0.95 倍以内"""
        radius = min(max_radius, 0.95 * manifold.cut_locus_radius)
        return cls.build(manifold, deterministic_directions(manifold.dim, n_directions), radius)

    def point(self) -> np.ndarray:
        return np.asarray(self.base_point, dtype=float)

    def directions(self) -> np.ndarray:
        return np.asarray(self.ray_directions, dtype=float)


class AuditRow(BaseModel):
    condition_id: ConditionId
    radius: float
    lhs: float
    rhs: float
    d_witness: float
    passed: bool


class ConditionReport(BaseModel):
    """一个条件 (A1–A3, A1*–A3*, B1–B3) 的审计结果"""

    condition_id: ConditionId
    holds: bool
    witness_constant: float = Field(1.0, ge=1.0, description="见证常数 D ≥ 1")
    violation_points: List[Tuple[float, float]] = Field(default_factory=list)
    growth_slope: float = Field(0.0, description="最后一个倍频程上所需 D 的 log-log 斜率")
    rows: List[AuditRow] = Field(default_factory=list)
    implied_by: List[str] = Field(default_factory=list, description="前提成立、据此应推出本条件的定理链")
    implication_consistent: bool = True
    note: str = ""

    @model_validator(mode="after")
    def check_witnesses(self) -> "ConditionReport":
        if self.holds and self.violation_points:
            raise ValueError("a condition that holds cannot carry violation points")
        return self


class ImplicationCheck(BaseModel):
    premise: str
    conclusion: ConditionId
    premise_holds: bool
    conclusion_holds: bool

    @property
    def consistent(self) -> bool:
        return (not self.premise_holds) or self.conclusion_holds


class ComparisonInput(BaseModel):
    """比较定理的输入: (M, g, V, m), 曲率参数 κ 与常数 C_p"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    manifold: ManifoldModel
    drift: DriftField
    m: EffectiveDimension
    kappa: float = 0.0
    c_p: float = Field(1.0, gt=0)
    base_point: Optional[List[float]] = None

    @model_validator(mode="after")
    def check_consistency(self) -> "ComparisonInput":
        if self.m.dim != self.manifold.dim:
            raise ValueError(f"m is declared for n={self.m.dim} but the manifold has n={self.manifold.dim}")
        if self.drift.dim != self.manifold.dim:
            raise ValueError("drift dimension does not match the manifold")
        if not math.isfinite(self.kappa):
            raise ValueError("kappa must be finite")
        return self

    def point(self) -> np.ndarray:
        if self.base_point is None:
            return np.zeros(self.manifold.dim)
        return np.asarray(self.base_point, dtype=float)

    @property
    def n_minus_m(self) -> float:
        return self.m.n_minus_m()
