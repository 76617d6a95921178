"""
Monte-Carlo 统计工具: 估计量、固定树序归约、单侧判定
"""

from enum import Enum
from typing import Sequence

import numpy as np
from pydantic import BaseModel, Field, model_validator

from config.config import get_config


class VerdictStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    BOUNDARY = "boundary"
    INCONCLUSIVE = "inconclusive"
    LOW_POWER = "low-power"


class McEstimate(BaseModel):
    """Monte-Carlo 估计: 均值、标准误差与样本数"""

    mean: float = Field(..., description="样本均值")
    stderr: float = Field(..., description="均值的标准误差")
    n_samples: int = Field(..., description="样本数")
    confidence: float = Field(0.99, description="置信水平")

    @model_validator(mode="after")
    def check_stderr(self) -> "McEstimate":
        if not self.stderr >= 0.0:
            raise ValueError(f"stderr must be nonnegative, got {self.stderr}")
        if self.n_samples < 1:
            raise ValueError("McEstimate requires at least one sample")
        return self

    @classmethod
    def from_samples(cls, samples: np.ndarray, confidence: float | None = None) -> "McEstimate":
        values = np.asarray(samples, dtype=float).ravel()
        n = values.size
        if n == 0:
            raise ValueError("cannot estimate from an empty sample")
        mean = pairwise_sum(values) / n
        if n > 1:
            var = pairwise_sum((values - mean) ** 2) / (n - 1)
            stderr = float(np.sqrt(var / n))
        else:
            stderr = 0.0
        return cls(
            mean=float(mean),
            stderr=stderr,
            n_samples=n,
            confidence=confidence if confidence is not None else get_config().CONFIDENCE,
        )

    def upper(self, z: float | None = None) -> float:
        return self.mean + slack(self.stderr, z)

    def lower(self, z: float | None = None) -> float:
        return self.mean - slack(self.stderr, z)


def pairwise_sum(values: Sequence[float] | np.ndarray) -> float:
    """
    固定树序的成对求和

    归约顺序只取决于元素个数, 与产生这些元素的线程数无关。
    """
    arr = np.asarray(values, dtype=float).ravel()
    n = arr.size
    if n == 0:
        return 0.0
    if n <= 256:
        return float(np.sum(arr))
    half = n // 2
    return pairwise_sum(arr[:half]) + pairwise_sum(arr[half:])


def slack(stderr: float, z: float | None = None) -> float:
    """单侧松弛量 z·stderr, z 默认取配置中的 Z_SLACK"""
    return (get_config().Z_SLACK if z is None else z) * stderr


def verdict_at_most(mean: float, stderr: float, bound: float, z: float | None = None) -> VerdictStatus:
    """
    判定 E[X] ≤ bound

    mean + z·se ≤ bound 为 pass; |mean − bound| ≤ z·se 为 boundary; 否则 fail。
    """
    s = slack(stderr, z)
    tol = 1e-12 * max(1.0, abs(bound))
    if mean + s <= bound + tol:
        return VerdictStatus.PASS
    if abs(mean - bound) <= s + tol:
        return VerdictStatus.BOUNDARY
    return VerdictStatus.FAIL


def verdict_at_least(mean: float, stderr: float, bound: float, z: float | None = None) -> VerdictStatus:
    """判定 E[X] ≥ bound, 与 verdict_at_most 对称"""
    return verdict_at_most(-mean, stderr, -bound, z)


def verdict_close(mean: float, stderr: float, target: float, z: float | None = None) -> VerdictStatus:
    """双侧判定: |mean − target| ≤ z·se"""
    s = slack(stderr, z)
    return VerdictStatus.PASS if abs(mean - target) <= s + 1e-12 * max(1.0, abs(target)) else VerdictStatus.FAIL


def combine_status(statuses: Sequence[VerdictStatus]) -> VerdictStatus:
    """把若干子判定合并为一个: fail 优先, 其次 low-power / inconclusive / boundary"""
    order = [
        VerdictStatus.FAIL,
        VerdictStatus.LOW_POWER,
        VerdictStatus.INCONCLUSIVE,
        VerdictStatus.BOUNDARY,
    ]
    for status in order:
        if status in statuses:
            return status
    return VerdictStatus.PASS
