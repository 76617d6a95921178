"""
扩散模拟的数据模型
"""

from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from common.stats import McEstimate, VerdictStatus


class RngSpec(BaseModel):
    """
    计数器型随机流的标识

    (master_seed, stream_id) 相同时产生的增量逐位相同, 与执行顺序和并行度无关。
    """

    master_seed: int = Field(..., ge=0, lt=2**64, description="主种子 (64 位)")
    stream_id: int = Field(0, ge=0, description="流编号 (批次或路径编号)")
    algorithm: Literal["philox"] = Field("philox", description="计数器型生成器")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(seq))

    def child(self, stream_id: int) -> "RngSpec":
        return RngSpec(master_seed=self.master_seed, stream_id=stream_id, algorithm=self.algorithm)


class DiffusionPath(BaseModel):
    """单条 Δ_V-扩散轨道"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray
    points: np.ndarray
    radial: np.ndarray
    brownian_increments: np.ndarray
    exited: Optional[Tuple[int, str]] = None
    local_time_residual: np.ndarray

    @model_validator(mode="after")
    def check_lengths(self) -> "DiffusionPath":
        k = len(self.times)
        if len(self.points) != k or len(self.radial) != k:
            raise ValueError("times, points and radial must have the same length")
        if len(self.brownian_increments) != k - 1 or len(self.local_time_residual) != k:
            raise ValueError("increments must have one entry per step")
        if k > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be increasing")
        return self

    @property
    def t_end(self) -> float:
        return float(self.times[-1])


class EnsembleResult(BaseModel):
    """
    批量模拟结果, 行顺序为 (批次, 批内行号)

    functional 相关数组形状为 (F, T, N): F 个泛函, T 个观测时刻, N 条路径。
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    observe_times: np.ndarray
    points: np.ndarray  # (T, N, n)
    radial: np.ndarray  # (T, N)
    max_radial: np.ndarray  # (N,) 到 t_end 为止 r_p 的最大值
    exited: np.ndarray  # (N,) 是否离开停止球
    exit_times: np.ndarray  # (N,) 离开时刻, 未离开为 nan
    truncated: np.ndarray  # (N,) 是否因离开坐标卡而截断
    residual: np.ndarray  # (F, T, N) f(X_t) − f(X_0) − ∫ Lf ds
    quadratic_variation: np.ndarray  # (F, T, N) Σ (Δf − Lf dt)²
    carre_du_champ: np.ndarray  # (F, T, N) ∫ |∇f|² ds
    dt: float
    n_paths: int
    master_seed: int

    def time_index(self, t: float) -> int:
        idx = int(np.argmin(np.abs(self.observe_times - t)))
        if abs(self.observe_times[idx] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"time {t} is not an observe time")
        return idx


class StatRow(BaseModel):
    """一行统计检验结果 (也是 CSV 行)"""

    t: float
    statistic: str
    mean: float
    stderr: float
    bound: float
    verdict: VerdictStatus


class DiffusionReport(BaseModel):
    """扩散类检验的报告"""

    name: str
    status: VerdictStatus
    rows: List[StatRow] = Field(default_factory=list)
    estimates: List[McEstimate] = Field(default_factory=list)
    censored_fraction: float = 0.0
    truncated_fraction: float = 0.0
    note: str = ""

    def add(self, t: float, statistic: str, estimate: McEstimate, bound: float, verdict: VerdictStatus) -> None:
        self.rows.append(
            StatRow(t=t, statistic=statistic, mean=estimate.mean, stderr=estimate.stderr, bound=bound, verdict=verdict)
        )
        self.estimates.append(estimate)


class RecurrenceClass(BaseModel):
    """递归性扫描结果"""

    classification: Literal["recurrent", "transient", "inconclusive"]
    b_values: List[float]
    probabilities: List[McEstimate]
    scale_increments: List[float] = Field(default_factory=list)
    ratio: Optional[float] = None
    censored_fraction: float = 0.0
