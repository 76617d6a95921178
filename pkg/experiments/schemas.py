"""
实验层的数据模型: 实验配置、单项检验的结论与整套结果
"""

import zlib
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from common.stats import VerdictStatus, slack
from geometry import DriftSpec, ManifoldSpec, ModelBundle


class CheckSpec(BaseModel):
    """配置文件中的一个 [check:<id>] 段"""

    check_id: str
    params: Dict[str, str] = Field(default_factory=dict, description="未经解析的原始参数")
    line: Optional[int] = Field(None, exclude=True, description="段首所在行号 (1 起)")
    param_lines: Dict[str, int] = Field(default_factory=dict, exclude=True)


class ExperimentConfig(BaseModel):
    """一个实验文件的完整内容"""

    experiment_id: str = Field(..., min_length=1)
    seed: int = Field(..., ge=0, lt=2**63, description="主种子, 必填")
    description: str = ""
    manifold: ManifoldSpec
    drift: DriftSpec = Field(default_factory=DriftSpec, description="全部缺省即 V ≡ 0")
    m: str = "+inf"
    target: Optional[ManifoldSpec] = None
    checks: List[CheckSpec] = Field(default_factory=list)


class CheckOutcome(BaseModel):
    """检验函数的返回值, 由 runner 补上 check_id / 模块 / 锚点后成为 Verdict"""

    status: VerdictStatus
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    margin: Optional[float] = Field(None, description="正值表示满足, pass 时 ≥ −(z·stderr + tolerance)")
    stderr: float = 0.0
    tolerance: float = 0.0
    note: str = ""
    rows: List[Dict[str, Any]] = Field(default_factory=list, description="明细 CSV 的行")


class Verdict(BaseModel):
    """一项检验的结论"""

    check_id: str
    module: str
    anchor: str = Field(..., min_length=1, description="文档索引中的结论名")
    status: VerdictStatus
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    margin: Optional[float] = None
    stderr: float = 0.0
    tolerance: float = 0.0
    note: str = ""
    error: Optional[Dict[str, Any]] = None

    @model_validator(mode="after")
    def check_margin(self) -> "Verdict":
        if self.status == VerdictStatus.PASS and self.margin is not None:
            scale = max(1.0, abs(self.rhs)) if self.rhs is not None else 1.0
            floor = -(slack(self.stderr) + self.tolerance + 1e-9 * scale)
            if self.margin < floor:
                raise ValueError(f"{self.check_id}: pass verdict with margin {self.margin:.3e} < {floor:.3e}")
        return self


class CheckContext(BaseModel):
    """
    一次套件运行中所有检验共享的上下文

    state 保存前面检验的产物 (例如条件审计报告), 供后面的检验取见证常数。
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: ExperimentConfig
    bundle: ModelBundle
    state: Dict[str, Any] = Field(default_factory=dict)

    def seed_for(self, check_id: str) -> int:
        """由实验主种子与 check_id 派生的 63 位种子"""
        seq = np.random.SeedSequence(self.config.seed, spawn_key=(zlib.crc32(check_id.encode("utf-8")),))
        return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


class SuiteResult(BaseModel):
    experiment_id: str
    seed: int
    verdicts: List[Verdict] = Field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 1 if any(v.status == VerdictStatus.FAIL for v in self.verdicts) else 0

    def counts(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for v in self.verdicts:
            out[v.status.value] = out.get(v.status.value, 0) + 1
        return dict(sorted(out.items()))
