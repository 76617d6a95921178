from functools import lru_cache
import os
from pathlib import Path
from typing import Optional
from dotenv import load_dotenv

# 加载工作目录下的.env文件
load_dotenv()


current_file_dir = Path(__file__).resolve().parent


def _env_int(name: str, default: Optional[int]) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    return int(float(raw))


class Config:

    # ==================== 输出与实验配置 ====================

    # 结果目录 (CSV / JSON)
    OUTPUT_DIR: str = os.getenv("LAB_OUTPUT_DIR", "results")
    # 随包发布的实验配置目录
    EXPERIMENT_DIR: str = os.getenv(
        "LAB_EXPERIMENT_DIR", str(current_file_dir / "experiments")
    )

    # ==================== 统计判定配置 ====================

    # 单侧检验的 z 松弛量, 全局唯一来源
    Z_SLACK: float = float(os.getenv("LAB_Z_SLACK", 3.0))
    CONFIDENCE: float = float(os.getenv("LAB_CONFIDENCE", 0.99))

    # ==================== Monte-Carlo 引擎配置 ====================

    BATCH_SIZE: int = _env_int("LAB_BATCH_SIZE", 2048)
    MAX_WORKERS: Optional[int] = _env_int("LAB_MAX_WORKERS", None)
    STEP_BUDGET: int = _env_int("LAB_STEP_BUDGET", 10_000_000)  # 每条路径
    CENSOR_CAP: float = float(os.getenv("LAB_CENSOR_CAP", 0.01))
    DEFAULT_DT: float = float(os.getenv("LAB_DEFAULT_DT", 1e-4))

    # ==================== 数值微分与积分配置 ====================

    FD_STEP: float = float(os.getenv("LAB_FD_STEP", 1e-4))
    FD_OUTER_STEP: float = float(os.getenv("LAB_FD_OUTER_STEP", 1e-3))
    MAP_FD_STEP: float = float(os.getenv("LAB_MAP_FD_STEP", 1e-5))
    QUAD_PANELS_PER_UNIT: int = _env_int("LAB_QUAD_PANELS_PER_UNIT", 1000)

    # ==================== 调和映射求解器配置 ====================

    SOLVER_MAX_ITER: int = _env_int("LAB_SOLVER_MAX_ITER", 500)
    SOLVER_MAX_HALVINGS: int = _env_int("LAB_SOLVER_MAX_HALVINGS", 20)


@lru_cache()
def get_config() -> Config:
    """Get the configuration instance."""
    return Config()
