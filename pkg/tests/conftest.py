import sys
from pathlib import Path

import numpy as np
import pytest

# 添加项目根目录到Python路径
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from geometry import EffectiveDimension, EuclideanSpace, StereographicSpace  # noqa: E402

SEED = 20240611


@pytest.fixture(scope="function")
def rng():
    """Fixed-seed generator, identical numbers on every run."""
    return np.random.default_rng(SEED)


@pytest.fixture(scope="session")
def plane():
    return EuclideanSpace(2)


@pytest.fixture(scope="session")
def hyperbolic_plane():
    return StereographicSpace(2, -1.0)


@pytest.fixture(scope="session")
def unit_sphere():
    return StereographicSpace(2, 1.0)


@pytest.fixture(scope="session")
def m_infinite():
    return EffectiveDimension(value="+inf", dim=2)


def project_root() -> Path:
    return Path(__file__).resolve().parent.parent
