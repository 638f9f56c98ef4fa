import math

import pytest

from islnet import ConstellationConfig, WalkerKind


@pytest.fixture
def reference_config() -> ConstellationConfig:
    return ConstellationConfig(24, 36, 0, math.radians(53.0), 1000.0, WalkerKind.DELTA)


@pytest.fixture
def tiny_config() -> ConstellationConfig:
    return ConstellationConfig(8, 10, 1, math.radians(53.0), 1000.0, WalkerKind.DELTA)
