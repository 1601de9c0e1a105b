import numpy as np
import pytest

from warpkit.config import WarpConfig
from warpkit.dispatch import make_executor


@pytest.fixture
def cfg32():
    return WarpConfig.for_warp_size(32)


@pytest.fixture
def cfg64():
    return WarpConfig.for_warp_size(64)


@pytest.fixture
def ref_exec():
    return make_executor("ref")


@pytest.fixture
def warp32_exec():
    return make_executor("warp32")


@pytest.fixture
def warp64_exec():
    return make_executor("warp64")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
