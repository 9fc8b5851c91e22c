import numpy as np
import pytest

from kernelopt.space import Box


@pytest.fixture
def unit_box():
    return Box(np.array([0.0]), np.array([1.0]))


@pytest.fixture
def unit_square():
    return Box(np.array([0.0, 0.0]), np.array([1.0, 1.0]))


@pytest.fixture
def sym_box():
    return Box(np.array([-2.0]), np.array([2.0]))
