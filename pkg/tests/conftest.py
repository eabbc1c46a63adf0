import math

import numpy as np
import pytest

from nlac import Grid, KernelSpec, ModelParams, build_stencil

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def params():
    return ModelParams(eps=0.1, kappa=2.0)


@pytest.fixture(scope="session")
def grid16():
    return Grid(16, TWO_PI)


@pytest.fixture(scope="session")
def stencil16(grid16):
    return build_stencil(KernelSpec(alpha=1.0, delta=2.0), grid16)


@pytest.fixture()
def rng():
    return np.random.default_rng(20180409)
