import math

import numpy as np
import pytest

from drivenbjj.dynamics import PropagatorConfig
from drivenbjj.model import DriveParams, ModelParams

# Parameter set used throughout: lambda = 5, bi-harmonic drive
# E1 = 0.4, E2 = 0.2, omega = 0.5 (period T = 4 pi).
LAMBDA = 5.0
E1, E2, OMEGA = 0.4, 0.2, 0.5
PERIOD = 2.0 * math.pi / OMEGA


@pytest.fixture
def drive():
    return DriveParams(E1, E2, OMEGA, 0.0)


@pytest.fixture
def cfg():
    return PropagatorConfig()


def model(n: int) -> ModelParams:
    return ModelParams.from_lambda(n, LAMBDA)


def random_state(n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    return amps / np.linalg.norm(amps)
