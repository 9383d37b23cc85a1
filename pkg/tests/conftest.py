"""Shared fixtures for the fracsob test suite."""

import os

import numpy as np
import pytest

try:
    from hypothesis import HealthCheck, settings

    settings.register_profile(
        "fracsob",
        derandomize=True,
        deadline=None,
        max_examples=25,
        suppress_health_check=[HealthCheck.too_slow],
    )
    settings.load_profile("fracsob")
except ImportError:
    pass


@pytest.fixture
def rng():
    seed = int(os.environ.get("FRACSOB_SEED", "0"))
    return np.random.default_rng(seed)


@pytest.fixture
def circle64():
    theta = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
    return np.column_stack([np.cos(theta), np.sin(theta)])
