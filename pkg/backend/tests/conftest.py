import numpy as np
import pytest

from rrt_lab.env import EnvModel, build_environment, environment_from_path
from rrt_lab.rng import replicate_stream
from rrt_lab.walk import WalkPath


@pytest.fixture
def stream():
    return replicate_stream(20240601, 0)


@pytest.fixture
def constant_env():
    return build_environment(EnvModel(kind="constant"), 200)


@pytest.fixture
def gaussian_env():
    """A fixed product-form environment of size 200."""
    rng = replicate_stream(7, 0)
    s = np.concatenate(([0.0], np.cumsum(rng.normal(size=200))))
    return environment_from_path(WalkPath(s))
