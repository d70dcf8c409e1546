import os
import sys

import hypothesis
import numpy as np
import pytest

# Run from repo root so app and data are importable
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from data.image_loader import GrayImage  # noqa: E402

np.seterr(all="warn")

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end runs that take tens of seconds")


def random_image(rng: np.random.Generator, height: int, width: int, levels: int = 256) -> GrayImage:
    return GrayImage(rng.integers(0, levels, size=(height, width)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def constant_image():
    return GrayImage(np.full((5, 5), 100))
