import numpy as np
import pytest
from hypothesis import settings

from sceneroute.imgproc import GrayImage

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")


def make_image(pixels) -> GrayImage:
    return GrayImage(np.asarray(pixels, dtype=np.uint8))


@pytest.fixture
def const_canvas():
    return make_image(np.full((192, 192), 128))


@pytest.fixture
def step_canvas():
    px = np.zeros((192, 192), dtype=np.uint8)
    px[:, 96:] = 255
    return make_image(px)


@pytest.fixture
def noise_canvas():
    rng = np.random.default_rng(2024)
    return make_image(rng.integers(0, 256, (192, 192)))


@pytest.fixture
def gradient_canvas():
    ramp = np.linspace(30, 220, 192)
    return make_image(np.floor(np.tile(ramp, (192, 1)) + 0.5))
