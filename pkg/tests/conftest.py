import numpy as np
import pytest

from backend.forward import AcquisitionConfig, Medium
from backend.geometry import make_shape
from backend.sct import compute_w

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="session")
def medium():
    return Medium()


@pytest.fixture(scope="session")
def flower():
    return make_shape("flower", 256)


@pytest.fixture(scope="session")
def disk():
    return make_shape("disk", 256)


@pytest.fixture(scope="session")
def ellipse():
    return make_shape("ellipse", 256)


@pytest.fixture(scope="session")
def full_view():
    return AcquisitionConfig(R=3.0, Ns=91, Nr=91)


@pytest.fixture(scope="session")
def flower_w(flower, medium):
    """W of the centred flower at omega = 2 pi, order 30."""
    return compute_w(flower, medium, TWO_PI, 30)
