import numpy as np
import pytest

from glyphcycle.autodiff.tensor import default_tape


@pytest.fixture(autouse=True)
def _clean_tape():
    default_tape().reset()
    yield
    default_tape().reset()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
