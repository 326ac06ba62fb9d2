import numpy as np
import pytest

from twinbeam import _backend
from twinbeam.physmodel import AtomicMedium, FieldGeometry, default_params, load_params


@pytest.fixture(scope="session")
def medium():
    return AtomicMedium.rb85_default()


@pytest.fixture(scope="session")
def geometry(medium):
    return FieldGeometry.from_medium(medium)


@pytest.fixture(scope="session")
def config():
    return load_params(default_params())


@pytest.fixture(params=_backend.available())
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
