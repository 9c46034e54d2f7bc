import pytest
from qibo.backends import NumpyBackend

from dampedmaps.backends.jax import JaxBackend
from dampedmaps.backends.pytorch import PyTorchBackend
from dampedmaps.backends.tensorflow import TensorflowBackend

# backends to be tested
BACKENDS = [
    "numpy",
    "tensorflow",
    "pytorch",
    "jax",
]


NAME2BACKEND = {
    "numpy": NumpyBackend,
    "tensorflow": TensorflowBackend,
    "pytorch": PyTorchBackend,
    "jax": JaxBackend,
}


@pytest.fixture
def backend(backend_name):
    yield NAME2BACKEND[backend_name]()


AVAILABLE_BACKENDS = []
for backend_name in BACKENDS:
    try:
        _backend = NAME2BACKEND[backend_name]()
        AVAILABLE_BACKENDS.append(backend_name)
    except (ModuleNotFoundError, ImportError):
        pass


def pytest_generate_tests(metafunc):
    if "backend_name" in metafunc.fixturenames:
        metafunc.parametrize("backend_name", AVAILABLE_BACKENDS)
