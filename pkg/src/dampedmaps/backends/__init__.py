from typing import Union

import numpy as np
from qibo.backends import NumpyBackend
from qibo.backends import construct_backend as construct_qibo_backend
from qibo.config import raise_error

from dampedmaps.backends.jax import JaxBackend
from dampedmaps.backends.pytorch import PyTorchBackend
from dampedmaps.backends.tensorflow import TensorflowBackend
from dampedmaps.exceptions import EigFailure

PLATFORMS = ["numpy", "tensorflow", "pytorch", "jax"]
DampedMapsBackend = Union[NumpyBackend, TensorflowBackend, PyTorchBackend, JaxBackend]


class MetaBackend:
    """Meta-backend class which takes care of loading the linear-algebra backends."""

    @staticmethod
    def load(platform: str) -> DampedMapsBackend:
        """Load a backend.

        Args:
            platform (str): Name of the backend to load.
        Returns:
            qibo.backends.abstract.Backend: The loaded backend.
        """

        if platform == "numpy":
            return construct_qibo_backend("numpy")
        elif platform == "tensorflow":
            return TensorflowBackend()
        elif platform == "pytorch":
            return PyTorchBackend()
        elif platform == "jax":
            return JaxBackend()
        else:
            raise_error(
                ValueError,
                f"Backend {platform} is not available. The available backends are {PLATFORMS}.",
            )

    def list_available(self) -> dict:
        """List all the available backends."""
        available_backends = {}
        for platform in PLATFORMS:
            try:
                MetaBackend.load(platform)
                available = True
            except:  # pragma: no cover
                available = False
            available_backends[platform] = available
        return available_backends


def construct_backend(backend=None) -> DampedMapsBackend:
    """Return ``backend`` itself if already constructed, otherwise load it by name."""
    if backend is None:
        backend = "numpy"
    if isinstance(backend, str):
        return MetaBackend.load(backend)
    return backend


def non_normal_eigenvalues(backend: DampedMapsBackend, matrix) -> np.ndarray:
    """Eigenvalues of a general square matrix, with multiplicity, as a numpy array.

    Args:
        backend (qibo.backends.abstract.Backend): backend carrying out the eigensolve.
        matrix (ndarray): dense complex square matrix.
    Raises:
        EigFailure: if the solver fails or returns non-finite or missing values.
    """
    size = np.shape(matrix)[0]
    try:
        eigenvalues = backend.calculate_eigenvalues(backend.cast(matrix), hermitian=False)
        eigenvalues = np.asarray(backend.to_numpy(eigenvalues), dtype=np.complex128).ravel()
    except Exception as exc:  # solver specific failure types
        raise_error(EigFailure, f"Dense eigensolver failed on {backend.name}: {exc}")
    if eigenvalues.size != size or not np.all(np.isfinite(eigenvalues)):
        raise_error(
            EigFailure,
            f"Dense eigensolver on {backend.name} returned {eigenvalues.size} "
            f"finite values for a matrix of size {size}.",
        )
    return eigenvalues
