import numpy as np
import pytest
from qibo.backends import NumpyBackend

from dampedmaps.backends import MetaBackend, construct_backend, non_normal_eigenvalues
from dampedmaps.exceptions import EigFailure


def test_metabackend_load(backend):
    assert isinstance(MetaBackend.load(backend.name), backend.__class__)


def test_metabackend_load_error():
    with pytest.raises(ValueError):
        MetaBackend.load("nonexistent-backend")


def test_metabackend_list_available():
    available = MetaBackend().list_available()
    assert set(available) == {"numpy", "tensorflow", "pytorch", "jax"}
    assert available["numpy"]


def test_construct_backend():
    assert isinstance(construct_backend(None), NumpyBackend)
    backend = NumpyBackend()
    assert construct_backend(backend) is backend
    assert construct_backend("numpy").name == "numpy"


def test_backend_versions(backend):
    assert "qibo" in backend.versions
    assert "numpy" in backend.versions


def test_eigenvalues_of_triangular_matrix(backend):
    matrix = np.diag([0.5, 0.25j, -1.0]) + np.triu(np.ones((3, 3)), k=1)
    eigenvalues = np.sort_complex(non_normal_eigenvalues(backend, matrix))
    np.testing.assert_allclose(eigenvalues, np.sort_complex([0.5, 0.25j, -1.0]), atol=1e-6)


def test_eigenvalues_of_rotation(backend):
    theta = 0.3
    rotation = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    eigenvalues = non_normal_eigenvalues(backend, rotation)
    assert eigenvalues.dtype == np.complex128
    np.testing.assert_allclose(np.abs(eigenvalues), [1.0, 1.0], atol=1e-6)
    np.testing.assert_allclose(sorted(np.angle(eigenvalues)), [-theta, theta], atol=1e-6)


def test_hermitian_eigenvalues(backend):
    matrix = np.array([[2.0, 1.0j], [-1.0j, 2.0]])
    eigenvalues = backend.to_numpy(backend.calculate_eigenvalues(backend.cast(matrix)))
    np.testing.assert_allclose(np.sort(np.real(eigenvalues)), [1.0, 3.0], atol=1e-6)


def test_eigensolver_rejects_non_finite_input():
    matrix = np.array([[np.nan, 0.0], [0.0, 1.0]])
    with pytest.raises(EigFailure):
        non_normal_eigenvalues(NumpyBackend(), matrix)


def test_cast_round_trip(backend):
    a = np.array([[1, 2], [3, 4]])
    restored = np.asarray(backend.to_numpy(backend.cast(a)))
    assert restored.dtype == np.complex128
    np.testing.assert_allclose(restored, a)
