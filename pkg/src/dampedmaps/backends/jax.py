from qibo import __version__
from qibo.backends.numpy import NumpyBackend


class JaxBackend(NumpyBackend):
    def __init__(self):
        super().__init__()
        self.name = "jax"

        import jax
        import jax.numpy as jnp  # pylint: disable=import-error
        import numpy

        jax.config.update("jax_enable_x64", True)

        self.jax = jax
        self.numpy = numpy

        self.np = jnp
        self.versions = {"qibo": __version__, "numpy": numpy.__version__, "jax": jax.__version__}

    def cast(self, x, dtype=None, copy=False):
        if dtype is None:
            dtype = self.dtype
        if copy:
            return self.np.array(x, dtype=dtype)
        return self.np.asarray(x, dtype=dtype)

    def to_numpy(self, x):
        return self.numpy.asarray(x)

    def calculate_eigenvalues(self, matrix, k: int = 6, hermitian: bool = True):
        if hermitian:
            return self.np.linalg.eigvalsh(matrix)
        # nonsymmetric eigendecomposition is only implemented on CPU
        with self.jax.default_device(self.jax.devices("cpu")[0]):
            return self.np.linalg.eigvals(matrix)
