"""PyTorch backend."""

import numpy as np
from qibo import __version__
from qibo.backends.numpy import NumpyBackend


class PyTorchBackend(NumpyBackend):
    def __init__(self):
        super().__init__()
        import torch  # pylint: disable=import-outside-toplevel

        self.np = torch

        self.name = "pytorch"
        self.versions = {
            "qibo": __version__,
            "numpy": np.__version__,
            "torch": self.np.__version__,
        }

        self.dtype = self._torch_dtype(self.dtype)
        self.device = self.np.device("cpu")

    def _torch_dtype(self, dtype):
        if isinstance(dtype, self.np.dtype):
            return dtype
        return getattr(self.np, np.dtype(dtype).name)

    def cast(
        self,
        x,
        dtype=None,
        copy: bool = False,
    ):
        """Casts input as a Torch tensor of the specified dtype.

        Args:
            x (Union[torch.Tensor, np.ndarray, list, complex]): Input to be casted.
            dtype (Union[str, torch.dtype, np.dtype, type]): Target data type.
                If ``None``, the default dtype of the backend is used.
                Defaults to ``None``.
            copy (bool, optional): If ``True``, the input tensor is copied before casting.
                Defaults to ``False``.
        """
        dtype = self.dtype if dtype is None else self._torch_dtype(dtype)

        if isinstance(x, self.np.Tensor):
            x = x.to(dtype)
        else:
            x = self.np.as_tensor(np.asarray(x), dtype=dtype, device=self.device)

        if copy:
            return x.clone()

        return x

    def to_numpy(self, x):
        if isinstance(x, self.np.Tensor):
            return x.numpy(force=True)
        return np.asarray(x)

    def calculate_eigenvalues(self, matrix, k: int = 6, hermitian: bool = True):
        if hermitian:
            return self.np.linalg.eigvalsh(matrix)  # pylint: disable=not-callable
        return self.np.linalg.eigvals(matrix)  # pylint: disable=not-callable
