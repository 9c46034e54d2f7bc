"""Weyl quantization of trigonometric polynomials on the torus."""

import numpy as np
from qibo.config import raise_error

from dampedmaps.exceptions import Aliasing
from dampedmaps.models.observables import TorusObservable
from dampedmaps.models.quantization.translation import translation_entries


def check_aliasing(symbol: TorusObservable, N: int):
    if N <= 2 * symbol.radius:
        raise_error(
            Aliasing,
            f"Dimension N={N} aliases modes of radius {symbol.radius}; "
            f"need N > {2 * symbol.radius}.",
        )


def weyl_quantize(symbol: TorusObservable, N: int) -> np.ndarray:
    """``Op_N(q) = sum_m c_m T_N(m)``.

    Args:
        symbol (TorusObservable): the symbol to quantize.
        N (int): Hilbert space dimension.
    Returns:
        ndarray: the ``N x N`` matrix, Hermitian for real symbols.
    """
    check_aliasing(symbol, N)
    operator = np.zeros((N, N), dtype=complex)
    for m, c in sorted(symbol.coefficients.items()):
        rows, columns, values = translation_entries(m, N)
        operator[rows, columns] += c * values
    return operator
