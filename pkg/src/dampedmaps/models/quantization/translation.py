"""Phase-space translations on the N-dimensional torus Hilbert space."""

from dataclasses import dataclass

import numpy as np
from qibo.config import raise_error

from dampedmaps.models.dynamics import Mode


@dataclass(frozen=True, eq=False)
class TranslationOperator:
    """``T_N(m) = e^{i pi m1 m2 / N} S^{m1} D^{m2}``.

    ``S`` is the cyclic shift ``|j> -> |j + 1>`` and ``D = diag(omega^j)`` with
    ``omega = e^{2 pi i / N}``; ``DS = omega SD``. The symmetric phase makes
    ``T_N(m)^dagger = T_N(-m)``, so real symbols quantize to Hermitian matrices.
    """

    m: Mode
    N: int
    matrix: np.ndarray

    def phase_with(self, other: "TranslationOperator") -> complex:
        """Unimodular phase in ``T(m) T(m') = phase * T(m + m')``."""
        (m1, m2), (n1, n2) = self.m, other.m
        return np.exp(1j * np.pi * (m2 * n1 - m1 * n2) / self.N)


def translation_entries(m: Mode, N: int):
    """Row indices and values of the single nonzero entry in every column."""
    m1, m2 = int(m[0]), int(m[1])
    columns = np.arange(N)
    rows = (columns + m1) % N
    # exponents reduced modulo 2N keep the phases accurate for large modes
    exponents = (m1 * m2 + 2 * m2 * columns) % (2 * N)
    return rows, columns, np.exp(1j * np.pi * exponents / N)


def translation_operator(m: Mode, N: int) -> TranslationOperator:
    """Dense matrix of the translation ``T_N(m)``.

    Args:
        m (tuple): lattice point ``(m1, m2)``.
        N (int): Hilbert space dimension, at least 2.
    """
    if N < 2:
        raise_error(ValueError, f"Hilbert dimension must be at least 2, got {N}.")
    rows, columns, values = translation_entries(m, N)
    matrix = np.zeros((N, N), dtype=complex)
    matrix[rows, columns] = values
    return TranslationOperator((int(m[0]), int(m[1])), N, matrix)
