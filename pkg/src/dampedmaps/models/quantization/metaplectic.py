"""Metaplectic propagators of quantized cat maps."""

from functools import lru_cache
from typing import Dict, Tuple

import numpy as np
from qibo.config import raise_error

from dampedmaps.config import EGOROV_CONVENTION, EGOROV_CHECK_DIMENSION, UNITARITY_TOL
from dampedmaps.exceptions import NotQuantizable, SingularKernel
from dampedmaps.models.dynamics import HyperbolicToralAutomorphism, Mode
from dampedmaps.models.quantization.translation import translation_operator

# unimodular normalization of the kernel
KERNEL_PHASE = np.exp(-1j * np.pi / 4)

CONVENTIONS = ("direct", "transpose", "inverse", "inverse-transpose")
EGOROV_CHECK_MODES = ((1, 0), (0, 1), (1, 1))


def check_quantizable(kappa: HyperbolicToralAutomorphism, N: int):
    """Raise unless the kernel is periodic on ``Z_N x Z_N``.

    Periodicity in the column index needs ``a b N`` even and in the row index
    ``c d N`` even: either the checkerboard condition holds, or ``N`` is even.
    """
    if N < 2:
        raise_error(NotQuantizable, f"Hilbert dimension must be at least 2, got {N}.")
    a, b, c, d = kappa.entries
    if b == 0:
        raise_error(SingularKernel, f"Map {kappa.entries} has b = 0; the kernel is singular.")
    if b < 0:
        raise_error(
            NotQuantizable, f"Map {kappa.entries} has b < 0; only b > 0 is supported."
        )
    checkerboard = (a * b) % 2 == 0 and (c * d) % 2 == 0
    if not checkerboard and N % 2 != 0:
        raise_error(
            NotQuantizable,
            f"Map {kappa.entries} violates the checkerboard condition and N={N} is odd.",
        )


def propagator_kernel(kappa: HyperbolicToralAutomorphism, N: int) -> np.ndarray:
    """Gauss-sum kernel summed over the ``b`` aliases of the column index.

    ``U[j, k] = (N b)^{-1/2} sigma sum_nu exp(i pi / (N b) (a K^2 - 2 j K + d j^2))``
    with ``K = k + nu N``, ``nu = 0 .. b - 1``. For ``b = 1`` this is the
    single-term kernel.
    """
    a, b, _, d = kappa.entries
    period = 2 * N * b
    j, k = np.meshgrid(np.arange(N, dtype=np.int64), np.arange(N, dtype=np.int64), indexing="ij")
    kernel = np.zeros((N, N), dtype=complex)
    row_term = (d * j * j) % period
    for nu in range(b):
        shifted = k + nu * N
        # exact integer phases reduced modulo the period before going to floats
        numerator = (a * ((shifted * shifted) % period) - 2 * j * shifted + row_term) % period
        kernel += np.exp(1j * np.pi * numerator / (N * b))
    return KERNEL_PHASE * kernel / np.sqrt(N * b)


def unitarity_defect(matrix: np.ndarray) -> float:
    """Frobenius norm of ``U^dagger U - 1``."""
    N = matrix.shape[0]
    return float(np.linalg.norm(matrix.conj().T @ matrix - np.eye(N)))


def metaplectic_propagator(kappa: HyperbolicToralAutomorphism, N: int) -> np.ndarray:
    """Unitary quantization ``U_N(kappa)`` of a hyperbolic toral automorphism.

    Args:
        kappa (HyperbolicToralAutomorphism): the classical map, with ``b > 0``.
        N (int): Hilbert space dimension.
    Returns:
        ndarray: the ``N x N`` unitary propagator.
    """
    check_quantizable(kappa, N)
    propagator = propagator_kernel(kappa, N)
    defect = unitarity_defect(propagator)
    if defect > UNITARITY_TOL * max(1.0, np.sqrt(N)):
        raise_error(
            NotQuantizable,
            f"Propagator of {kappa.entries} at N={N} has unitarity defect {defect:.3e}.",
        )
    return propagator


def convention_matrix(kappa: HyperbolicToralAutomorphism, convention: str):
    if convention == "direct":
        return kappa
    if convention == "transpose":
        return kappa.transpose()
    if convention == "inverse":
        return kappa.inverse()
    if convention == "inverse-transpose":
        return kappa.inverse().transpose()
    raise_error(ValueError, f"Unknown Egorov convention {convention}.")


def egorov_image(kappa: HyperbolicToralAutomorphism, m: Mode, convention=None) -> Mode:
    """Lattice point ``kappa' m`` appearing in ``U^dagger T(m) U ~ T(kappa' m)``."""
    target = convention_matrix(kappa, convention or EGOROV_CONVENTION)
    return (target.a * m[0] + target.b * m[1], target.c * m[0] + target.d * m[1])


def egorov_overlap(
    propagator: np.ndarray,
    kappa: HyperbolicToralAutomorphism,
    m: Mode,
    convention=None,
) -> float:
    """``|tr(T(kappa' m)^dagger U^dagger T(m) U)| / N``, equal to one when Egorov is exact."""
    N = propagator.shape[0]
    evolved = propagator.conj().T @ translation_operator(m, N).matrix @ propagator
    target = translation_operator(egorov_image(kappa, m, convention), N).matrix
    return float(abs(np.trace(target.conj().T @ evolved)) / N)


@lru_cache(maxsize=None)
def _brute_force_convention(entries: Tuple[int, int, int, int], N: int) -> Tuple[str, ...]:
    kappa = HyperbolicToralAutomorphism(*entries)
    propagator = metaplectic_propagator(kappa, N)
    passing = []
    for convention in CONVENTIONS:
        overlaps = [egorov_overlap(propagator, kappa, m, convention) for m in EGOROV_CHECK_MODES]
        if all(abs(overlap - 1) < UNITARITY_TOL for overlap in overlaps):
            passing.append(convention)
    return tuple(passing)


def determine_egorov_convention(
    kappa: HyperbolicToralAutomorphism, N: int = EGOROV_CHECK_DIMENSION
) -> str:
    """Exhaustive overlap test over the candidate conventions at small ``N``."""
    passing = _brute_force_convention(kappa.entries, N)
    if not passing:
        raise_error(
            NotQuantizable,
            f"No Egorov convention reproduces the propagator of {kappa.entries} at N={N}.",
        )
    return passing[0]


def egorov_report(
    kappa: HyperbolicToralAutomorphism, N: int, max_mode: int = 3
) -> Dict[Mode, float]:
    """Overlaps for every mode with ``|m_i| <= max_mode`` under the frozen convention."""
    propagator = metaplectic_propagator(kappa, N)
    return {
        (m1, m2): egorov_overlap(propagator, kappa, (m1, m2))
        for m1 in range(-max_mode, max_mode + 1)
        for m2 in range(-max_mode, max_mode + 1)
    }
