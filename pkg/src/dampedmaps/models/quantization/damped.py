"""Damped quantum maps ``M_N = Op_N(e^{-g}) U_N(kappa)`` and their spectra."""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from qibo.config import log, raise_error

from dampedmaps.backends import construct_backend, non_normal_eigenvalues
from dampedmaps.config import (
    DAMPING_SUP_TOL,
    HERMITICITY_TOL,
    MAX_DENSE_DIMENSION,
    TRACE_TOL,
    UNITARITY_TOL,
)
from dampedmaps.exceptions import BadParameter, NotDamping, NotQuantizable
from dampedmaps.models.dynamics import HyperbolicToralAutomorphism
from dampedmaps.models.observables import TorusObservable
from dampedmaps.models.quantization.metaplectic import (
    metaplectic_propagator,
    unitarity_defect,
)
from dampedmaps.models.quantization.weyl import weyl_quantize

# truncation radii tried for e^{-g}, doubled up to the cap
DAMPING_MIN_RADIUS = 8
DAMPING_MAX_RADIUS = 64


def damping_symbol(g: TorusObservable) -> TorusObservable:
    """Trigonometric polynomial approximating ``a = e^{-g}``.

    The truncation radius doubles until the outermost ring of coefficients
    falls below the coefficient cutoff.

    Raises:
        NotDamping: if ``sup a > 1`` on the evaluation grid, i.e. ``g`` is negative somewhere.
    """
    if g.is_constant():
        symbol = TorusObservable.constant(np.exp(-g.mean()))
    else:
        K = max(DAMPING_MIN_RADIUS, 8 * g.radius)
        while True:
            symbol = TorusObservable.from_function(lambda x, p: np.exp(-g(x, p)), K)
            if symbol.radius < K or 2 * K > DAMPING_MAX_RADIUS:
                break
            K *= 2
        if symbol.radius >= K:
            log.warning(f"Damping symbol still has modes on its outer ring at K={K}.")
    sup = damping_sup(symbol)
    if sup > 1 + DAMPING_SUP_TOL:
        raise_error(
            NotDamping,
            f"Damping symbol reaches {sup:.15f} > 1; the damping g must be non-negative.",
        )
    return symbol


def damping_sup(symbol: TorusObservable, grid: Optional[int] = None) -> float:
    """Maximum of the symbol over a uniform grid."""
    n = grid if grid is not None else max(64, 8 * symbol.radius)
    axis = np.arange(n) / n
    x, p = np.meshgrid(axis, axis, indexing="ij")
    return float(np.max(symbol(x, p)))


@dataclass(frozen=True, eq=False)
class QuantizedSystem:
    """Immutable damped quantum map at Hilbert dimension ``N``.

    The effective Planck constant is ``h = 1 / (2 pi N)``.
    """

    N: int
    map: HyperbolicToralAutomorphism
    damping: TorusObservable
    symbol: TorusObservable
    propagator: np.ndarray
    damping_op: np.ndarray
    damped: np.ndarray

    def __post_init__(self):
        defect = unitarity_defect(self.propagator)
        if defect > UNITARITY_TOL * max(1.0, np.sqrt(self.N)):
            raise_error(NotQuantizable, f"Propagator unitarity defect {defect:.3e} at N={self.N}.")
        asymmetry = float(np.max(np.abs(self.damping_op - self.damping_op.conj().T)))
        if asymmetry > HERMITICITY_TOL:
            raise_error(
                NotQuantizable, f"Damping operator is not Hermitian (defect {asymmetry:.3e})."
            )
        trace_error = abs(np.trace(self.damping_op) - self.N * self.symbol.mean())
        if trace_error > TRACE_TOL * max(1.0, np.sqrt(self.N)):
            raise_error(
                NotQuantizable,
                f"Trace of the damping operator deviates from N * mean by {trace_error:.3e}.",
            )

    def sup_damping(self) -> float:
        return damping_sup(self.symbol)


def damped_propagator(
    kappa: HyperbolicToralAutomorphism, g: TorusObservable, N: int
) -> QuantizedSystem:
    """Build ``M_N(a, kappa) = Op_N(a) U_N(kappa)`` with ``a = e^{-g}``.

    Args:
        kappa (HyperbolicToralAutomorphism): quantizable cat map.
        g (TorusObservable): non-negative damping observable.
        N (int): Hilbert space dimension.
    Returns:
        QuantizedSystem: the checked system.
    """
    if N > MAX_DENSE_DIMENSION:
        raise_error(
            BadParameter,
            f"N={N} exceeds the dense eigensolver limit {MAX_DENSE_DIMENSION}.",
        )
    symbol = damping_symbol(g)
    propagator = metaplectic_propagator(kappa, N)
    damping_op = weyl_quantize(symbol, N)
    return QuantizedSystem(
        N=N,
        map=kappa,
        damping=g,
        symbol=symbol,
        propagator=propagator,
        damping_op=damping_op,
        damped=damping_op @ propagator,
    )


def sort_spectrum(eigenvalues) -> np.ndarray:
    """Order by modulus descending, then phase ascending."""
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    order = np.lexsort((np.angle(eigenvalues), -np.abs(eigenvalues)))
    return eigenvalues[order]


def spectrum(system, backend=None) -> np.ndarray:
    """All ``N`` eigenvalues of the damped propagator, with multiplicity.

    Args:
        system (QuantizedSystem or ndarray): the system, or a bare square matrix.
        backend (str or backend, optional): linear-algebra backend, numpy by default.
    """
    matrix = system.damped if isinstance(system, QuantizedSystem) else np.asarray(system)
    backend = construct_backend(backend)
    return sort_spectrum(non_normal_eigenvalues(backend, matrix))


def decay_rate_values(eigenvalues) -> np.ndarray:
    """Per-step decay rates ``-log |lambda|``; a zero eigenvalue decays infinitely fast."""
    moduli = np.abs(np.asarray(eigenvalues, dtype=complex))
    with np.errstate(divide="ignore"):
        return -np.log(moduli)


def eigenvalue_rows(eigenvalues) -> List[tuple]:
    """Rows ``(re, im, modulus, decay_rate)`` of an eigenvalue dump."""
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    rates = decay_rate_values(eigenvalues)
    return [
        (float(z.real), float(z.imag), float(abs(z)), float(r))
        for z, r in zip(eigenvalues, rates)
    ]
