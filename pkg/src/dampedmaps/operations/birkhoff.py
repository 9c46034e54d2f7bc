"""Birkhoff sums and symmetric averages along orbits."""

import numpy as np
from qibo.config import raise_error

from dampedmaps.exceptions import OddWindow
from dampedmaps.models.dynamics import HyperbolicToralAutomorphism, TorusPoint, step_arrays
from dampedmaps.models.observables import TorusObservable


def orbit_values(
    kappa: HyperbolicToralAutomorphism, q: TorusObservable, x, p, start: int, T: int
) -> np.ndarray:
    """Values ``q(kappa^t z)`` for ``t = start .. start + T - 1``, stacked along axis 0."""
    x, p = step_arrays(kappa, x, p, start)
    values = []
    for _ in range(T):
        values.append(q(x, p))
        x, p = step_arrays(kappa, x, p, 1)
    return np.stack(values)


def birkhoff_symmetric_arrays(
    kappa: HyperbolicToralAutomorphism, q: TorusObservable, x, p, T: int
) -> np.ndarray:
    """Vectorized symmetric average over the window ``[-T/2, T/2 - 1]``."""
    if T < 2 or T % 2 != 0:
        raise_error(OddWindow, f"Symmetric window needs an even T >= 2, got {T}.")
    return orbit_values(kappa, q, x, p, -(T // 2), T).mean(axis=0)


def birkhoff_symmetric(
    kappa: HyperbolicToralAutomorphism, q: TorusObservable, rho: TorusPoint, T: int
) -> float:
    """``<q>_T(rho) = (1/T) sum_{t=-T/2}^{T/2-1} q(kappa^t rho)``.

    Args:
        kappa (HyperbolicToralAutomorphism): the map.
        q (TorusObservable): the observable.
        rho (TorusPoint): base point.
        T (int): even window length.
    Returns:
        float: the symmetric average.
    """
    return float(birkhoff_symmetric_arrays(kappa, q, rho.x, rho.p, T))
