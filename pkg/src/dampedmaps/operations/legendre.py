"""Legendre-Fenchel transforms of sampled pressure curves and the Gartner-Ellis comparison."""

from dataclasses import asdict, dataclass, field
from math import isclose
from typing import List, Optional, Sequence

import numpy as np
from qibo.config import raise_error

from dampedmaps.exceptions import EtaOutOfRange, InsufficientData
from dampedmaps.operations.deviation import DeviationEstimate
from dampedmaps.operations.transfer import PressureCurve


def _vertex(x: np.ndarray, g: np.ndarray, i: int) -> float:
    """Maximum of the parabola through three neighbouring samples around ``i``."""
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    g0, g1, g2 = g[i - 1], g[i], g[i + 1]
    denominator = (x0 - x1) * (x0 - x2) * (x1 - x2)
    A = (x2 * (g1 - g0) + x1 * (g0 - g2) + x0 * (g2 - g1)) / denominator
    B = (x2 * x2 * (g0 - g1) + x1 * x1 * (g2 - g0) + x0 * x0 * (g1 - g2)) / denominator
    C = (
        x1 * x2 * (x1 - x2) * g0 + x2 * x0 * (x2 - x0) * g1 + x0 * x1 * (x0 - x1) * g2
    ) / denominator
    if A >= 0:
        return float(g1)
    top = -B / (2 * A)
    if not x0 <= top <= x2:
        return float(g1)
    return max(float(g1), float(C - B * B / (4 * A)))


def convex_conjugate(x, f, y) -> np.ndarray:
    """Discrete ``f*(y) = sup_x {x y - f(x)}`` with parabolic refinement at the argmax.

    Args:
        x (array): sorted sample abscissas.
        f (array): sampled convex function.
        y (array): points where the conjugate is evaluated.
    Returns:
        ndarray: conjugate values; a maximum on the grid boundary is returned unrefined.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    values = []
    for eta in np.atleast_1d(np.asarray(y, dtype=float)):
        g = eta * x - f
        i = int(np.argmax(g))
        values.append(_vertex(x, g, i) if 0 < i < x.size - 1 else float(g[i]))
    return np.array(values)


def slope_range(x, f):
    slopes = np.diff(np.asarray(f, dtype=float)) / np.diff(np.asarray(x, dtype=float))
    return float(slopes[0]), float(slopes[-1])


@dataclass
class RateFunction:
    eta_grid: List[float]
    I_values: List[float]
    center: float = 0.0

    def __call__(self, eta: float) -> float:
        """Local quadratic interpolation, exact for quadratic rate functions."""
        grid = np.asarray(self.eta_grid)
        values = np.asarray(self.I_values)
        if not grid[0] <= eta <= grid[-1]:
            raise_error(
                EtaOutOfRange, f"eta={eta} outside the tabulated range [{grid[0]}, {grid[-1]}]."
            )
        if grid.size < 3:
            return float(np.interp(eta, grid, values))
        i = int(np.clip(np.searchsorted(grid, eta), 1, grid.size - 2))
        coefficients = np.polyfit(grid[i - 1 : i + 2], values[i - 1 : i + 2], 2)
        return float(np.polyval(coefficients, eta))

    def curvature(self) -> float:
        """Second derivative of ``I`` at the center, about ``1 / sigma^2``."""
        grid = np.asarray(self.eta_grid) - self.center
        values = np.asarray(self.I_values)
        inner = np.abs(grid) <= np.max(np.abs(grid)) / 2
        if inner.sum() < 3:
            inner = np.ones_like(grid, dtype=bool)
        a, _, _ = np.polyfit(grid[inner], values[inner], 2)
        return float(2 * a)

    def moderate_deviation_rate(self, epsilon: float) -> float:
        """Gaussian limit ``-I''(center) epsilon^2 / 2``."""
        return -self.curvature() * epsilon * epsilon / 2

    def is_convex(self, tol: float = 1e-9) -> bool:
        x, f = np.asarray(self.eta_grid), np.asarray(self.I_values)
        slopes = np.diff(f) / np.diff(x)
        return bool(np.all(np.diff(slopes) >= -tol))

    def rows(self) -> List[tuple]:
        """CSV rows ``(eta, I)``."""
        return list(zip(self.eta_grid, self.I_values))


def legendre_fenchel(curve: PressureCurve, eta_grid: Sequence[float]) -> RateFunction:
    """Rate function ``I(eta) = sup_xi {xi eta - F(xi)}`` of a pressure curve.

    Raises:
        EtaOutOfRange: if some ``eta`` lies outside the slope range of the curve.
    """
    low, high = slope_range(curve.xi_grid, curve.F_values)
    eta_grid = sorted(float(e) for e in eta_grid)
    for eta in eta_grid:
        if not low <= eta <= high:
            raise_error(
                EtaOutOfRange,
                f"eta={eta} outside the attainable slope range [{low:.6f}, {high:.6f}]; "
                "widen the xi grid.",
            )
    values = convex_conjugate(curve.xi_grid, curve.F_values, eta_grid)
    return RateFunction(eta_grid, [float(v) for v in values], center=curve.observable_mean)


@dataclass
class GartnerEllisRow:
    T: int
    empirical_rate: float
    predicted_rate: float
    relative_error: float
    method: str


@dataclass
class GartnerEllisReport:
    rows: List[GartnerEllisRow]
    limit_rate: float
    extrapolated_rate: Optional[float] = None
    relative_error: float = 0.0
    gamma: float = 0.0
    epsilon: float = 0.0
    notes: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def gartner_ellis_check(
    rate: RateFunction, estimates: Sequence[DeviationEstimate]
) -> GartnerEllisReport:
    """Compare empirical deviation rates with the rate function.

    Each estimate at window ``T`` is paired with
    ``-T^{2 gamma} I(center + epsilon T^{-gamma})``, the infimum of ``I`` over the
    deviation half-line, or with its quadratic limit when the point falls
    outside the tabulated range. With three or more usable estimates the
    empirical rates are also extrapolated to ``T -> infinity``.

    Raises:
        InsufficientData: without estimates, or when they mix ``gamma, epsilon``.
    """
    if not estimates:
        raise_error(InsufficientData, "No deviation estimates to compare.")
    gamma, epsilon = estimates[0].gamma, estimates[0].epsilon
    if any(not (isclose(e.gamma, gamma) and isclose(e.epsilon, epsilon)) for e in estimates):
        raise_error(InsufficientData, "Estimates must share gamma and epsilon.")
    limit = rate.moderate_deviation_rate(epsilon)
    if limit == 0:
        raise_error(InsufficientData, "The rate function is flat at its center.")
    rows, notes = [], []
    for estimate in estimates:
        eta = rate.center + epsilon * float(estimate.T) ** (-gamma)
        try:
            predicted = -float(estimate.T) ** (2 * gamma) * rate(eta)
            method = "rate-function"
        except EtaOutOfRange:
            predicted, method = limit, "quadratic"
        rows.append(
            GartnerEllisRow(
                T=estimate.T,
                empirical_rate=estimate.rate,
                predicted_rate=predicted,
                relative_error=abs(estimate.rate - predicted) / abs(predicted),
                method=method,
            )
        )
        if estimate.lower_resolution:
            notes.append(f"T={estimate.T}: zero hits, empirical rate is a bound")
    usable = [e for e in estimates if e.probability > 0]
    extrapolated = None
    if len(usable) >= 3 and all(b.T > a.T for a, b in zip(usable, usable[1:])):
        scales = [float(e.T) ** (2 * gamma - 1) for e in usable]
        extrapolated = float(np.polyfit(scales, [e.rate for e in usable], 1)[1])
        relative_error = abs(extrapolated - limit) / abs(limit)
    else:
        relative_error = float(np.mean([row.relative_error for row in rows]))
    return GartnerEllisReport(
        rows=rows,
        limit_rate=limit,
        extrapolated_rate=extrapolated,
        relative_error=float(relative_error),
        gamma=gamma,
        epsilon=epsilon,
        notes=notes,
    )
