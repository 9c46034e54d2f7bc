"""Weighted transfer operators on a truncated Fourier lattice and the pressure curve."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import log, sqrt
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.special import logsumexp
from qibo.config import log as logger, raise_error

from dampedmaps.config import (
    CUMULANT_OVERFLOW,
    DEFAULT_XI_GRID,
    DEFLATION_STEPS,
    NOGAP_THRESHOLD,
    POWER_ITERATION_MAXITER,
    WEIGHT_OVERFLOW,
)
from dampedmaps.exceptions import (
    BadParameter,
    BoxTooSmall,
    NoGap,
    NumericalError,
    WeightOverflow,
)
from dampedmaps.models.dynamics import HyperbolicToralAutomorphism, Mode
from dampedmaps.models.observables import TorusObservable
from dampedmaps.operations.sampling import centered_birkhoff_samples, substream

# discrete second differences of F may dip this far below zero
CONVEXITY_TOL = 1e-9
JENSEN_TOL = 1e-12
DEFAULT_TOL = 1e-12


def mode_index(m: Mode, K: int) -> int:
    return (m[0] + K) * (2 * K + 1) + (m[1] + K)


def box_modes(K: int) -> np.ndarray:
    """All lattice points of ``[-K, K]^2`` in index order."""
    axis = np.arange(-K, K + 1)
    m1, m2 = np.meshgrid(axis, axis, indexing="ij")
    return np.stack([m1.ravel(), m2.ravel()], axis=1)


def weight_coefficients(q: TorusObservable, xi: float, K_op: int) -> Dict[Mode, complex]:
    """Fourier coefficients of ``e^{xi q}`` up to radius ``2 K_op``."""
    if xi == 0:
        return {(0, 0): 1.0 + 0j}
    if q.is_constant():
        return {(0, 0): complex(np.exp(xi * q.mean()))}
    weight = TorusObservable.from_function(lambda x, p: np.exp(xi * q(x, p)), 2 * K_op)
    return dict(weight.coefficients)


@dataclass(eq=False)
class TransferModel:
    """``L_xi f = e^{xi q} (f o kappa)`` restricted to modes in ``[-K_op, K_op]^2``.

    The operator is ``C R``: ``R`` relabels ``n -> kappa^T n`` and drops modes
    leaving the box, ``C`` convolves with the coefficients of ``e^{xi q}``.
    """

    map: HyperbolicToralAutomorphism
    observable: TorusObservable
    K_op: int
    xi: float
    weights: Dict[Mode, complex] = field(repr=False)
    operator: sparse.csr_matrix = field(repr=False)

    @property
    def dimension(self) -> int:
        return (2 * self.K_op + 1) ** 2

    @property
    def constant_index(self) -> int:
        return mode_index((0, 0), self.K_op)


def relabeling_matrix(kappa: HyperbolicToralAutomorphism, K: int) -> sparse.csr_matrix:
    modes = box_modes(K)
    a, b, c, d = kappa.entries
    images = np.stack([a * modes[:, 0] + c * modes[:, 1], b * modes[:, 0] + d * modes[:, 1]], axis=1)
    keep = np.all(np.abs(images) <= K, axis=1)
    columns = np.flatnonzero(keep)
    rows = (images[keep, 0] + K) * (2 * K + 1) + (images[keep, 1] + K)
    size = (2 * K + 1) ** 2
    return sparse.csr_matrix(
        (np.ones(columns.size, dtype=complex), (rows, columns)), shape=(size, size)
    )


def convolution_matrix(weights: Dict[Mode, complex], K: int) -> sparse.csr_matrix:
    modes = box_modes(K)
    size = (2 * K + 1) ** 2
    rows, columns, values = [], [], []
    for (k1, k2), w in sorted(weights.items()):
        targets = modes + np.array([k1, k2])
        keep = np.all(np.abs(targets) <= K, axis=1)
        columns.append(np.flatnonzero(keep))
        rows.append((targets[keep, 0] + K) * (2 * K + 1) + (targets[keep, 1] + K))
        values.append(np.full(int(keep.sum()), w, dtype=complex))
    return sparse.csr_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(columns))),
        shape=(size, size),
    )


def build_weighted_transfer(
    kappa: HyperbolicToralAutomorphism, q: TorusObservable, xi: float, K_op: int
) -> TransferModel:
    """Assemble the truncated weighted transfer operator.

    Args:
        kappa (HyperbolicToralAutomorphism): the map.
        q (TorusObservable): the weight observable.
        xi (float): the weight parameter.
        K_op (int): half-width of the mode box.
    Raises:
        BoxTooSmall: if ``K_op < 2 * radius(q)``.
        WeightOverflow: if ``|xi| * sup_norm_bound(q) > 30``.
    """
    if K_op < 2 * q.radius or K_op < 1:
        raise_error(
            BoxTooSmall,
            f"Operator box K_op={K_op} must be at least twice the observable radius {q.radius}.",
        )
    if abs(xi) * q.sup_norm_bound() > WEIGHT_OVERFLOW:
        raise_error(
            WeightOverflow,
            f"|xi| * sup(q) = {abs(xi) * q.sup_norm_bound():.3f} exceeds {WEIGHT_OVERFLOW}.",
        )
    weights = weight_coefficients(q, xi, K_op)
    operator = (convolution_matrix(weights, K_op) @ relabeling_matrix(kappa, K_op)).tocsr()
    return TransferModel(kappa, q, K_op, float(xi), weights, operator)


def _power_iteration(operator, start: np.ndarray, tol: float) -> Tuple[float, np.ndarray]:
    vector = start / np.linalg.norm(start)
    previous = None
    for _ in range(POWER_ITERATION_MAXITER):
        image = operator @ vector
        rayleigh = complex(np.vdot(vector, image))
        norm = np.linalg.norm(image)
        if norm == 0:
            raise_error(NumericalError, "Power iteration collapsed onto the zero vector.")
        vector = image / norm
        if previous is not None and abs(rayleigh - previous) < tol:
            return rayleigh, vector
        previous = rayleigh
    raise_error(
        NoGap, f"Power iteration did not converge in {POWER_ITERATION_MAXITER} steps."
    )


def _deflated_growth(operator, leading: float, right, left, steps: int) -> float:
    """Asymptotic growth of ``L`` on the complement of the leading eigenline."""
    overlap = np.vdot(left, right)

    def project(v):
        return v - right * (np.vdot(left, v) / overlap)

    vector = project(substream(0, "deflation", 0).standard_normal(right.shape[0]) + 0j)
    norm = np.linalg.norm(vector)
    if norm == 0:
        return 0.0
    vector /= norm
    logs = []
    for _ in range(steps):
        vector = project(operator @ vector)
        norm = np.linalg.norm(vector)
        if norm == 0 or not np.isfinite(norm):
            return 0.0
        logs.append(log(norm))
        vector /= norm
    return float(np.exp(np.mean(logs[steps // 2 :]))) / leading


def leading_eigenvalue(model: TransferModel, tol: float = DEFAULT_TOL) -> Tuple[float, float]:
    """Leading eigenvalue and gap ratio by power iteration with deflation.

    Iteration starts from the constant mode and stops once successive Rayleigh
    quotients differ by less than ``tol``.

    Returns:
        tuple: ``(lambda, gap_ratio)`` with ``gap_ratio = |lambda_2| / lambda``.
    Raises:
        NoGap: if the gap ratio exceeds 0.95.
    """
    if not 1e-14 < tol < 1e-4:
        raise_error(BadParameter, f"Power iteration tolerance {tol} outside (1e-14, 1e-4).")
    start = np.zeros(model.dimension, dtype=complex)
    start[model.constant_index] = 1.0
    eigenvalue, right = _power_iteration(model.operator, start, tol)
    leading = float(eigenvalue.real)
    if leading <= 0:
        raise_error(NumericalError, f"Leading eigenvalue {eigenvalue} is not positive.")
    _, left = _power_iteration(model.operator.conj().T.tocsr(), start, tol)
    gap_ratio = _deflated_growth(model.operator, leading, right, left, DEFLATION_STEPS)
    if gap_ratio > NOGAP_THRESHOLD:
        raise_error(
            NoGap,
            f"Gap ratio {gap_ratio:.4f} at xi={model.xi}, K_op={model.K_op} "
            f"exceeds {NOGAP_THRESHOLD}.",
        )
    return leading, gap_ratio


@dataclass
class PressureCurve:
    xi_grid: List[float]
    F_values: List[float]
    lambda_values: List[float]
    gap_ratios: List[float]
    sigma_sq_from_pressure: float
    K_op: int = 0
    observable_mean: float = 0.0
    tol: float = DEFAULT_TOL

    def second_differences(self) -> np.ndarray:
        """Discrete second derivatives on a possibly nonuniform grid."""
        x, f = np.asarray(self.xi_grid), np.asarray(self.F_values)
        slopes = np.diff(f) / np.diff(x)
        return np.diff(slopes) / ((x[2:] - x[:-2]) / 2)

    def is_convex(self) -> bool:
        return bool(np.all(self.second_differences() >= -CONVEXITY_TOL))

    def jensen_ok(self) -> bool:
        """``F(xi) >= xi q_bar`` on the whole grid."""
        x, f = np.asarray(self.xi_grid), np.asarray(self.F_values)
        return bool(np.all(f >= x * self.observable_mean - JENSEN_TOL))

    def derivative_at_zero(self) -> float:
        i = self.xi_grid.index(0.0)
        x, f = self.xi_grid, self.F_values
        return (f[i + 1] - f[i - 1]) / (x[i + 1] - x[i - 1])

    def rows(self) -> List[tuple]:
        """CSV rows ``(xi, F, lambda, gap_ratio)``."""
        return list(zip(self.xi_grid, self.F_values, self.lambda_values, self.gap_ratios))

    def header(self) -> dict:
        return {
            "K_op": self.K_op,
            "observable_mean": self.observable_mean,
            "sigma_sq_from_pressure": self.sigma_sq_from_pressure,
            "tol": self.tol,
            "is_convex": self.is_convex(),
            "jensen_ok": self.jensen_ok(),
        }


def check_xi_grid(xi_grid: Sequence[float]) -> List[float]:
    grid = sorted(float(x) for x in xi_grid)
    if 0.0 not in grid:
        raise_error(BadParameter, "The xi grid must contain 0.")
    if len(grid) < 3 or not np.allclose(grid, [-x for x in reversed(grid)], atol=1e-12):
        raise_error(BadParameter, "The xi grid must be symmetric about 0 with at least 3 points.")
    return grid


def pressure_curve(
    kappa: HyperbolicToralAutomorphism,
    q: TorusObservable,
    xi_grid: Sequence[float] = DEFAULT_XI_GRID,
    K_op: int = 32,
    tol: float = DEFAULT_TOL,
    jobs: int = 1,
) -> PressureCurve:
    """``F(xi) = log lambda(xi)`` on a symmetric grid.

    ``sigma_sq_from_pressure`` is the central second difference of ``F`` at 0.
    """
    grid = check_xi_grid(xi_grid)

    def solve(xi):
        return leading_eigenvalue(build_weighted_transfer(kappa, q, xi, K_op), tol)

    with ThreadPoolExecutor(max_workers=max(1, int(jobs))) as pool:
        results = list(pool.map(solve, grid))
    lambdas = [r[0] for r in results]
    F_values = [0.0 if xi == 0 else log(lam) for xi, lam in zip(grid, lambdas)]
    i = grid.index(0.0)
    step = grid[i + 1]
    sigma_sq = (F_values[i + 1] + F_values[i - 1] - 2 * F_values[i]) / (step * step)
    curve = PressureCurve(
        xi_grid=grid,
        F_values=F_values,
        lambda_values=lambdas,
        gap_ratios=[r[1] for r in results],
        sigma_sq_from_pressure=sigma_sq,
        K_op=K_op,
        observable_mean=q.mean(),
        tol=tol,
    )
    if not curve.is_convex():
        logger.warning("Pressure curve fails the discrete convexity check.")
    return curve


def monte_carlo_cumulant(
    kappa: HyperbolicToralAutomorphism,
    q: TorusObservable,
    xi: float,
    T: int,
    samples: int,
    seed: int,
    jobs: int = 1,
    return_stderr: bool = False,
):
    """``(1/T) log E[exp(xi (S_T - T q_bar))]`` from sampled orbits.

    This estimates ``F(xi) - xi q_bar``.
    """
    sup = q.sup_norm_bound()
    if abs(xi) * T * sup > CUMULANT_OVERFLOW:
        raise_error(
            WeightOverflow,
            f"|xi| * T * sup(q) = {abs(xi) * T * sup:.1f} exceeds {CUMULANT_OVERFLOW}.",
        )
    if xi == 0:
        return (0.0, 0.0) if return_stderr else 0.0
    sums = centered_birkhoff_samples(kappa, q, T, samples, seed, f"cumulant/T={T}", jobs)
    exponents = xi * sums
    value = (logsumexp(exponents) - log(samples)) / T
    if not return_stderr:
        return float(value)
    weights = np.exp(exponents - exponents.max())
    stderr = np.std(weights) / (np.mean(weights) * sqrt(samples) * T)
    return float(value), float(stderr)
