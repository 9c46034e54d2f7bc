"""Variance, moderate deviations and the concentration constant of Birkhoff sums."""

from dataclasses import asdict, dataclass, field
from math import inf, isclose, log, sqrt
from typing import List, Optional, Sequence, Tuple

import numpy as np
from qibo.config import log as logger, raise_error

from dampedmaps.config import MIN_VARIANCE_SAMPLES, NEGATIVE_RATE_TOL, ZERO_VARIANCE_TOL
from dampedmaps.exceptions import BadParameter, BadScaling, InsufficientData, LagTooSmall
from dampedmaps.models.dynamics import HyperbolicToralAutomorphism, escape_time, pushforward_mode
from dampedmaps.models.observables import TorusObservable
from dampedmaps.operations.sampling import centered_birkhoff_samples

SIDES = ("upper", "lower")


@dataclass
class VarianceResult:
    """Asymptotic variance ``sigma^2`` with the correlations it was summed from."""

    sigma_sq: float
    terms: List[Tuple[int, float]]
    method: str
    stderr: float = 0.0
    samples: int = 0
    T: int = 0

    def to_json(self) -> dict:
        record = asdict(self)
        record["terms"] = [[int(t), float(c)] for t, c in self.terms]
        return record


@dataclass
class DeviationEstimate:
    T: int
    gamma: float
    epsilon: float
    probability: float
    rate: float
    samples: int
    seed: int
    stderr: float = 0.0
    lower_resolution: bool = False
    side: str = "upper"

    @property
    def a_T(self) -> float:
        return float(self.T) ** self.gamma

    def to_json(self) -> dict:
        record = asdict(self)
        record["a_T"] = self.a_T
        return record

    def as_row(self) -> tuple:
        """CSV row ``(T, a_T, epsilon, probability, stderr, rate)``."""
        return (self.T, self.a_T, self.epsilon, self.probability, self.stderr, self.rate)


@dataclass
class RateFit:
    measured_rate: float
    predicted_rate: float
    relative_error: float
    slope: float = 0.0
    T_values: List[int] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class SpectralConstant:
    """``c = 1 / (2 Lambda_0 sigma^2)``, infinite when ``sigma^2 = 0``."""

    lambda0: float
    sigma_sq: float
    c: float

    @property
    def is_infinite(self) -> bool:
        return self.c == inf

    def to_json(self) -> dict:
        return {
            "lambda0": self.lambda0,
            "sigma_sq": self.sigma_sq,
            "c": None if self.is_infinite else self.c,
            "c_infinite": self.is_infinite,
        }


def binomial_stderr(probability: float, samples: int) -> float:
    return sqrt(max(probability * (1 - probability), 0.0) / samples)


def required_lag(kappa: HyperbolicToralAutomorphism, q: TorusObservable) -> int:
    """Largest certified escape step over the nonzero modes of ``q``."""
    return max((escape_time(kappa, m, q.radius) for m in q.nonzero_modes()), default=0)


def exact_variance(
    kappa: HyperbolicToralAutomorphism, q: TorusObservable, max_lag: Optional[int] = None
) -> VarianceResult:
    """Lattice-exact ``sigma^2 = C(0) + 2 sum_{t >= 1} C(t)``.

    ``C(t) = sum_{n != 0} c_n c_m`` over pairs with ``m + (kappa^T)^t n = 0``.
    Once every mode has left the box of ``q`` for good, all later terms vanish.

    Args:
        kappa (HyperbolicToralAutomorphism): the map.
        q (TorusObservable): the observable.
        max_lag (int, optional): number of lags to sum; the certified escape
            step by default.
    Raises:
        LagTooSmall: if some mode has not certifiably escaped by ``max_lag``.
    """
    escape = required_lag(kappa, q)
    if max_lag is None:
        max_lag = escape
    if max_lag < escape:
        raise_error(
            LagTooSmall,
            f"max_lag={max_lag} is below the certified escape step {escape} of the observable.",
        )
    fluctuation = q.nonzero_modes()
    pushed = {n: n for n in fluctuation}
    terms = []
    for t in range(max_lag + 1):
        correlation = 0j
        for n, c in fluctuation.items():
            image = pushed[n]
            correlation += c * fluctuation.get((-image[0], -image[1]), 0j)
        terms.append((t, float(correlation.real)))
        pushed = {n: pushforward_mode(kappa, m) for n, m in pushed.items()}
    sigma_sq = terms[0][1] + 2 * sum(c for t, c in terms[1:])
    if abs(sigma_sq) < ZERO_VARIANCE_TOL:
        sigma_sq = 0.0
    return VarianceResult(sigma_sq=sigma_sq, terms=terms, method="exact-lattice")


def mc_variance(
    kappa: HyperbolicToralAutomorphism,
    q: TorusObservable,
    T: int,
    samples: int,
    seed: int,
    jobs: int = 1,
) -> VarianceResult:
    """Monte-Carlo ``(1/T) E[(S_T - T q_bar)^2]`` with its standard error."""
    if T < 2:
        raise_error(BadParameter, f"Variance window needs T >= 2, got {T}.")
    if samples < MIN_VARIANCE_SAMPLES:
        raise_error(
            BadParameter, f"Variance needs at least {MIN_VARIANCE_SAMPLES} samples, got {samples}."
        )
    sums = centered_birkhoff_samples(kappa, q, T, samples, seed, f"variance/T={T}", jobs)
    squares = sums * sums / T
    return VarianceResult(
        sigma_sq=float(np.mean(squares)),
        terms=[],
        method="monte-carlo",
        stderr=float(np.std(squares) / sqrt(samples)),
        samples=samples,
        T=T,
    )


def check_scaling(gamma: float, epsilon: float):
    if not 0 < gamma < 0.5:
        raise_error(BadScaling, f"Scaling exponent gamma must lie in (0, 1/2), got {gamma}.")
    if not epsilon > 0:
        raise_error(BadParameter, f"Deviation epsilon must be positive, got {epsilon}.")


def estimate_from_sums(
    sums: np.ndarray, T: int, gamma: float, epsilon: float, seed: int, side: str = "upper"
) -> DeviationEstimate:
    """Fraction of centered sums with ``S_T >= epsilon T^{1 - gamma}``."""
    samples = int(sums.shape[0])
    threshold = epsilon * float(T) ** (1 - gamma)
    hits = int(np.count_nonzero(sums >= threshold))
    probability = hits / samples
    lower_resolution = hits == 0
    if lower_resolution:
        logger.info(
            f"No deviation beyond epsilon={epsilon} at T={T}; rate reported from 1/(n+1)."
        )
    rate = float(T) ** (2 * gamma - 1) * log(probability if hits else 1 / (samples + 1))
    return DeviationEstimate(
        T=T,
        gamma=gamma,
        epsilon=epsilon,
        probability=probability,
        rate=rate,
        samples=samples,
        seed=seed,
        stderr=binomial_stderr(probability, samples),
        lower_resolution=lower_resolution,
        side=side,
    )


def deviation_sums(kappa, q, T, samples, seed, side="upper", jobs=1) -> np.ndarray:
    if side not in SIDES:
        raise_error(BadParameter, f"Unknown deviation side {side}; expected one of {SIDES}.")
    if T < 1 or samples < 1:
        raise_error(BadParameter, f"Need T >= 1 and samples >= 1, got T={T}, samples={samples}.")
    observable = q if side == "upper" else -q
    return centered_birkhoff_samples(kappa, observable, T, samples, seed, f"birkhoff/T={T}", jobs)


def mdp_probability(
    kappa: HyperbolicToralAutomorphism,
    q: TorusObservable,
    T: int,
    gamma: float,
    epsilon: float,
    samples: int,
    seed: int,
    side: str = "upper",
    jobs: int = 1,
) -> DeviationEstimate:
    """Empirical ``mu{<q>_T - q_bar >= epsilon / T^gamma}``.

    The lower side is the upper side of ``-q``. Sample points depend only on
    ``(seed, T)``, so estimates are monotone in ``epsilon``.

    Raises:
        BadScaling: if ``gamma`` is outside ``(0, 1/2)``.
    """
    check_scaling(gamma, epsilon)
    sums = deviation_sums(kappa, q, T, samples, seed, side, jobs)
    return estimate_from_sums(sums, T, gamma, epsilon, seed, side)


def two_sided_probability(
    kappa, q, T, gamma, epsilon, samples, seed, jobs=1
) -> DeviationEstimate:
    """``mu{|<q>_T - q_bar| >= epsilon / T^gamma}`` as the sum of both half-lines."""
    upper = mdp_probability(kappa, q, T, gamma, epsilon, samples, seed, "upper", jobs)
    lower = mdp_probability(kappa, q, T, gamma, epsilon, samples, seed, "lower", jobs)
    probability = upper.probability + lower.probability
    hits = probability > 0
    rate = float(T) ** (2 * gamma - 1) * log(probability if hits else 1 / (samples + 1))
    return DeviationEstimate(
        T=T,
        gamma=gamma,
        epsilon=epsilon,
        probability=probability,
        rate=rate,
        samples=samples,
        seed=seed,
        stderr=binomial_stderr(min(probability, 1.0), samples),
        lower_resolution=not hits,
        side="two-sided",
    )


def mdp_table(
    kappa: HyperbolicToralAutomorphism,
    q: TorusObservable,
    T_list: Sequence[int],
    gamma: float,
    epsilon_grid: Sequence[float],
    samples: int,
    seed: int,
    side: str = "upper",
    jobs: int = 1,
) -> List[DeviationEstimate]:
    """Estimates over the ``T x epsilon`` grid, ordered by ``T`` then ``epsilon``."""
    for epsilon in epsilon_grid:
        check_scaling(gamma, epsilon)
    table = []
    for T in T_list:
        sums = deviation_sums(kappa, q, T, samples, seed, side, jobs)
        table.extend(estimate_from_sums(sums, T, gamma, e, seed, side) for e in epsilon_grid)
    return table


def predicted_mdp_rate(epsilon: float, sigma_sq: float) -> float:
    return -epsilon * epsilon / (2 * sigma_sq)


def check_estimate_family(estimates: Sequence[DeviationEstimate]):
    """Raise unless the estimates form an increasing-``T`` family with shared ``gamma, epsilon``."""
    if len(estimates) < 3:
        raise_error(InsufficientData, f"Need at least 3 estimates, got {len(estimates)}.")
    first = estimates[0]
    for previous, current in zip(estimates, estimates[1:]):
        if current.T <= previous.T:
            raise_error(InsufficientData, "Estimates must be ordered by strictly increasing T.")
    for estimate in estimates:
        if not (isclose(estimate.gamma, first.gamma) and isclose(estimate.epsilon, first.epsilon)):
            raise_error(InsufficientData, "Estimates must share gamma and epsilon.")
        if estimate.probability <= 0:
            raise_error(
                InsufficientData, f"Estimate at T={estimate.T} has zero empirical probability."
            )


def mdp_rate_fit(estimates: Sequence[DeviationEstimate], sigma_sq: float) -> RateFit:
    """Extrapolate the empirical rates to ``T -> infinity``.

    Rates are regressed linearly on ``s = a(T)^2 / T``, which tends to zero;
    the intercept is the measured limit and is compared with ``-epsilon^2 / (2 sigma^2)``.
    """
    check_estimate_family(estimates)
    if sigma_sq <= 0:
        raise_error(InsufficientData, "A vanishing variance has no Gaussian deviation rate.")
    scales = np.array([float(e.T) ** (2 * e.gamma - 1) for e in estimates])
    rates = np.array([e.rate for e in estimates])
    slope, intercept = np.polyfit(scales, rates, 1)
    predicted = predicted_mdp_rate(estimates[0].epsilon, sigma_sq)
    return RateFit(
        measured_rate=float(intercept),
        predicted_rate=predicted,
        relative_error=float(abs(intercept - predicted) / abs(predicted)),
        slope=float(slope),
        T_values=[e.T for e in estimates],
    )


def spectral_constant(lambda0: float, sigma_sq: float) -> SpectralConstant:
    if sigma_sq < -NEGATIVE_RATE_TOL:
        logger.warning(f"Variance {sigma_sq} is negative beyond rounding.")
    c = inf if sigma_sq <= 0 else 1 / (2 * lambda0 * sigma_sq)
    return SpectralConstant(lambda0=lambda0, sigma_sq=sigma_sq, c=c)


def concentration_constant(
    kappa: HyperbolicToralAutomorphism, q: TorusObservable
) -> SpectralConstant:
    """``c(q, kappa) = 1 / (2 Lambda_0 sigma_q^2)`` from the lattice-exact variance."""
    return spectral_constant(kappa.expansion_rate, exact_variance(kappa, q).sigma_sq)
