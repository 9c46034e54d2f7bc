"""Concentration of decay rates of damped quantum maps around the damping average."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from math import exp, inf, isfinite, log
from typing import List, Optional, Sequence, Tuple

import numpy as np
from qibo.config import log as logger, raise_error

from dampedmaps.config import BOUND_SAFETY, NEGATIVE_RATE_TOL, NOISE_ALLOWANCE
from dampedmaps.exceptions import BadParameter, DegenerateFit, EtaOutOfRange
from dampedmaps.models.dynamics import HyperbolicToralAutomorphism
from dampedmaps.models.observables import TorusObservable
from dampedmaps.models.quantization.damped import (
    QuantizedSystem,
    damped_propagator,
    decay_rate_values,
    spectrum,
)
from dampedmaps.operations.deviation import SpectralConstant, concentration_constant
from dampedmaps.operations.windows import ShrinkingWindow, Window, as_window


@dataclass
class DecayRateSample:
    """Sorted per-step decay rates ``-log |lambda_j|`` of one system."""

    N: int
    rates: np.ndarray
    center: float
    alpha: float
    width: float
    negative_count: int = 0


def decay_rates(
    system: QuantizedSystem,
    g: TorusObservable,
    alpha: float,
    backend=None,
    eigenvalues=None,
) -> DecayRateSample:
    """Decay rates centered at ``g.mean()`` with the shrinking width at ``alpha``.

    Rates below ``-1e-8`` come from rounding above ``sup a``; they are kept
    as computed and counted.
    """
    if eigenvalues is None:
        eigenvalues = spectrum(system, backend)
    return sample_from_eigenvalues(system.N, eigenvalues, g.mean(), alpha)


def sample_from_eigenvalues(N: int, eigenvalues, center: float, alpha: float) -> DecayRateSample:
    window = ShrinkingWindow(alpha)
    rates = np.sort(decay_rate_values(np.asarray(eigenvalues)))
    negative = int(np.count_nonzero(rates < -NEGATIVE_RATE_TOL))
    if negative:
        logger.warning(f"{negative} decay rates below -{NEGATIVE_RATE_TOL} at N={N}.")
    return DecayRateSample(
        N=int(N),
        rates=rates,
        center=float(center),
        alpha=alpha,
        width=window.half_width(N),
        negative_count=negative,
    )


def count_outside(sample: DecayRateSample, window) -> Tuple[int, float]:
    """Rates with ``|r - center| >= width``, as a count and a fraction of ``N``."""
    width = as_window(window).half_width(sample.N)
    count = int(np.count_nonzero(np.abs(np.asarray(sample.rates) - sample.center) >= width))
    return count, count / sample.N


def count_above(sample: DecayRateSample, window) -> Tuple[int, float]:
    """One-sided count of rates with ``r >= center + width``."""
    width = as_window(window).half_width(sample.N)
    count = int(np.count_nonzero(np.asarray(sample.rates) >= sample.center + width))
    return count, count / sample.N


def weyl_count_check(sample: DecayRateSample) -> bool:
    return len(sample.rates) == sample.N


def bound_value(width: float, N: int, c: float) -> float:
    """``exp(-c w^2 log N) / (w^2 log N)``, the fraction-scale concentration bound."""
    scale = width * width * log(N)
    if c == inf:
        return 0.0
    return exp(-c * scale) / scale


def fit_decay_exponent(N_values: Sequence[int], fractions: Sequence[float]) -> float:
    """``-slope`` of ``log fraction`` against ``log N`` over the positive fractions.

    Raises:
        DegenerateFit: if every fraction vanishes.
    """
    pairs = [(N, f) for N, f in zip(N_values, fractions) if f > 0]
    if not pairs:
        raise_error(DegenerateFit, "All outside fractions vanish; nothing to fit.")
    if len(pairs) < 2:
        return float("nan")
    x = np.log([N for N, _ in pairs])
    y = np.log([f for _, f in pairs])
    slope, _ = np.polyfit(x, y, 1)
    return float(-slope)


def non_increasing(values: Sequence[float], allowance: float = NOISE_ALLOWANCE) -> bool:
    return all(b <= a * (1 + allowance) for a, b in zip(values, values[1:]))


@dataclass
class ConcentrationRow:
    N: int
    log_N: float
    width: float
    count_outside: int
    fraction_outside: float
    bound_value: Optional[float]
    count_above: int
    fraction_above: float
    empirical_center: float
    center_drift: float
    bound_exceeded: bool = False


@dataclass
class ConcentrationReport:
    rows: List[ConcentrationRow]
    mode: str
    alpha: Optional[float] = None
    epsilon_fixed: Optional[float] = None
    fitted_exponent: Optional[float] = None
    perfect_concentration: bool = False
    non_increasing: bool = True
    c: Optional[float] = None
    predicted_exponent: Optional[float] = None
    log_scale: str = "log N"
    warnings: List[str] = field(default_factory=list)

    @property
    def fractions(self) -> List[float]:
        return [row.fraction_outside for row in self.rows]

    def to_json(self) -> dict:
        record = asdict(self)
        if record["fitted_exponent"] is not None and not isfinite(record["fitted_exponent"]):
            record["fitted_exponent"] = None
        return record

    def csv_rows(self) -> List[tuple]:
        """Rows ``(N, log_N, width, fraction_outside, bound_value)``."""
        return [
            (row.N, row.log_N, row.width, row.fraction_outside, row.bound_value)
            for row in self.rows
        ]


def constant_value(constant) -> Optional[float]:
    if constant is None:
        return None
    if isinstance(constant, SpectralConstant):
        return constant.c
    return float(constant)


def concentration_report(
    samples: Sequence[DecayRateSample],
    window,
    constant=None,
    predicted_exponent: Optional[float] = None,
) -> ConcentrationReport:
    """Count, compare with the bound and fit over already computed samples.

    Args:
        samples (list): one :class:`DecayRateSample` per ``N``, ascending.
        window (Window or float): shrinking window, or a fixed half-width.
        constant (SpectralConstant or float, optional): ``c`` used in the bound column.
        predicted_exponent (float, optional): large-deviation prediction shown next to the fit.
    """
    window = as_window(window)
    N_values = [s.N for s in samples]
    if len(samples) < 3:
        raise_error(BadParameter, f"Concentration needs at least 3 dimensions, got {N_values}.")
    if any(b <= a for a, b in zip(N_values, N_values[1:])):
        raise_error(BadParameter, f"Dimensions must be strictly ascending, got {N_values}.")
    c = constant_value(constant)
    report = ConcentrationReport(
        rows=[],
        mode=window.mode,
        alpha=getattr(window, "alpha", None),
        epsilon_fixed=getattr(window, "epsilon", None),
        c=None if c is None or c == inf else c,
        predicted_exponent=predicted_exponent,
    )
    for sample in samples:
        width = window.half_width(sample.N)
        count, fraction = count_outside(sample, window)
        above, fraction_above = count_above(sample, window)
        bound = None if c is None else bound_value(width, sample.N, c)
        exceeded = bound is not None and fraction > BOUND_SAFETY * bound
        if exceeded:
            message = (
                f"N={sample.N}: outside fraction {fraction:.4g} exceeds "
                f"{BOUND_SAFETY:g} x bound {bound:.4g}"
            )
            logger.warning(message)
            report.warnings.append(message)
        center = float(np.mean(sample.rates))
        report.rows.append(
            ConcentrationRow(
                N=sample.N,
                log_N=log(sample.N),
                width=width,
                count_outside=count,
                fraction_outside=fraction,
                bound_value=bound,
                count_above=above,
                fraction_above=fraction_above,
                empirical_center=center,
                center_drift=center - sample.center,
                bound_exceeded=exceeded,
            )
        )
    report.non_increasing = non_increasing(report.fractions)
    if not report.non_increasing:
        message = f"Outside fractions {report.fractions} increase beyond the noise allowance"
        logger.warning(message)
        report.warnings.append(message)
    if window.mode == "fixed":
        try:
            report.fitted_exponent = fit_decay_exponent(N_values, report.fractions)
        except DegenerateFit:
            report.perfect_concentration = True
    elif not any(report.fractions):
        report.perfect_concentration = True
    return report


def predicted_ldp_exponent(rate_function, center: float, epsilon: float, lambda0: float):
    """``min(I(center + epsilon), I(center - epsilon)) / Lambda_0``, if tabulated."""
    try:
        return min(rate_function(center + epsilon), rate_function(center - epsilon)) / lambda0
    except EtaOutOfRange:
        return None


def concentration_sweep(
    kappa: HyperbolicToralAutomorphism,
    g: TorusObservable,
    N_list: Sequence[int],
    alpha: float,
    mode: str = "shrinking",
    epsilon: Optional[float] = None,
    constant=None,
    rate_function=None,
    backend=None,
    jobs: int = 1,
    return_spectra: bool = False,
):
    """Build, diagonalize and count for every ``N`` in ``N_list``.

    Args:
        kappa (HyperbolicToralAutomorphism): quantizable map.
        g (TorusObservable): non-negative damping.
        N_list (list): ascending dimensions, at least three.
        alpha (float): shrinking-window exponent.
        mode (str): ``"shrinking"`` or ``"fixed"``.
        epsilon (float, optional): fixed half-width, required in fixed mode.
        constant (SpectralConstant, optional): ``c`` for the bound; computed from ``g`` by default.
        rate_function (RateFunction, optional): rate function of ``g`` for the
            fixed-mode exponent prediction.
        backend (str, optional): eigensolver backend.
        jobs (int): worker threads across dimensions.
        return_spectra (bool): also return the eigenvalues per ``N``.
    """
    if mode == "shrinking":
        window: Window = ShrinkingWindow(alpha)
    elif mode == "fixed":
        if epsilon is None:
            raise_error(BadParameter, "Fixed-window mode needs epsilon.")
        window = as_window(epsilon)
    else:
        raise_error(BadParameter, f"Unknown window mode {mode}.")
    N_list = list(N_list)
    if len(N_list) < 3 or any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise_error(BadParameter, f"N_list must be ascending with at least 3 entries, got {N_list}.")
    if constant is None:
        constant = concentration_constant(kappa, g)

    def diagonalize(N):
        system = damped_propagator(kappa, g, N)
        eigenvalues = spectrum(system, backend)
        return eigenvalues, decay_rates(system, g, alpha, eigenvalues=eigenvalues)

    with ThreadPoolExecutor(max_workers=max(1, int(jobs))) as pool:
        results = list(pool.map(diagonalize, N_list))
    predicted = None
    if mode == "fixed" and rate_function is not None:
        predicted = predicted_ldp_exponent(rate_function, g.mean(), epsilon, kappa.expansion_rate)
    report = concentration_report([r[1] for r in results], window, constant, predicted)
    if return_spectra:
        return report, {N: r[0] for N, r in zip(N_list, results)}
    return report
