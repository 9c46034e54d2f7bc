import math

import numpy as np
import pytest

from dampedmaps.exceptions import BadParameter, DegenerateFit
from dampedmaps.models.dynamics import make_map
from dampedmaps.models.observables import TorusObservable, coboundary
from dampedmaps.models.quantization import damped_propagator, spectrum
from dampedmaps.operations.legendre import RateFunction
from dampedmaps.operations.statistics import (
    DecayRateSample,
    bound_value,
    concentration_report,
    concentration_sweep,
    count_above,
    count_outside,
    fit_decay_exponent,
    non_increasing,
    predicted_ldp_exponent,
    sample_from_eigenvalues,
    weyl_count_check,
)
from dampedmaps.operations.windows import FixedWindow, ShrinkingWindow, as_window

ARNOLD = make_map(2, 1, 1, 1)
DAMPING = TorusObservable.cosine((1, 0), amplitude=0.3, offset=0.3)


def sample(N, rates, center=0.25, alpha=0.5):
    return DecayRateSample(N, np.sort(np.asarray(rates, dtype=float)), center, alpha, 0.0)


def test_shrinking_window():
    window = ShrinkingWindow(0.5)
    N = 1 << 10
    assert window.half_width(N) == pytest.approx(math.log(N) ** -0.25)
    assert window.admissible([128, 256, 512, 1024])
    assert window.describe() == {"mode": "shrinking", "log_scale": "log N", "alpha": 0.5}


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5])
def test_shrinking_window_exponent(alpha):
    with pytest.raises(BadParameter):
        ShrinkingWindow(alpha)


def test_fixed_window():
    window = as_window(0.1)
    assert isinstance(window, FixedWindow)
    assert window.half_width(4096) == 0.1
    assert not window.admissible([128, 256, 512])
    with pytest.raises(BadParameter):
        FixedWindow(0.0)


def test_count_outside():
    rates = sample(3, [0.0, 0.25, 0.5])
    assert count_outside(rates, 0.25) == (2, 2 / 3)
    assert count_above(rates, 0.25) == (1, 1 / 3)
    assert count_outside(rates, 0.3) == (0, 0.0)
    assert weyl_count_check(rates)


def test_bound_value():
    assert bound_value(0.5, 100, math.inf) == 0.0
    scale = 0.25 * math.log(100)
    assert bound_value(0.5, 100, 2.0) == pytest.approx(math.exp(-2.0 * scale) / scale)


def test_fit_decay_exponent():
    N_values = [64, 128, 256, 512]
    fractions = [N**-0.5 for N in N_values]
    assert fit_decay_exponent(N_values, fractions) == pytest.approx(0.5)
    assert math.isnan(fit_decay_exponent(N_values, [0.0, 0.0, 0.1, 0.0]))
    with pytest.raises(DegenerateFit):
        fit_decay_exponent(N_values, [0.0] * 4)


def test_non_increasing():
    assert non_increasing([0.5, 0.4, 0.42, 0.1])
    assert not non_increasing([0.1, 0.2])


def test_report_on_synthetic_spectra():
    samples = [
        sample(4, [0.0, 0.25, 0.25, 0.5]),
        sample(8, [0.0] + [0.25] * 7),
        sample(16, [0.25] * 16),
    ]
    report = concentration_report(samples, FixedWindow(0.25), constant=1.0)
    assert report.fractions == [0.5, 0.125, 0.0]
    assert report.mode == "fixed"
    assert report.epsilon_fixed == 0.25
    assert report.non_increasing
    assert report.fitted_exponent == pytest.approx(2.0)
    assert [row.bound_value for row in report.rows] == [
        pytest.approx(bound_value(0.25, N, 1.0)) for N in (4, 8, 16)
    ]
    assert len(report.csv_rows()) == 3
    assert report.to_json()["rows"][0]["count_outside"] == 2


def test_report_flags_excess_over_bound():
    samples = [sample(N, [0.0] * N) for N in (4, 8, 16)]
    report = concentration_report(samples, FixedWindow(0.25), constant=100.0)
    assert all(row.bound_exceeded for row in report.rows)
    assert len(report.warnings) == 3


def test_report_needs_three_ascending_dimensions():
    with pytest.raises(BadParameter):
        concentration_report([sample(4, [0.25] * 4), sample(8, [0.25] * 8)], 0.1)
    with pytest.raises(BadParameter):
        concentration_report([sample(N, [0.25] * N) for N in (8, 4, 16)], 0.1)


def test_sample_from_eigenvalues():
    eigenvalues = np.exp(-np.array([0.1, 0.3, 0.2])) * np.exp(1j * np.array([0.0, 1.0, 2.0]))
    result = sample_from_eigenvalues(3, eigenvalues, 0.2, 0.5)
    np.testing.assert_allclose(result.rates, [0.1, 0.2, 0.3])
    assert result.width == pytest.approx(math.log(3) ** -0.25)
    assert result.negative_count == 0


def test_predicted_ldp_exponent():
    rate = RateFunction([-1.0, -0.5, 0.0, 0.5, 1.0], [0.5, 0.125, 0.0, 0.125, 0.5])
    assert predicted_ldp_exponent(rate, 0.0, 0.5, 2.0) == pytest.approx(0.0625)
    assert predicted_ldp_exponent(rate, 0.0, 2.0, 2.0) is None


def test_undamped_sweep_concentrates_perfectly():
    report = concentration_sweep(ARNOLD, TorusObservable.constant(0.0), [16, 32, 64], 0.5)
    assert report.fractions == [0.0, 0.0, 0.0]
    assert report.perfect_concentration
    assert all(row.bound_value == 0.0 for row in report.rows)


def test_coboundary_damping_has_vanishing_bound():
    h = TorusObservable.cosine((1, 0), amplitude=0.1)
    g = 0.3 + coboundary(h, ARNOLD)
    report = concentration_sweep(ARNOLD, g, [64, 128, 256], 0.5)
    assert report.c is None
    assert all(row.bound_value == 0.0 for row in report.rows)


def test_damped_sweep(backend):
    report, spectra = concentration_sweep(
        ARNOLD, DAMPING, [32, 64, 128], 0.5, backend=backend, return_spectra=True
    )
    assert sorted(spectra) == [32, 64, 128]
    assert all(spectra[N].size == N for N in spectra)
    assert all(0.0 <= f <= 1.0 for f in report.fractions)
    for row in report.rows:
        # |det M| = prod a(j / N) = exp(-N mean(g)) for a damping depending on x only
        assert row.center_drift == pytest.approx(0.0, abs=1e-6)
        assert row.width == pytest.approx(math.log(row.N) ** -0.25)
    assert report.c == pytest.approx(1 / (2 * ARNOLD.expansion_rate * 0.045))


def test_fixed_mode_sweep():
    report = concentration_sweep(ARNOLD, DAMPING, [32, 64, 128], 0.5, mode="fixed", epsilon=0.05)
    assert report.mode == "fixed"
    assert report.perfect_concentration or report.fitted_exponent is not None
    with pytest.raises(BadParameter):
        concentration_sweep(ARNOLD, DAMPING, [32, 64, 128], 0.5, mode="fixed")
    with pytest.raises(BadParameter):
        concentration_sweep(ARNOLD, DAMPING, [32, 64], 0.5)


RANDOM_RATES = np.random.default_rng(5).uniform(0.0, 0.6, size=257)
EPSILONS = [0.01, 0.03, 0.07, 0.12, 0.2, 0.35]


@pytest.mark.parametrize("epsilon", EPSILONS)
def test_fixed_count_is_two_sided(epsilon):
    center = 0.3
    reflected = 2 * center - RANDOM_RATES
    original = count_outside(sample(257, RANDOM_RATES, center), epsilon)
    assert count_outside(sample(257, reflected, center), epsilon) == original
    above = count_above(sample(257, RANDOM_RATES, center), epsilon)[0]
    below = count_above(sample(257, reflected, center), epsilon)[0]
    assert above + below == original[0]


@pytest.mark.parametrize("shift", [-0.2, 0.15, 1.0])
def test_fixed_count_is_shift_covariant(shift):
    original = sample(257, RANDOM_RATES, 0.3)
    shifted = sample(257, RANDOM_RATES + shift, 0.3 + shift)
    for epsilon in EPSILONS:
        assert count_outside(shifted, epsilon) == count_outside(original, epsilon)


def test_fixed_count_is_monotone_in_epsilon():
    system = damped_propagator(ARNOLD, DAMPING, 64)
    spectral = sample_from_eigenvalues(64, spectrum(system), DAMPING.mean(), 0.5)
    for rates in (spectral, sample(257, RANDOM_RATES, 0.3)):
        counts = [count_outside(rates, epsilon)[0] for epsilon in EPSILONS]
        assert all(later <= earlier for earlier, later in zip(counts, counts[1:]))
    assert count_outside(spectral, 10.0) == (0, 0.0)
