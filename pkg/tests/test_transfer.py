import numpy as np
import pytest

from dampedmaps.exceptions import BadParameter, BoxTooSmall, WeightOverflow
from dampedmaps.models.dynamics import make_map
from dampedmaps.models.observables import TorusObservable, coboundary
from dampedmaps.operations.transfer import (
    box_modes,
    build_weighted_transfer,
    check_xi_grid,
    leading_eigenvalue,
    mode_index,
    monte_carlo_cumulant,
    pressure_curve,
    weight_coefficients,
)

ARNOLD = make_map(2, 1, 1, 1)
COSINE = TorusObservable.cosine((1, 0))
SMALL_GRID = [-0.2, -0.15, -0.1, -0.05, 0.0, 0.05, 0.1, 0.15, 0.2]


def test_mode_index_matches_box_order():
    modes = box_modes(2)
    assert modes.shape == (25, 2)
    for i, m in enumerate(modes):
        assert mode_index(tuple(m), 2) == i


def test_weight_coefficients():
    assert weight_coefficients(COSINE, 0.0, 4) == {(0, 0): 1.0}
    constant = weight_coefficients(TorusObservable.constant(2.0), 0.5, 4)
    assert list(constant) == [(0, 0)]
    assert constant[(0, 0)].real == pytest.approx(np.exp(1.0))


def test_untilted_operator_fixes_constants():
    model = build_weighted_transfer(ARNOLD, COSINE, 0.0, 4)
    assert model.dimension == 81
    value, gap = leading_eigenvalue(model)
    assert value == pytest.approx(1.0, abs=1e-12)
    assert gap < 0.95


def test_constant_observable_pressure_is_linear():
    q = TorusObservable.constant(0.4)
    curve = pressure_curve(ARNOLD, q, SMALL_GRID, K_op=2)
    np.testing.assert_allclose(curve.F_values, 0.4 * np.array(SMALL_GRID), atol=1e-10)
    assert curve.sigma_sq_from_pressure == pytest.approx(0.0, abs=1e-8)


def test_pressure_curve_of_cosine():
    curve = pressure_curve(ARNOLD, COSINE, SMALL_GRID, K_op=12)
    assert curve.F_values[4] == 0.0
    assert curve.is_convex()
    assert curve.jensen_ok()
    assert curve.derivative_at_zero() == pytest.approx(0.0, abs=1e-2)
    assert curve.sigma_sq_from_pressure == pytest.approx(0.5, abs=2e-2)
    assert all(g < 0.95 for g in curve.gap_ratios)
    assert len(curve.rows()) == len(SMALL_GRID)
    assert curve.header()["K_op"] == 12


def test_box_too_small():
    with pytest.raises(BoxTooSmall):
        build_weighted_transfer(ARNOLD, TorusObservable.cosine((2, 1)), 0.1, 3)


def test_weight_overflow():
    with pytest.raises(WeightOverflow):
        build_weighted_transfer(ARNOLD, COSINE, 40.0, 4)


def test_tolerance_range():
    model = build_weighted_transfer(ARNOLD, COSINE, 0.1, 4)
    with pytest.raises(BadParameter):
        leading_eigenvalue(model, tol=1e-2)


@pytest.mark.parametrize("grid", [[-0.1, 0.1], [-0.1, 0.0, 0.2], [0.0]])
def test_invalid_xi_grid(grid):
    with pytest.raises(BadParameter):
        check_xi_grid(grid)


def test_monte_carlo_cumulant_agrees_with_pressure():
    xi = 0.2
    curve = pressure_curve(ARNOLD, COSINE, [-xi, 0.0, xi], K_op=12)
    estimate, stderr = monte_carlo_cumulant(
        ARNOLD, COSINE, xi, T=20, samples=20000, seed=5, return_stderr=True
    )
    assert estimate == pytest.approx(curve.F_values[2], abs=5e-3)
    assert stderr < 5e-3


def test_monte_carlo_cumulant_guards():
    assert monte_carlo_cumulant(ARNOLD, COSINE, 0.0, 10, 100, 0) == 0.0
    with pytest.raises(WeightOverflow):
        monte_carlo_cumulant(ARNOLD, COSINE, 1.0, 1000, 100, 0)


def test_pressure_curvature_at_full_box():
    curve = pressure_curve(ARNOLD, COSINE, [-0.1, -0.05, 0.0, 0.05, 0.1], K_op=32)
    assert curve.F_values[2] == 0.0
    assert curve.sigma_sq_from_pressure == pytest.approx(0.5, abs=1e-3)


def test_truncation_stability():
    small, _ = leading_eigenvalue(build_weighted_transfer(ARNOLD, COSINE, 0.2, 8))
    large, _ = leading_eigenvalue(build_weighted_transfer(ARNOLD, COSINE, 0.2, 48))
    assert abs(small - large) <= 1e-6
    assert np.log(large) == pytest.approx(0.5 * 0.5 * 0.2**2, abs=1e-3)


def test_coboundary_pressure_is_quartic():
    g = coboundary(COSINE, ARNOLD)
    curve = pressure_curve(ARNOLD, g, SMALL_GRID, K_op=12)
    cosine = pressure_curve(ARNOLD, COSINE, SMALL_GRID, K_op=12)
    for xi, F, F_cosine in zip(SMALL_GRID, curve.F_values, cosine.F_values):
        assert abs(F) <= xi**4
        if xi != 0.0:
            assert abs(F) < abs(F_cosine) / 10
    assert curve.sigma_sq_from_pressure == pytest.approx(0.0, abs=5e-2)
