import numpy as np
import pytest
from scipy import integrate, special

from dampedmaps.models.dynamics import make_map
from dampedmaps.models.observables import TorusObservable, coboundary, is_positive

ARNOLD = make_map(2, 1, 1, 1)


def test_cosine_values():
    q = TorusObservable.cosine((1, 0))
    assert q.mean() == 0.0
    assert q.radius == 1
    np.testing.assert_allclose(q([0.0, 0.5, 0.25], [0.3, 0.1, 0.9]), [1.0, -1.0, 0.0], atol=1e-14)


def test_cosine_with_phase_and_offset():
    q = TorusObservable.cosine((1, 1), amplitude=0.5, phase=0.3, offset=2.0)
    x, p = np.array([0.1, 0.7]), np.array([0.2, 0.4])
    np.testing.assert_allclose(q(x, p), 2.0 + 0.5 * np.cos(2 * np.pi * (x + p) + 0.3))
    assert q.mean() == 2.0


def test_negative_mode_cosine_is_normalized():
    q = TorusObservable.cosine((-1, 0))
    assert q == TorusObservable.cosine((1, 0))


def test_constant():
    q = TorusObservable.constant(0.7)
    assert q.is_constant()
    assert q.radius == 0
    np.testing.assert_allclose(q([0.1, 0.2], [0.3, 0.4]), [0.7, 0.7])


def test_non_real_coefficients_rejected():
    with pytest.raises(ValueError):
        TorusObservable({(1, 0): 1.0})
    with pytest.raises(ValueError):
        TorusObservable({(1, 0): 1.0, (-1, 0): 1.0j})


def test_truncation_radius_too_small():
    with pytest.raises(ValueError):
        TorusObservable({(2, 0): 0.5, (-2, 0): 0.5}, K=1)


def test_is_positive():
    assert is_positive((1, -5))
    assert is_positive((0, 1))
    assert not is_positive((0, 0))
    assert not is_positive((-1, 3))


@pytest.mark.parametrize("xi", [0.5, 1.0, -2.0])
def test_from_function_bessel_coefficients(xi):
    # e^{xi cos(2 pi x)} = I_0(xi) + 2 sum_n I_n(xi) cos(2 pi n x)
    weight = TorusObservable.from_function(lambda x, p: np.exp(xi * np.cos(2 * np.pi * x)), 8)
    for n in range(0, 6):
        assert weight.coefficients[(n, 0)].real == pytest.approx(special.iv(n, xi), rel=1e-10)
    assert all(m[1] == 0 for m in weight.coefficients)


def test_from_function_matches_quadrature():
    def f(x, p):
        return np.exp(0.4 * np.cos(2 * np.pi * x) + 0.2 * np.sin(2 * np.pi * p))

    weight = TorusObservable.from_function(f, 6)
    mean, _ = integrate.dblquad(lambda p, x: f(x, p), 0, 1, 0, 1)
    assert weight.mean() == pytest.approx(mean, rel=1e-7)
    re, _ = integrate.quad(lambda x: np.exp(0.4 * np.cos(2 * np.pi * x)) * np.cos(2 * np.pi * x), 0, 1)
    assert weight.coefficients[(1, 0)].real == pytest.approx(re * special.iv(0, 0.2), rel=1e-7)


def test_arithmetic():
    q = TorusObservable.cosine((1, 0))
    r = TorusObservable.cosine((0, 1))
    x, p = np.array([0.1, 0.6]), np.array([0.3, 0.8])
    np.testing.assert_allclose((q + r)(x, p), q(x, p) + r(x, p))
    np.testing.assert_allclose((2 * q - r + 1.0)(x, p), 2 * q(x, p) - r(x, p) + 1.0)
    np.testing.assert_allclose((-q)(x, p), -q(x, p))
    assert (q - q).is_constant()


def test_compose():
    q = TorusObservable.cosine((1, 0))
    composed = q.compose(ARNOLD)
    rng = np.random.default_rng(1)
    x, p = rng.random(50), rng.random(50)
    np.testing.assert_allclose(composed(x, p), np.cos(2 * np.pi * (2 * x + p)), atol=1e-12)


def test_coboundary_mean_zero():
    h = TorusObservable.cosine((1, 1), amplitude=0.4)
    g = coboundary(h, ARNOLD)
    assert g.mean() == 0.0
    assert set(g.nonzero_modes()) == {(1, 1), (-1, -1), (3, 2), (-3, -2)}


def test_json_and_fingerprint():
    q = TorusObservable.cosine((1, 2), amplitude=0.3, phase=0.2, offset=0.1)
    restored = TorusObservable.from_json(q.to_json())
    assert restored == q
    assert restored.fingerprint() == q.fingerprint()
    assert TorusObservable.cosine((1, 2)).fingerprint() != q.fingerprint()


def test_sup_norm_bound():
    q = TorusObservable.cosine((1, 0), amplitude=0.3, offset=0.3)
    assert q.sup_norm_bound() == pytest.approx(0.6)


def test_full_series_is_real():
    q = TorusObservable.from_modes(
        {(1, 0): 0.3 + 0.2j, (1, -2): -0.1j, (0, 1): 0.25, (2, 3): 0.05 - 0.07j}, constant=0.5
    )
    rng = np.random.default_rng(3)
    x, p = rng.random(1000), rng.random(1000)
    total = np.zeros(1000, dtype=complex)
    for (m1, m2), c in q.coefficients.items():
        total += c * np.exp(2j * np.pi * (m1 * x + m2 * p))
    assert np.max(np.abs(total.imag)) < 1e-12
    np.testing.assert_allclose(total.real, q(x, p), atol=1e-12)
