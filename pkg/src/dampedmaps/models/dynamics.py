"""Hyperbolic toral automorphisms and their action on points and Fourier modes."""

from dataclasses import dataclass, field
from math import log, sqrt
from typing import Tuple

import numpy as np
from qibo.config import raise_error

from dampedmaps.config import ESCAPE_CAP
from dampedmaps.exceptions import LagTooSmall, NotHyperbolic, NotUnimodular

Mode = Tuple[int, int]


@dataclass(frozen=True)
class HyperbolicToralAutomorphism:
    """Linear Anosov map ``(x, p) -> (a x + b p, c x + d p) mod 1`` of the 2-torus.

    The Lebesgue measure on the torus is invariant. For linear maps the
    differential is constant, hence the energy-shell rate and the cosphere
    rate of the flow setting coincide and a single ``expansion_rate`` is
    stored: the logarithm of the eigenvalue of largest modulus.
    """

    a: int
    b: int
    c: int
    d: int
    expansion_rate: float = field(init=False)

    def __post_init__(self):
        trace = abs(self.a + self.d)
        rate = log((trace + sqrt(trace * trace - 4)) / 2) if trace > 2 else 0.0
        object.__setattr__(self, "expansion_rate", rate)

    @property
    def entries(self) -> Tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    @property
    def trace(self) -> int:
        return self.a + self.d

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=np.int64)

    def transpose(self) -> "HyperbolicToralAutomorphism":
        return HyperbolicToralAutomorphism(self.a, self.c, self.b, self.d)

    def inverse(self) -> "HyperbolicToralAutomorphism":
        return HyperbolicToralAutomorphism(self.d, -self.b, -self.c, self.a)

    def power(self, n: int) -> "HyperbolicToralAutomorphism":
        """Return the map iterated ``n`` times, with exact integer entries."""
        base = self if n >= 0 else self.inverse()
        a, b, c, d = 1, 0, 0, 1
        for _ in range(abs(n)):
            a, b, c, d = (
                base.a * a + base.b * c,
                base.a * b + base.b * d,
                base.c * a + base.d * c,
                base.c * b + base.d * d,
            )
        return HyperbolicToralAutomorphism(a, b, c, d)

    def growth_rate(self, t: int) -> float:
        """Finite-time estimate ``(1/t) log ||d kappa^t||`` of the expansion rate."""
        if t < 1:
            raise_error(ValueError, f"Growth rate needs t >= 1, got {t}.")
        power = self.power(t)
        norm = np.linalg.norm(np.array(power.entries, dtype=float).reshape(2, 2), 2)
        return float(np.log(norm) / t)

    def unstable_projection(self) -> Tuple[np.ndarray, float, float]:
        """Spectral data of the transpose used to certify mode escape.

        Returns:
            tuple: the functional ``ell`` such that ``ell . v`` is the unstable
            coordinate of ``v`` for the transpose, the modulus of the unstable
            eigenvalue, and the norm of ``ell``.
        """
        eigenvalues, eigenvectors = np.linalg.eig(self.matrix.T.astype(float))
        order = np.argsort(np.abs(eigenvalues))
        stable = eigenvectors[:, order[0]].real
        unstable = eigenvectors[:, order[1]].real
        normal = np.array([-stable[1], stable[0]])
        ell = normal / np.dot(normal, unstable)
        return ell, float(abs(eigenvalues[order[1]])), float(np.linalg.norm(ell))


def reduce_mod_one(values):
    """Reduce coordinates to [0, 1); tiny negatives that round up to 1.0 fold back to 0.0."""
    reduced = np.mod(values, 1.0)
    return np.where(reduced >= 1.0, 0.0, reduced)


@dataclass(frozen=True)
class TorusPoint:
    """Point of the 2-torus with coordinates reduced modulo one."""

    x: float
    p: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(reduce_mod_one(float(self.x))))
        object.__setattr__(self, "p", float(reduce_mod_one(float(self.p))))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.p])


def make_map(a: int, b: int, c: int, d: int) -> HyperbolicToralAutomorphism:
    """Build a validated hyperbolic toral automorphism.

    Args:
        a, b, c, d (int): entries of the integer matrix ``[[a, b], [c, d]]``.
    Returns:
        HyperbolicToralAutomorphism: the map, with its expansion rate.
    """
    entries = (a, b, c, d)
    if any(int(e) != e for e in entries):
        raise_error(NotUnimodular, f"Map entries must be integers, got {entries}.")
    a, b, c, d = (int(e) for e in entries)
    if a * d - b * c != 1:
        raise_error(
            NotUnimodular,
            f"Map {entries} has determinant {a * d - b * c}, expected 1.",
        )
    if abs(a + d) <= 2:
        raise_error(
            NotHyperbolic,
            f"Map {entries} has trace {a + d}; hyperbolicity needs |trace| > 2.",
        )
    return HyperbolicToralAutomorphism(a, b, c, d)


def step_arrays(kappa: HyperbolicToralAutomorphism, x, p, steps: int):
    """Iterate ``kappa`` (or its inverse) on coordinate arrays, reducing modulo one."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    a, b, c, d = kappa.entries if steps >= 0 else kappa.inverse().entries
    for _ in range(abs(steps)):
        x, p = reduce_mod_one(a * x + b * p), reduce_mod_one(c * x + d * p)
    return x, p


def apply_map(
    kappa: HyperbolicToralAutomorphism, rho: TorusPoint, steps: int
) -> TorusPoint:
    """Apply ``kappa`` ``steps`` times (negative values use the inverse map)."""
    x, p = step_arrays(kappa, rho.x, rho.p, steps)
    return TorusPoint(float(x), float(p))


def pushforward_mode(kappa: HyperbolicToralAutomorphism, m: Mode) -> Mode:
    """Koopman action on Fourier modes: ``e(m . z) o kappa = e((kappa^T m) . z)``."""
    m1, m2 = m
    return (kappa.a * m1 + kappa.c * m2, kappa.b * m1 + kappa.d * m2)


def in_box(m: Mode, radius: int) -> bool:
    return abs(m[0]) <= radius and abs(m[1]) <= radius


def escape_time(kappa: HyperbolicToralAutomorphism, m: Mode, radius: int) -> int:
    """First step after which the pushed mode never re-enters the box.

    The unstable coordinate of ``(kappa^T)^t m`` grows geometrically, so once
    it exceeds the largest unstable coordinate attainable inside the box
    ``[-radius, radius]^2`` the mode stays outside for every later step.

    Args:
        kappa (HyperbolicToralAutomorphism): the map.
        m (tuple): nonzero lattice point.
        radius (int): half-width of the box.
    Returns:
        int: the certified escape step.
    """
    if m == (0, 0):
        raise_error(ValueError, "The constant mode never escapes.")
    ell, _, ell_norm = kappa.unstable_projection()
    threshold = ell_norm * sqrt(2.0) * radius
    mode = m
    for t in range(ESCAPE_CAP + 1):
        if abs(np.dot(ell, mode)) > threshold and not in_box(mode, radius):
            return t
        mode = pushforward_mode(kappa, mode)
    raise_error(
        LagTooSmall,
        f"Mode {m} did not certifiably leave the box of radius {radius} "
        f"within {ESCAPE_CAP} steps.",
    )
