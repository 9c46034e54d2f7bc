"""Real observables on the 2-torus stored as truncated Fourier series."""

import hashlib
import json
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from qibo.config import raise_error

from dampedmaps.config import COEFFICIENT_CUTOFF
from dampedmaps.models.dynamics import HyperbolicToralAutomorphism, Mode, pushforward_mode

# tolerance on the conjugate symmetry of user supplied coefficients
SYMMETRY_TOL = 1e-12


def is_positive(m: Mode) -> bool:
    """Lexicographic positivity of a lattice point."""
    return m[0] > 0 or (m[0] == 0 and m[1] > 0)


class TorusObservable:
    """Real trigonometric polynomial ``q(x, p) = sum_m c_m e^{2 pi i (m1 x + m2 p)}``.

    Args:
        coefficients (dict): map from lattice points to complex coefficients,
            closed under ``m -> -m`` with ``c_{-m} = conj(c_m)``.
        K (int, optional): truncation radius; defaults to the largest stored mode.
    """

    def __init__(self, coefficients: Dict[Mode, complex], K: Optional[int] = None):
        coefficients = {
            (int(m[0]), int(m[1])): complex(c)
            for m, c in coefficients.items()
            if complex(c) != 0
        }
        for m, c in coefficients.items():
            partner = coefficients.get((-m[0], -m[1]))
            if partner is None or abs(partner - c.conjugate()) > SYMMETRY_TOL:
                raise_error(
                    ValueError,
                    f"Coefficient of mode {m} has no conjugate partner; "
                    "the observable would not be real.",
                )
        # exact symmetrization keeps evaluations real to rounding
        symmetric = {}
        for m, c in coefficients.items():
            if m == (0, 0):
                symmetric[m] = complex(c.real, 0.0)
            elif is_positive(m):
                c = (c + coefficients[(-m[0], -m[1])].conjugate()) / 2
                symmetric[m] = c
                symmetric[(-m[0], -m[1])] = c.conjugate()
        radius = max((max(abs(m[0]), abs(m[1])) for m in symmetric), default=0)
        if K is None:
            K = radius
        if K < radius:
            raise_error(
                ValueError, f"Truncation radius {K} is smaller than stored modes ({radius})."
            )
        self.coefficients = symmetric
        self.K = int(K)

    @classmethod
    def from_modes(cls, modes: Dict[Mode, complex], constant: float = 0.0, K=None):
        """Build from the lexicographically positive half and the zero mode."""
        coefficients = {(0, 0): complex(constant)}
        for m, c in modes.items():
            if not is_positive(m):
                raise_error(ValueError, f"Mode {m} is not lexicographically positive.")
            coefficients[tuple(m)] = complex(c)
            coefficients[(-m[0], -m[1])] = complex(c).conjugate()
        return cls(coefficients, K)

    @classmethod
    def constant(cls, value: float) -> "TorusObservable":
        return cls({(0, 0): complex(value)})

    @classmethod
    def cosine(
        cls, m: Mode = (1, 0), amplitude: float = 1.0, phase: float = 0.0, offset=0.0
    ) -> "TorusObservable":
        """``offset + amplitude * cos(2 pi m . z + phase)``."""
        if not is_positive(m):
            m, phase = (-m[0], -m[1]), -phase
        return cls.from_modes({m: amplitude / 2 * np.exp(1j * phase)}, constant=offset)

    @classmethod
    def from_function(
        cls, function: Callable, K: int, grid: Optional[int] = None
    ) -> "TorusObservable":
        """Fourier coefficients of a real function by grid evaluation and FFT.

        Coefficients with modulus below ``COEFFICIENT_CUTOFF`` are dropped.

        Args:
            function (callable): vectorized ``f(x, p)`` on arrays.
            K (int): largest retained mode.
            grid (int, optional): number of grid points per axis, ``4 K`` by default.
        """
        n = grid if grid is not None else max(4 * K, 2 * K + 2)
        axis = np.arange(n) / n
        x, p = np.meshgrid(axis, axis, indexing="ij")
        values = np.asarray(function(x, p), dtype=float)
        spectrum = np.fft.fft2(values) / (n * n)
        coefficients = {}
        for m1 in range(-K, K + 1):
            for m2 in range(-K, K + 1):
                c = spectrum[m1 % n, m2 % n]
                if abs(c) >= COEFFICIENT_CUTOFF:
                    coefficients[(m1, m2)] = complex(c)
        # dropping keeps pairs together since |c_m| = |c_{-m}| up to rounding
        for m in list(coefficients):
            partner = (-m[0], -m[1])
            if partner not in coefficients:
                coefficients[partner] = coefficients[m].conjugate()
            else:
                mean = (coefficients[m] + coefficients[partner].conjugate()) / 2
                coefficients[m], coefficients[partner] = mean, mean.conjugate()
        return cls(coefficients)

    @property
    def radius(self) -> int:
        """Largest ``max(|m1|, |m2|)`` over stored modes."""
        return max((max(abs(m[0]), abs(m[1])) for m in self.coefficients), default=0)

    def mean(self) -> float:
        return self.coefficients.get((0, 0), 0j).real

    def sup_norm_bound(self) -> float:
        return float(sum(abs(c) for c in self.coefficients.values()))

    def nonzero_modes(self) -> Dict[Mode, complex]:
        return {m: c for m, c in self.coefficients.items() if m != (0, 0)}

    def is_constant(self) -> bool:
        return not self.nonzero_modes()

    def half_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Positive-half modes and coefficients in deterministic order."""
        modes = sorted(m for m in self.coefficients if is_positive(m))
        coefficients = np.array([self.coefficients[m] for m in modes], dtype=complex)
        return np.array(modes, dtype=np.int64).reshape(-1, 2), coefficients

    def evaluate(self, x, p) -> np.ndarray:
        """Real values at points ``(x, p)`` using the positive half of the series."""
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        total = np.full(np.broadcast(x, p).shape, self.mean())
        modes, coefficients = self.half_arrays()
        for (m1, m2), c in zip(modes, coefficients):
            phase = 2 * np.pi * (m1 * x + m2 * p)
            total = total + 2 * (c.real * np.cos(phase) - c.imag * np.sin(phase))
        return total

    def __call__(self, x, p):
        return self.evaluate(x, p)

    def scale(self, s: float) -> "TorusObservable":
        return TorusObservable({m: s * c for m, c in self.coefficients.items()}, self.K)

    def __mul__(self, s: float) -> "TorusObservable":
        return self.scale(s)

    __rmul__ = __mul__

    def __neg__(self) -> "TorusObservable":
        return self.scale(-1.0)

    def __add__(self, other) -> "TorusObservable":
        if not isinstance(other, TorusObservable):
            other = TorusObservable.constant(float(other))
        coefficients = dict(self.coefficients)
        for m, c in other.coefficients.items():
            coefficients[m] = coefficients.get(m, 0j) + c
        return TorusObservable(coefficients, max(self.K, other.K))

    __radd__ = __add__

    def __sub__(self, other) -> "TorusObservable":
        return self + (-other if isinstance(other, TorusObservable) else -float(other))

    def compose(self, kappa: HyperbolicToralAutomorphism) -> "TorusObservable":
        """The observable ``q o kappa``, exact on Fourier modes."""
        return TorusObservable(
            {pushforward_mode(kappa, m): c for m, c in self.coefficients.items()}
        )

    def to_json(self) -> dict:
        modes = [{"m": [0, 0], "re": self.mean(), "im": 0.0}]
        for m in sorted(m for m in self.coefficients if is_positive(m)):
            c = self.coefficients[m]
            modes.append({"m": [m[0], m[1]], "re": c.real, "im": c.imag})
        return {"K": self.K, "modes": modes}

    @classmethod
    def from_json(cls, document) -> "TorusObservable":
        if isinstance(document, str):
            document = json.loads(document)
        constant, half = 0.0, {}
        for entry in document["modes"]:
            m = (int(entry["m"][0]), int(entry["m"][1]))
            c = complex(entry.get("re", 0.0), entry.get("im", 0.0))
            if m == (0, 0):
                constant = c.real
            else:
                half[m] = c
        return cls.from_modes(half, constant=constant, K=document.get("K"))

    def fingerprint(self) -> str:
        """Content hash of the canonical JSON form."""
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TorusObservable):
            return NotImplemented
        return self.K == other.K and self.coefficients == other.coefficients

    def __repr__(self) -> str:
        return f"TorusObservable(K={self.K}, modes={len(self.coefficients)})"


def coboundary(
    h: TorusObservable, kappa: HyperbolicToralAutomorphism
) -> TorusObservable:
    """``h o kappa - h``: Birkhoff sums telescope, so its variance vanishes."""
    return h.compose(kappa) - h
