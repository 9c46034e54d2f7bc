from abc import ABC, abstractmethod
from math import log
from typing import Sequence

from qibo.config import raise_error

from dampedmaps.exceptions import BadParameter


class Window(ABC):
    """Half-width of the decay-rate window around the damping average, as a function of ``N``.

    The semiclassical scale ``|log h|`` is realized as ``log N``.
    """

    mode: str = ""

    @abstractmethod
    def half_width(self, N: int) -> float:
        """Window half-width at Hilbert dimension ``N``."""
        raise_error(NotImplementedError)

    @abstractmethod
    def admissible(self, N_list: Sequence[int]) -> bool:
        """Whether ``w -> 0`` and ``w^2 log N -> infinity`` hold, symbolically and on the grid."""
        raise_error(NotImplementedError)

    def describe(self) -> dict:
        return {"mode": self.mode, "log_scale": "log N"}


class ShrinkingWindow(Window):
    mode = "shrinking"

    def __init__(self, alpha: float):
        """
        Shrinking window ``w(N) = (log N)^{-(1 - alpha)/2}``.

        Args:
            alpha (float): exponent in ``(0, 1)``.
        """
        if not 0 < alpha < 1:
            raise_error(BadParameter, f"Window exponent alpha must lie in (0, 1), got {alpha}.")
        self.alpha = float(alpha)

    def half_width(self, N: int) -> float:
        if N < 2:
            raise_error(BadParameter, f"Window needs N >= 2, got {N}.")
        return log(N) ** (-(1 - self.alpha) / 2)

    def admissible(self, N_list: Sequence[int]) -> bool:
        # w = L^{-(1-alpha)/2} -> 0 and w^2 L = L^alpha -> infinity for alpha in (0, 1)
        symbolic = -(1 - self.alpha) / 2 < 0 < self.alpha
        widths = [self.half_width(N) for N in N_list]
        scales = [w * w * log(N) for w, N in zip(widths, N_list)]
        shrinking = all(b < a for a, b in zip(widths, widths[1:]))
        growing = all(b > a for a, b in zip(scales, scales[1:]))
        return symbolic and shrinking and growing

    def describe(self) -> dict:
        return {**super().describe(), "alpha": self.alpha}


class FixedWindow(Window):
    mode = "fixed"

    def __init__(self, epsilon: float):
        """Fixed window of half-width ``epsilon``, the large-deviation regime."""
        if not epsilon > 0:
            raise_error(BadParameter, f"Window half-width must be positive, got {epsilon}.")
        self.epsilon = float(epsilon)

    def half_width(self, N: int) -> float:
        return self.epsilon

    def admissible(self, N_list: Sequence[int]) -> bool:
        return False

    def describe(self) -> dict:
        return {**super().describe(), "epsilon": self.epsilon}


def as_window(window) -> Window:
    """Numbers stand for fixed windows."""
    if isinstance(window, Window):
        return window
    return FixedWindow(float(window))
