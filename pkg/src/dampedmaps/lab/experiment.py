"""Experiment configuration: a single flat JSON document, validated before any computation."""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

from qibo.config import raise_error

from dampedmaps.backends import PLATFORMS
from dampedmaps.config import (
    DEFAULT_XI_GRID,
    MAX_DENSE_DIMENSION,
    MIN_VARIANCE_SAMPLES,
    WEIGHT_OVERFLOW,
)
from dampedmaps.exceptions import (
    BadParameter,
    BadScaling,
    BoxTooSmall,
    ConfigError,
    InsufficientData,
    WeightOverflow,
)
from dampedmaps.models.dynamics import HyperbolicToralAutomorphism, make_map
from dampedmaps.models.observables import TorusObservable
from dampedmaps.models.quantization.damped import damping_symbol
from dampedmaps.models.quantization.metaplectic import check_quantizable
from dampedmaps.models.quantization.weyl import check_aliasing
from dampedmaps.operations.deviation import required_lag
from dampedmaps.operations.transfer import check_xi_grid

# fields that never change numerical output
RUNTIME_FIELDS = ("jobs", "output_dir", "stages")

CLASSICAL_STAGES = ("variance", "constant", "mdp", "pressure", "rate", "gartner_ellis")
QUANTUM_STAGES = ("damping_constant", "spectrum", "concentration")


def default_observable() -> dict:
    return TorusObservable.cosine((1, 0)).to_json()


def default_damping() -> dict:
    return TorusObservable.cosine((1, 0), amplitude=0.3, offset=0.3).to_json()


@dataclass
class ExperimentConfig:
    map: List[int] = field(default_factory=lambda: [2, 1, 1, 1])
    observable: dict = field(default_factory=default_observable)
    damping: Optional[dict] = field(default_factory=default_damping)
    N_list: List[int] = field(default_factory=lambda: [128, 256, 512, 1024])
    T_list: List[int] = field(default_factory=lambda: [50, 100, 200])
    gamma: float = 0.25
    epsilon_grid: List[float] = field(default_factory=lambda: [1.0])
    window_epsilon: float = 0.1
    alpha: float = 0.5
    xi_grid: List[float] = field(default_factory=lambda: list(DEFAULT_XI_GRID))
    eta_points: int = 41
    K_op: int = 32
    samples: int = 1_000_000
    variance_T: int = 100
    seed: int = 0
    tol: float = 1e-12
    backend: str = "numpy"
    stages: Optional[List[str]] = None
    jobs: int = 1
    output_dir: str = "results"

    @classmethod
    def from_dict(cls, document: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(document) - known)
        if unknown:
            raise_error(ConfigError, f"Unknown configuration fields {unknown}.")
        return cls(**document)

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        """Load a JSON document; ``overrides`` with value ``None`` are ignored.

        ``OUTPUT_DIR`` in the environment replaces the document's output directory.
        """
        try:
            with open(path, encoding="utf-8") as stream:
                document = json.load(stream)
        except (OSError, json.JSONDecodeError) as exc:
            raise_error(ConfigError, f"Cannot read configuration {path}: {exc}")
        if not isinstance(document, dict):
            raise_error(ConfigError, f"Configuration {path} must be a JSON object.")
        return cls.from_overrides(document, **overrides)

    @classmethod
    def from_overrides(cls, document=None, **overrides) -> "ExperimentConfig":
        """Defaults, then ``document``, then ``OUTPUT_DIR``, then non-``None`` ``overrides``."""
        document = dict(document or {})
        if "OUTPUT_DIR" in os.environ:
            document["output_dir"] = os.environ["OUTPUT_DIR"]
        document.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(document)

    def kappa(self) -> HyperbolicToralAutomorphism:
        if len(self.map) != 4:
            raise_error(ConfigError, f"Map needs four integer entries, got {self.map}.")
        return make_map(*self.map)

    @staticmethod
    def _observable(document, name) -> TorusObservable:
        try:
            return TorusObservable.from_json(document)
        except (KeyError, TypeError, ValueError) as exc:
            raise_error(ConfigError, f"Invalid {name} specification: {exc}")

    def observable_function(self) -> TorusObservable:
        return self._observable(self.observable, "observable")

    def damping_function(self) -> TorusObservable:
        if self.damping is None:
            return self.observable_function()
        return self._observable(self.damping, "damping")

    def selected(self, stages) -> List[str]:
        if self.stages is None:
            return list(stages)
        return [s for s in stages if s in self.stages]

    def canonical(self) -> str:
        """Sorted-key JSON of every field that can change numerical output."""
        document = {k: v for k, v in asdict(self).items() if k not in RUNTIME_FIELDS}
        return json.dumps(document, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()

    def validate_classical(self):
        kappa = self.kappa()
        q = self.observable_function()
        if not 0 < self.gamma < 0.5:
            raise_error(BadScaling, f"gamma must lie in (0, 1/2), got {self.gamma}.")
        if not self.epsilon_grid or any(e <= 0 for e in self.epsilon_grid):
            raise_error(BadParameter, f"epsilon_grid must be positive, got {self.epsilon_grid}.")
        T_list = list(self.T_list)
        if len(T_list) < 3:
            raise_error(InsufficientData, f"T_list needs at least 3 windows, got {T_list}.")
        if any(T < 1 for T in T_list) or any(b <= a for a, b in zip(T_list, T_list[1:])):
            raise_error(BadParameter, f"T_list must be positive and ascending, got {T_list}.")
        if self.samples < MIN_VARIANCE_SAMPLES:
            raise_error(
                BadParameter, f"samples must be at least {MIN_VARIANCE_SAMPLES}, got {self.samples}."
            )
        if self.variance_T < 2:
            raise_error(BadParameter, f"variance_T must be at least 2, got {self.variance_T}.")
        grid = check_xi_grid(self.xi_grid)
        if self.K_op < max(1, 2 * q.radius):
            raise_error(
                BoxTooSmall, f"K_op={self.K_op} below twice the observable radius {q.radius}."
            )
        if max(abs(x) for x in grid) * q.sup_norm_bound() > WEIGHT_OVERFLOW:
            raise_error(WeightOverflow, "The xi grid overflows the exponential weight guard.")
        if not 1e-14 < self.tol < 1e-4:
            raise_error(BadParameter, f"tol must lie in (1e-14, 1e-4), got {self.tol}.")
        if self.eta_points < 3:
            raise_error(BadParameter, f"eta_points must be at least 3, got {self.eta_points}.")
        required_lag(kappa, q)

    def validate_quantum(self):
        kappa = self.kappa()
        g = self.damping_function()
        if not 0 < self.alpha < 1:
            raise_error(BadParameter, f"alpha must lie in (0, 1), got {self.alpha}.")
        if self.window_epsilon <= 0:
            raise_error(BadParameter, f"window_epsilon must be positive, got {self.window_epsilon}.")
        N_list = list(self.N_list)
        if len(N_list) < 3 or any(b <= a for a, b in zip(N_list, N_list[1:])):
            raise_error(BadParameter, f"N_list must be ascending with at least 3 entries, got {N_list}.")
        symbol = damping_symbol(g)
        for N in N_list:
            if N > MAX_DENSE_DIMENSION:
                raise_error(BadParameter, f"N={N} exceeds {MAX_DENSE_DIMENSION}.")
            check_quantizable(kappa, N)
            check_aliasing(symbol, N)
        required_lag(kappa, g)

    def validate(self, classical: bool = True, quantum: bool = True):
        """Check every precondition of the selected pipelines."""
        if self.backend not in PLATFORMS:
            raise_error(BadParameter, f"Unknown backend {self.backend}; expected one of {PLATFORMS}.")
        if self.jobs < 1:
            raise_error(BadParameter, f"jobs must be at least 1, got {self.jobs}.")
        if int(self.seed) != self.seed or self.seed < 0:
            raise_error(BadParameter, f"seed must be a non-negative integer, got {self.seed}.")
        if self.stages is not None:
            unknown = sorted(set(self.stages) - set(CLASSICAL_STAGES + QUANTUM_STAGES))
            if unknown:
                raise_error(ConfigError, f"Unknown stages {unknown}.")
        if classical:
            self.validate_classical()
        if quantum:
            self.validate_quantum()
        return self
