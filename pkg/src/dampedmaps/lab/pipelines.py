"""Stage runner for the classical and quantum pipelines.

Stages exchange data only through the JSON records the cache writes, so a
cached stage and a freshly computed one feed identical inputs downstream.
"""

import time
from dataclasses import asdict
from pathlib import Path
from typing import Callable, Dict, Iterable, List

import numba
import numpy as np
import qibo
import scipy
from qibo.config import log, raise_error

from dampedmaps.backends import construct_backend
from dampedmaps.exceptions import DampedMapsError, InsufficientData, StageFailure
from dampedmaps.lab.experiment import CLASSICAL_STAGES, QUANTUM_STAGES, ExperimentConfig
from dampedmaps.lab.manifest import (
    STATUS_CACHED,
    STATUS_FAILED,
    STATUS_OK,
    ResultCache,
    RunManifest,
    read_csv,
)
from dampedmaps.models.quantization.damped import (
    damped_propagator,
    eigenvalue_rows,
    spectrum,
)
from dampedmaps.operations.deviation import (
    DeviationEstimate,
    exact_variance,
    mc_variance,
    mdp_rate_fit,
    mdp_table,
    spectral_constant,
)
from dampedmaps.operations.legendre import (
    RateFunction,
    gartner_ellis_check,
    legendre_fenchel,
    slope_range,
)
from dampedmaps.operations.statistics import (
    concentration_report,
    predicted_ldp_exponent,
    sample_from_eigenvalues,
)
from dampedmaps.operations.transfer import PressureCurve, pressure_curve
from dampedmaps.operations.windows import FixedWindow, ShrinkingWindow

STAGE_DEPENDENCIES = {
    "constant": ("variance",),
    "mdp": ("variance",),
    "rate": ("pressure",),
    "gartner_ellis": ("mdp", "rate"),
    "concentration": ("damping_constant", "spectrum"),
}

SPECTRAL_RADIUS_TOL = 1e-8


def resolve_stages(requested: Iterable[str], order: Iterable[str]) -> List[str]:
    """Close ``requested`` under the stage dependencies, in pipeline order."""
    wanted = set()
    pending = list(requested)
    while pending:
        stage = pending.pop()
        if stage not in wanted:
            wanted.add(stage)
            pending.extend(STAGE_DEPENDENCIES.get(stage, ()))
    return [stage for stage in order if stage in wanted]


def _epsilon_key(epsilon: float) -> str:
    return repr(float(epsilon))


def _estimate(record: dict) -> DeviationEstimate:
    record = dict(record)
    record.pop("a_T", None)
    return DeviationEstimate(**record)


class Laboratory:
    """Runs stages against the result cache and keeps the run manifest.

    Args:
        config (ExperimentConfig): the experiment; validated on construction.
        classical (bool): validate the classical preconditions.
        quantum (bool): validate the quantum preconditions.
    """

    def __init__(self, config: ExperimentConfig, classical: bool = True, quantum: bool = True):
        self.config = config.validate(classical=classical, quantum=quantum)
        self.kappa = config.kappa()
        self.output_dir = Path(config.output_dir)
        self.cache = ResultCache(self.output_dir, config.digest())
        self.manifest = RunManifest(
            config_hash=config.digest(), root=str(self.output_dir), versions=self._versions()
        )
        self.payloads: Dict[str, dict] = {}

    def _versions(self) -> dict:
        from dampedmaps import __version__

        versions = {
            "dampedmaps": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
            "qibo": qibo.__version__,
        }
        return versions

    @property
    def manifest_path(self) -> Path:
        return self.cache.directory / "manifest.json"

    def write_manifest(self) -> Path:
        return self.manifest.write(self.manifest_path)

    def stage(self, name: str, compute: Callable) -> dict:
        """Serve ``name`` from the cache or compute, store and record it.

        ``compute`` returns ``(payload, table)`` where ``table`` is
        ``(header, rows)`` or ``None``.
        """
        if name in self.payloads:
            return self.payloads[name]
        files = self.cache.lookup(name)
        if files is not None:
            log.info(f"Stage {name}: cached.")
            self.manifest.record(name, files, STATUS_CACHED, 0.0)
        else:
            log.info(f"Stage {name}: running.")
            start = time.perf_counter()
            try:
                payload, table = compute()
            except DampedMapsError as exc:
                self._fail(name, start)
                raise_error(type(exc), f"Stage {name} failed: {exc}")
            except Exception as exc:
                self._fail(name, start)
                raise_error(StageFailure, f"Stage {name} failed: {type(exc).__name__}: {exc}")
            files = self.cache.store(name, payload, table)
            self.manifest.record(name, files, STATUS_OK, time.perf_counter() - start)
        self.payloads[name] = self.cache.load(name)
        return self.payloads[name]

    def _fail(self, name: str, start: float):
        self.cache.discard(name)
        self.manifest.stage_status[name] = STATUS_FAILED
        self.manifest.stage_times[name] = round(time.perf_counter() - start, 6)
        self.write_manifest()

    # classical pipeline

    def variance(self) -> dict:
        def compute():
            config = self.config
            q = config.observable_function()
            exact = exact_variance(self.kappa, q)
            sampled = mc_variance(
                self.kappa, q, config.variance_T, config.samples, config.seed, config.jobs
            )
            payload = {
                "map": list(config.map),
                "observable": q.to_json(),
                "observable_hash": q.fingerprint(),
                "sigma_sq_exact": exact.sigma_sq,
                "exact": exact.to_json(),
                "monte_carlo": sampled.to_json(),
            }
            return payload, (("lag", "correlation"), exact.terms)

        return self.stage("variance", compute)

    def constant(self) -> dict:
        variance = self.variance()

        def compute():
            constant = spectral_constant(self.kappa.expansion_rate, variance["sigma_sq_exact"])
            return constant.to_json(), None

        return self.stage("constant", compute)

    def mdp(self) -> dict:
        variance = self.variance()

        def compute():
            config = self.config
            q = config.observable_function()
            estimates = mdp_table(
                self.kappa,
                q,
                config.T_list,
                config.gamma,
                config.epsilon_grid,
                config.samples,
                config.seed,
                jobs=config.jobs,
            )
            fits = {}
            for epsilon in config.epsilon_grid:
                family = [e for e in estimates if e.epsilon == epsilon]
                try:
                    fits[_epsilon_key(epsilon)] = mdp_rate_fit(
                        family, variance["sigma_sq_exact"]
                    ).to_json()
                except InsufficientData as exc:
                    fits[_epsilon_key(epsilon)] = {"error": exc.code, "message": str(exc)}
            payload = {
                "gamma": config.gamma,
                "estimates": [e.to_json() for e in estimates],
                "fits": fits,
            }
            header = ("T", "a_T", "epsilon", "probability", "stderr", "rate")
            return payload, (header, [e.as_row() for e in estimates])

        return self.stage("mdp", compute)

    def pressure(self) -> dict:
        def compute():
            config = self.config
            q = config.observable_function()
            curve = pressure_curve(
                self.kappa, q, config.xi_grid, config.K_op, config.tol, config.jobs
            )
            payload = {
                "curve": asdict(curve),
                "header": curve.header(),
                "observable_hash": q.fingerprint(),
            }
            return payload, (("xi", "F", "lambda", "gap_ratio"), curve.rows())

        return self.stage("pressure", compute)

    def rate(self) -> dict:
        pressure = self.pressure()

        def compute():
            curve = PressureCurve(**pressure["curve"])
            low, high = slope_range(curve.xi_grid, curve.F_values)
            center = curve.observable_mean
            half = 0.9 * min(center - low, high - center)
            if half <= 1e-12:
                return {"skipped": "flat pressure curve, the rate function is degenerate"}, None
            eta_grid = np.linspace(center - half, center + half, self.config.eta_points)
            rate = legendre_fenchel(curve, eta_grid)
            curvature = rate.curvature()
            payload = {
                "rate": asdict(rate),
                "curvature": curvature,
                "sigma_sq_from_rate": 1 / curvature if curvature > 0 else None,
                "is_convex": rate.is_convex(),
            }
            return payload, (("eta", "I"), rate.rows())

        return self.stage("rate", compute)

    def gartner_ellis(self) -> dict:
        mdp = self.mdp()
        rate = self.rate()

        def compute():
            if "skipped" in rate:
                return {"skipped": rate["skipped"]}, None
            function = RateFunction(**rate["rate"])
            estimates = [_estimate(record) for record in mdp["estimates"]]
            checks = {}
            for epsilon in self.config.epsilon_grid:
                family = [e for e in estimates if e.epsilon == epsilon]
                try:
                    checks[_epsilon_key(epsilon)] = gartner_ellis_check(function, family).to_json()
                except InsufficientData as exc:
                    checks[_epsilon_key(epsilon)] = {"error": exc.code, "message": str(exc)}
            return {"checks": checks}, None

        return self.stage("gartner_ellis", compute)

    # quantum pipeline

    def damping_constant(self) -> dict:
        def compute():
            g = self.config.damping_function()
            exact = exact_variance(self.kappa, g)
            payload = spectral_constant(self.kappa.expansion_rate, exact.sigma_sq).to_json()
            payload.update(damping=g.to_json(), damping_hash=g.fingerprint(), mean=g.mean())
            return payload, None

        return self.stage("damping_constant", compute)

    def spectrum(self, N: int) -> dict:
        def compute():
            config = self.config
            g = config.damping_function()
            backend = construct_backend(config.backend)
            system = damped_propagator(self.kappa, g, N)
            eigenvalues = spectrum(system, backend)
            radius = float(np.max(np.abs(eigenvalues)))
            sup = system.sup_damping()
            if radius > sup + SPECTRAL_RADIUS_TOL:
                self.manifest.warn(
                    f"N={N}: spectral radius {radius:.12f} exceeds sup a = {sup:.12f}."
                )
            payload = {
                "N": N,
                "map": list(config.map),
                "damping_hash": g.fingerprint(),
                "backend": backend.name,
                "backend_versions": backend.versions,
                "spectral_radius": radius,
                "sup_damping": sup,
                "eigenvalue_count": int(eigenvalues.size),
            }
            header = ("re", "im", "modulus", "decay_rate")
            return payload, (header, eigenvalue_rows(eigenvalues))

        return self.stage(f"spectrum_N{N}", compute)

    def eigenvalues(self, N: int) -> np.ndarray:
        rows = read_csv(self.cache.csv_path(f"spectrum_N{N}"))
        return np.array([complex(float(r["re"]), float(r["im"])) for r in rows])

    def concentration(self, mode: str) -> dict:
        constant = self.damping_constant()
        for N in self.config.N_list:
            self.spectrum(N)

        def compute():
            config = self.config
            center = constant["mean"]
            samples = [
                sample_from_eigenvalues(N, self.eigenvalues(N), center, config.alpha)
                for N in config.N_list
            ]
            c = float("inf") if constant["c_infinite"] else constant["c"]
            if mode == "shrinking":
                window = ShrinkingWindow(config.alpha)
            else:
                window = FixedWindow(config.window_epsilon)
            admissible = window.admissible(config.N_list)
            report = concentration_report(samples, window, c)
            for message in report.warnings:
                self.manifest.warn(message)
            payload = {**report.to_json(), "window": window.describe(), "admissible": admissible}
            header = ("N", "log_N", "width", "fraction_outside", "bound_value")
            return payload, (header, report.csv_rows())

        return self.stage(f"concentration_{mode}", compute)

    # drivers

    def run(self, stages: Iterable[str]) -> RunManifest:
        stages = list(stages)
        try:
            for stage in stages:
                if stage == "spectrum":
                    for N in self.config.N_list:
                        self.spectrum(N)
                elif stage == "concentration":
                    self.concentration("shrinking")
                    self.concentration("fixed")
                else:
                    getattr(self, stage)()
        finally:
            self.summarize()
            self.write_manifest()
        return self.manifest

    def summarize(self):
        summary = self.manifest.summary
        variance = self.payloads.get("variance")
        if variance is not None:
            summary["sigma_sq_exact"] = variance["sigma_sq_exact"]
            summary["sigma_sq_monte_carlo"] = variance["monte_carlo"]["sigma_sq"]
        constant = self.payloads.get("constant")
        if constant is not None:
            summary.update(c=constant["c"], c_infinite=constant["c_infinite"])
        pressure = self.payloads.get("pressure")
        if pressure is not None:
            summary["sigma_sq_from_pressure"] = pressure["curve"]["sigma_sq_from_pressure"]
            summary["pressure_convex"] = pressure["header"]["is_convex"]
        damping = self.payloads.get("damping_constant")
        if damping is not None:
            summary.update(c_damping=damping["c"], c_damping_infinite=damping["c_infinite"])
        for mode in ("shrinking", "fixed"):
            report = self.payloads.get(f"concentration_{mode}")
            if report is not None:
                summary[f"{mode}_fractions"] = [row["fraction_outside"] for row in report["rows"]]
                summary[f"{mode}_fitted_exponent"] = report["fitted_exponent"]
        rate = self.payloads.get("rate")
        fixed = self.payloads.get("concentration_fixed")
        if fixed is not None and rate is not None and "skipped" not in rate:
            if self.config.damping is None:
                # the rate function belongs to the damping only when they coincide
                summary["fixed_predicted_exponent"] = predicted_ldp_exponent(
                    RateFunction(**rate["rate"]),
                    rate["rate"]["center"],
                    self.config.window_epsilon,
                    self.kappa.expansion_rate,
                )


def _laboratory(config: ExperimentConfig, classical: bool, quantum: bool) -> Laboratory:
    lab = Laboratory(config, classical=classical, quantum=quantum)
    if quantum:
        backend = construct_backend(config.backend)
        lab.manifest.versions.update(backend.versions)
    return lab


def run_classical(config: ExperimentConfig, stages=None) -> RunManifest:
    """Variance, deviation, pressure and rate-function stages."""
    requested = config.selected(CLASSICAL_STAGES if stages is None else stages)
    lab = _laboratory(config, classical=True, quantum=False)
    return lab.run(resolve_stages(requested, CLASSICAL_STAGES))


def run_quantum(config: ExperimentConfig, stages=None) -> RunManifest:
    """Damped propagator spectra and the concentration statistics."""
    requested = config.selected(QUANTUM_STAGES if stages is None else stages)
    lab = _laboratory(config, classical=False, quantum=True)
    return lab.run(resolve_stages(requested, QUANTUM_STAGES))


def run_full(config: ExperimentConfig) -> RunManifest:
    """Both pipelines in one run and one manifest."""
    order = CLASSICAL_STAGES + QUANTUM_STAGES
    lab = _laboratory(config, classical=True, quantum=True)
    return lab.run(resolve_stages(config.selected(order), order))
