"""
Named scenarios (population transfer, entanglement creation), duration and decoherence sweeps, and the
closure, equivalence and spectrum reports.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .config import ScenarioConfig
from .dynamics import Trajectory, bell_target, fidelity, propagate_lindblad, propagate_schrodinger
from .errors import CavityStaError, ConfigError, DegenerateInput
from .hamiltonians import (DecoherenceParams, TimeDependentHamiltonian, build_h0, build_h1_analytic,
                           build_h_aux, build_h_eff, build_jump_operators)
from .misc import DefaultConfig, HamiltonianMode, Task
from .pulses import PulseSet
from .spectral import ANALYTIC_ORDER, adiabaticity_ratio, cdd_gap, cdd_track, numeric_eigensystem
from .statespace import (PHI1, PHI5, SINGLE_EXCITATION, DensityMatrix, ProductBasis, StateVector,
                         build_basis, project_state, reachable_subspace)
from .version import __version__

logger = logging.getLogger(__name__)

DEFAULT_SWEEP_MODES = (HamiltonianMode.ADIABATIC, HamiltonianMode.CDD, HamiltonianMode.AUX)
DETUNING_SCALES = (1.0, 2.0, 4.0)
CDD_AMPLITUDES = (0.2, 0.1, 0.05)
POPULATION_GAP_LIMIT = 0.1
CDD_GAP_LIMIT = 0.03


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    trajectory: Trajectory
    final_state: Union[StateVector, DensityMatrix]
    fidelity: float
    subspace: Tuple[int, ...]
    full_dim: int
    wall_time: float


def build_hamiltonian(config: ScenarioConfig, basis: ProductBasis,
                      pulses: Optional[PulseSet] = None) -> TimeDependentHamiltonian:
    """The generator selected by ``config.mode``"""
    pulses = pulses or config.pulse_set()
    mode = config.mode
    if mode == HamiltonianMode.ADIABATIC:
        return build_h0(basis, pulses)
    if mode == HamiltonianMode.CDD:
        return build_h1_analytic(basis, pulses)
    detunings = config.detunings()
    if mode == HamiltonianMode.AUX:
        return build_h0(basis, pulses) + build_h_aux(basis, pulses, detunings)
    if mode == HamiltonianMode.AUX_ONLY:
        return build_h_aux(basis, pulses, detunings)
    if mode == HamiltonianMode.EFFECTIVE:
        return build_h0(basis, pulses) + build_h_eff(basis, pulses, detunings)
    return build_h_eff(basis, pulses, detunings)


def scenario_target(config: ScenarioConfig, basis: ProductBasis) -> StateVector:
    if config.task == Task.TRANSFER:
        return basis.basis_state(PHI5)
    return bell_target(basis)


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """
    Propagate |phi1> under the configured drive and score the final state against the task target.

    Closed runs use the Schrodinger equation, runs with any nonzero rate use the master equation. With
    ``config.reduce`` the problem is first cut down to the states reachable from |phi1> (plus the target
    support).
    """
    started = time.perf_counter()
    logger.info(f"Running {config.task.value} in mode {config.mode.value} [{config.config_hash()[:12]}]")
    basis = build_basis(config.nmax_a, config.nmax_b)
    pulses = config.pulse_set()
    hamiltonian = build_hamiltonian(config, basis, pulses)
    decoherence = config.decoherence()
    jumps = [] if decoherence.is_closed else [c for c in build_jump_operators(basis, decoherence) if c.rate > 0]
    psi0 = basis.basis_state(PHI1)
    target = scenario_target(config, basis)

    indices = list(range(basis.dim))
    if config.reduce:
        reachable = reachable_subspace(hamiltonian.generators(), psi0,
                                       dissipators=[c.operator for c in jumps])
        support = np.flatnonzero(np.abs(target.amplitudes) > 0)
        indices = sorted(set(reachable) | {int(i) for i in support})
        hamiltonian = hamiltonian.project(indices)
        jumps = [c.project(indices) for c in jumps]
        psi0 = project_state(psi0, indices)
        target = project_state(target, indices)
        logger.debug(f"Reduced {basis.dim}-state basis to {len(indices)} reachable states")

    integrator = config.integrator()
    if jumps:
        trajectory, final = propagate_lindblad(hamiltonian, jumps, psi0.to_density(), pulses.window,
                                               integrator, target)
    else:
        trajectory, final = propagate_schrodinger(hamiltonian, psi0, pulses.window, integrator, target)
    trajectory.subspace = tuple(indices)
    score = fidelity(final, target)
    elapsed = time.perf_counter() - started
    logger.info(f"Finished {config.task.value}/{config.mode.value}: fidelity {score:.6f} in {elapsed:.2f}s")
    return ScenarioResult(config, trajectory, final, score, tuple(indices), basis.dim, elapsed)


def run_transfer(config: Optional[ScenarioConfig] = None) -> ScenarioResult:
    """Population transfer |phi1> -> |phi5> over [0, T + tau]"""
    config = config or ScenarioConfig.for_task(Task.TRANSFER)
    if config.task != Task.TRANSFER:
        raise ConfigError(f"run_transfer needs task transfer, got {config.task.value}")
    return run_scenario(config)


def run_entangle(config: Optional[ScenarioConfig] = None) -> ScenarioResult:
    """Creation of (-i|phi1> + |phi5>)/sqrt(2) over [0, T]"""
    config = config or ScenarioConfig.for_task(Task.ENTANGLE)
    if config.task != Task.ENTANGLE:
        raise ConfigError(f"run_entangle needs task entangle, got {config.task.value}")
    return run_scenario(config)


@dataclass
class SweepResult:
    """
    Fidelity per grid point in axis order. Failed points hold NaN and are listed in ``errors``.
    """

    kind: str
    frame: pd.DataFrame
    errors: List[Dict[str, Any]] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        return self.frame.copy()

    @property
    def complete(self) -> bool:
        return not self.errors

    def threshold_duration(self, mode: Union[HamiltonianMode, str], threshold: float = 0.98) -> Optional[float]:
        """Smallest T whose fidelity reaches ``threshold`` for the given mode"""
        if self.kind != "duration":
            raise ValueError("threshold_duration applies to duration sweeps")
        mode = HamiltonianMode(mode).value
        rows = self.frame[(self.frame["mode"] == mode) & (self.frame["fidelity"] >= threshold)]
        return float(rows["T_g"].min()) if len(rows) else None

    def fidelity_grid(self) -> np.ndarray:
        """gamma along rows, kappa along columns"""
        if self.kind != "decoherence":
            raise ValueError("fidelity_grid applies to decoherence sweeps")
        table = self.frame.pivot(index="gamma_over_g", columns="kappa_over_g", values="fidelity")
        return table.to_numpy()


def _sweep_point(index: int, config: ScenarioConfig) -> Tuple[int, float, Optional[Dict[str, Any]]]:
    try:
        result = run_scenario(config)
        result.trajectory.check_invariants()
        return index, result.fidelity, None
    except CavityStaError as e:
        return index, float("nan"), {"index": index, "code": e.code, "message": e.message,
                                     "check": getattr(e, "check", None)}


def _run_points(configs: Sequence[ScenarioConfig], jobs: int) -> Tuple[List[float], List[Dict[str, Any]]]:
    fidelities: List[float] = [float("nan")] * len(configs)
    errors: List[Dict[str, Any]] = []
    if jobs <= 1:
        outcomes = (_sweep_point(i, c) for i, c in enumerate(configs))
        for index, value, error in outcomes:
            fidelities[index] = value
            if error:
                errors.append(error)
            logger.debug(f"Sweep point {index + 1}/{len(configs)} done")
    else:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = {executor.submit(_sweep_point, i, c): i for i, c in enumerate(configs)}
            for future in as_completed(futures):
                index, value, error = future.result()
                fidelities[index] = value
                if error:
                    errors.append(error)
                logger.debug(f"Sweep point {index + 1}/{len(configs)} done")
    for error in sorted(errors, key=lambda e: e["index"]):
        logger.error(f"Sweep point {error['index']} failed: [{error['code']}] {error['message']}")
    return fidelities, sorted(errors, key=lambda e: e["index"])


def _metadata(config: ScenarioConfig, started: datetime) -> Dict[str, Any]:
    return {
        "config_hash": config.config_hash(),
        "version": __version__,
        "started": started.isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
    }


def default_durations(t_min: float = DefaultConfig.duration_t_min, t_max: float = DefaultConfig.duration_t_max,
                      t_step: float = DefaultConfig.duration_t_step) -> np.ndarray:
    """t_min, t_min + t_step, ... up to t_max inclusive"""
    if t_step <= 0 or t_max < t_min:
        raise ConfigError("duration grid needs t-step > 0 and t-max >= t-min")
    count = int(np.floor((t_max - t_min) / t_step + 1e-9))
    return t_min + t_step * np.arange(count + 1)


def default_rate_grid(grid_max: float = DefaultConfig.decoherence_grid_max,
                      points: int = DefaultConfig.decoherence_grid_points) -> np.ndarray:
    if points < 1 or grid_max < 0:
        raise ConfigError("--grid-points must be >= 1 and --grid-max >= 0")
    return np.linspace(0.0, grid_max, points)


def sweep_duration(config: ScenarioConfig, t_values: Sequence[float],
                   modes: Sequence[Union[HamiltonianMode, str]] = DEFAULT_SWEEP_MODES,
                   jobs: int = 1) -> SweepResult:
    """
    Final fidelity versus pulse duration T for each mode. For transfer tau = tau_frac * T follows T.
    """
    t_values = [float(t) for t in t_values]
    if not t_values or any(t <= 0 for t in t_values) or any(b <= a for a, b in zip(t_values, t_values[1:])):
        raise ConfigError("duration grid must be positive and strictly ascending")
    modes = [HamiltonianMode(m) for m in modes]
    started = datetime.now(timezone.utc)
    points = [(mode, t) for mode in modes for t in t_values]
    configs = [config.with_updates(mode=mode, big_t=t) for mode, t in points]
    fidelities, errors = _run_points(configs, jobs)
    frame = pd.DataFrame({
        "T_g": [t for _, t in points],
        "mode": [mode.value for mode, _ in points],
        "fidelity": fidelities,
    })
    metadata = _metadata(config, started)
    metadata["modes"] = [m.value for m in modes]
    return SweepResult("duration", frame, errors, metadata)


def sweep_decoherence(config: ScenarioConfig, gamma_values: Sequence[float], kappa_values: Sequence[float],
                      jobs: int = 1) -> SweepResult:
    """Final fidelity on the Gamma/g x kappa/g grid, gamma-major"""
    gamma_values = [float(v) for v in gamma_values]
    kappa_values = [float(v) for v in kappa_values]
    if not gamma_values or not kappa_values or min(gamma_values + kappa_values) < 0:
        raise ConfigError("decoherence grids must be nonempty and nonnegative")
    started = datetime.now(timezone.utc)
    points = [(gamma, kappa) for gamma in gamma_values for kappa in kappa_values]
    configs = [config.with_updates(gamma=gamma, kappa=kappa) for gamma, kappa in points]
    fidelities, errors = _run_points(configs, jobs)
    frame = pd.DataFrame({
        "gamma_over_g": [gamma for gamma, _ in points],
        "kappa_over_g": [kappa for _, kappa in points],
        "fidelity": fidelities,
    })
    return SweepResult("decoherence", frame, errors, _metadata(config, started))


@dataclass
class ClosureReport:
    """Reachable sets from |phi1> under growing generator families"""

    basis: ProductBasis
    sets: Dict[str, Tuple[int, ...]]

    @property
    def sizes(self) -> Dict[str, int]:
        return {name: len(indices) for name, indices in self.sets.items()}

    def labels(self, name: str):
        return [self.basis.label(i) for i in self.sets[name]]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "generators": list(self.sets),
            "size": [len(v) for v in self.sets.values()],
            "indices": [" ".join(str(i) for i in v) for v in self.sets.values()],
        })


def check_closure(config: Optional[ScenarioConfig] = None) -> ClosureReport:
    """
    Reachable-set sizes for H0, H0 + Haux, and H0 + Haux with every jump channel. Jump structure is
    taken at unit rates so it does not depend on the configured kappa and Gamma.
    """
    config = config or ScenarioConfig.for_task(Task.TRANSFER)
    basis = build_basis(config.nmax_a, config.nmax_b)
    pulses = config.pulse_set()
    seed = basis.basis_state(PHI1)
    h0 = build_h0(basis, pulses)
    h_aux = build_h_aux(basis, pulses, config.detunings())
    jumps = [c.operator for c in build_jump_operators(basis, DecoherenceParams(kappa=1.0, gamma=1.0))]
    sets = {
        "H0": tuple(reachable_subspace(h0.generators(), seed)),
        "H0+Haux": tuple(reachable_subspace((h0 + h_aux).generators(), seed)),
        "H0+Haux+jumps": tuple(reachable_subspace((h0 + h_aux).generators(), seed, dissipators=jumps)),
    }
    logger.info(f"Closure sizes: {', '.join(f'{k}={len(v)}' for k, v in sets.items())}")
    return ClosureReport(basis, sets)


@dataclass
class EquivalenceReport:
    """
    ``population`` rows: max over t of the phi1 population gap between aux-only and effective-only runs,
    keyed by detuning scale. ``cdd`` rows: relative Frobenius gap between the numeric and analytic
    counter-diabatic couplings mid-window, keyed by omega0/g.
    """

    population: Dict[float, float]
    cdd: Dict[float, float]

    def to_frame(self) -> pd.DataFrame:
        rows = [("population", scale, gap) for scale, gap in self.population.items()]
        rows += [("cdd", amplitude, gap) for amplitude, gap in self.cdd.items()]
        return pd.DataFrame(rows, columns=["section", "parameter", "gap"])

    @staticmethod
    def _decreasing(gaps: Dict[float, float], ascending_key: bool) -> bool:
        keys = sorted(gaps, reverse=not ascending_key)
        values = [gaps[k] for k in keys]
        return all(b < a for a, b in zip(values, values[1:]))

    @property
    def population_trend_ok(self) -> bool:
        return self._decreasing(self.population, ascending_key=True)

    @property
    def cdd_trend_ok(self) -> bool:
        return self._decreasing(self.cdd, ascending_key=False)

    @property
    def failures(self) -> List[str]:
        """One line per failed check; empty when the report passes"""
        failed = []
        if self.population:
            scale = min(self.population)
            if self.population[scale] > POPULATION_GAP_LIMIT:
                failed.append(f"population gap {self.population[scale]:.4g} at detuning scale {scale:g} "
                              f"exceeds {POPULATION_GAP_LIMIT:g}")
            if not self.population_trend_ok:
                failed.append("population gap does not shrink with detuning scale")
        if self.cdd:
            amplitude = min(self.cdd)
            if self.cdd[amplitude] > CDD_GAP_LIMIT:
                failed.append(f"cdd gap {self.cdd[amplitude]:.4g} at omega0 {amplitude:g} exceeds {CDD_GAP_LIMIT:g}")
            if not self.cdd_trend_ok:
                failed.append("cdd gap does not shrink with omega0")
        return failed

    @property
    def passed(self) -> bool:
        return not self.failures


def population_gap(config: ScenarioConfig, scale: float = 1.0) -> float:
    """Largest |P_phi1| difference over t between aux-only and effective-only runs"""
    scaled = config.with_updates(delta1=config.delta1 * scale, delta2=config.delta2 * scale,
                                 gamma=0.0, kappa=0.0)
    full = run_scenario(scaled.with_updates(mode=HamiltonianMode.AUX_ONLY)).trajectory
    effective = run_scenario(scaled.with_updates(mode=HamiltonianMode.EFFECTIVE_ONLY)).trajectory
    return float(np.max(np.abs(full.populations["phi1"] - effective.populations["phi1"])))


def check_equivalence(config: Optional[ScenarioConfig] = None,
                      scales: Sequence[float] = DETUNING_SCALES,
                      amplitudes: Sequence[float] = CDD_AMPLITUDES) -> EquivalenceReport:
    """Effective versus full auxiliary dynamics, and numeric versus analytic counter-diabatic driving"""
    config = config or ScenarioConfig.for_task(Task.TRANSFER)
    if config.task != Task.TRANSFER:
        raise ConfigError("check-equivalence runs on the transfer task")
    population = {float(scale): population_gap(config, scale) for scale in scales}
    cdd = {}
    for amplitude in amplitudes:
        pulses = config.with_updates(omega0=amplitude).pulse_set()
        cdd[float(amplitude)] = cdd_gap(pulses, 0.5 * sum(pulses.window))
    logger.info(f"Equivalence gaps: population {population}, cdd {cdd}")
    return EquivalenceReport(population, cdd)


def spectrum_table(config: ScenarioConfig, samples: Optional[int] = None) -> pd.DataFrame:
    """
    Eigenvalues of H0 on the five-state subspace, column ``lambda_n`` following eigenstate n along the
    eigen-track, and the adiabaticity ratios for eigenstates 2..5. Where the pulses vanish the levels are
    degenerate and sort order stands in for the labels; ratios there are NaN.
    """
    samples = samples or config.samples
    pulses = config.pulse_set()
    full = build_basis(1, 0)
    h0 = build_h0(full, pulses).project(full.indices_of(SINGLE_EXCITATION))
    times = np.linspace(pulses.window[0], pulses.window[1], samples + 1)
    step = 1e-4 * pulses.duration
    track = cdd_track(pulses)

    eigenvalues = np.empty((len(times), 5))
    ratios = np.full((len(times), 4), np.nan)
    for k, t in enumerate(times):
        snapshot = numeric_eigensystem(h0.evaluate(float(t)), float(t))
        snapshot = track.label(snapshot) if track.covers(float(t)) else snapshot.relabeled(ANALYTIC_ORDER)
        eigenvalues[k] = [snapshot.eigenvalue(n) for n in range(1, 6)]
        for column, n in enumerate((2, 3, 4, 5)):
            try:
                ratios[k, column] = adiabaticity_ratio(float(t), pulses, n=n, step=step, h0=h0)
            except DegenerateInput:
                pass

    frame = pd.DataFrame({"t_g": times})
    for i in range(5):
        frame[f"lambda_{i + 1}"] = eigenvalues[:, i]
    for column, n in enumerate((2, 3, 4, 5)):
        frame[f"adiabaticity_{n}"] = ratios[:, column]
    return frame
