"""
Schrodinger and Lindblad propagation, trajectories of named-state populations, and state fidelity.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from .errors import InvariantViolation, NonPhysicalInput, PositivityLoss
from .hamiltonians import Hamiltonian, JumpChannel
from .integrator import AdaptiveIntegrator, Integrator, RK4Integrator
from .misc import DefaultConfig, IntegratorMethod
from .statespace import NAMED_STATES, PHI1, PHI5, DensityMatrix, ProductBasis, StateVector

logger = logging.getLogger(__name__)

Window = Tuple[float, float]
State = Union[StateVector, DensityMatrix]

POPULATION_SLACK = 1e-8


class IntegratorConfig(BaseModel):
    """
    Integration method, tolerance and output grid.

    The step ceiling is min(2 pi / (20 f_max), window / 2000) where f_max is the fastest oscillation
    carried by the Hamiltonian, and window / 2000 without oscillating terms.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: IntegratorMethod = IntegratorMethod.ADAPTIVE
    tol: float = Field(DefaultConfig.tol, gt=0)
    samples: int = Field(DefaultConfig.samples, ge=1)
    max_step: Optional[float] = Field(None, gt=0)

    def step_ceiling(self, window: Window, max_frequency: float = 0.0) -> float:
        length = window[1] - window[0]
        if length <= 0:
            raise ValueError("integration window must have positive length")
        ceiling = length / DefaultConfig.steps_per_window
        if max_frequency > 0:
            ceiling = min(ceiling, DefaultConfig.two_pi / (DefaultConfig.steps_per_period * max_frequency))
        if self.max_step is not None:
            ceiling = min(ceiling, self.max_step)
        return ceiling

    def build(self, window: Window, max_frequency: float = 0.0) -> Integrator:
        ceiling = self.step_ceiling(window, max_frequency)
        logger.debug(f"{self.method.value} integrator, step ceiling {ceiling:.6g}/g")
        if self.method == IntegratorMethod.RK4:
            return RK4Integrator(ceiling)
        return AdaptiveIntegrator(ceiling, self.tol)

    def grid(self, window: Window) -> np.ndarray:
        return np.linspace(window[0], window[1], self.samples + 1)


@dataclass
class Trajectory:
    """
    Time-sampled observables of one propagation.

    ``trace`` is <psi|psi> for pure-state runs and tr(rho) for density-matrix runs.
    """

    times: np.ndarray
    populations: Dict[str, np.ndarray]
    trace: np.ndarray
    fidelity: Optional[np.ndarray] = None
    mixed: bool = False
    max_norm_drift: float = 0.0
    max_hermiticity_error: float = 0.0
    min_eigenvalue: float = 0.0
    subspace: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def final_fidelity(self) -> float:
        if self.fidelity is None:
            raise ValueError("trajectory has no target fidelity")
        return float(self.fidelity[-1])

    def final_population(self, name: str) -> float:
        return float(self.populations[name][-1])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"t_g": self.times})
        for name in NAMED_STATES:
            frame[f"P_{name}"] = self.populations[name]
        frame["trace"] = self.trace
        frame["fidelity"] = self.fidelity if self.fidelity is not None else np.nan
        return frame

    def check_invariants(self, tolerance: float = DefaultConfig.norm_tolerance):
        """
        :raises InvariantViolation: naming the first broken check.
        """
        check = "trace" if self.mixed else "norm"
        if self.max_norm_drift > tolerance:
            raise InvariantViolation(check, f"drift {self.max_norm_drift:.3g} exceeds {tolerance:g}")
        if self.mixed and self.max_hermiticity_error > DefaultConfig.hermiticity_tolerance:
            raise InvariantViolation("hermiticity", f"error {self.max_hermiticity_error:.3g}")
        if self.mixed and self.min_eigenvalue < DefaultConfig.positivity_floor:
            raise InvariantViolation("positivity", f"minimum eigenvalue {self.min_eigenvalue:.3g}")
        for name, values in self.populations.items():
            if values.size and (values.min() < -POPULATION_SLACK or values.max() > 1 + POPULATION_SLACK):
                raise InvariantViolation("population", f"P_{name} leaves [0, 1]")


def bell_target(basis: ProductBasis) -> StateVector:
    """(-i|phi1> + |phi5>) / sqrt(2), both cavity modes empty"""
    amplitudes = np.zeros(basis.dim, dtype=complex)
    amplitudes[basis.index(PHI1)] = -1j / math.sqrt(2)
    amplitudes[basis.index(PHI5)] = 1.0 / math.sqrt(2)
    return StateVector(basis, amplitudes)


def _matrix_sqrt(matrix: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    values = np.clip(values, 0.0, None)
    return (vectors * np.sqrt(values)) @ vectors.conj().T


def _check_trace(state: State, role: str):
    trace = state.trace() if isinstance(state, DensityMatrix) else state.norm() ** 2
    if abs(trace - 1.0) > DefaultConfig.trace_check:
        raise NonPhysicalInput(f"{role} has trace {abs(trace):.6g}, expected 1", details={"role": role})


def fidelity(rho: State, target: State) -> float:
    """
    Uhlmann fidelity (tr sqrt(sqrt(target) rho sqrt(target)))^2, clipped to [0, 1].

    A pure argument (StateVector) reduces it to <psi|rho|psi>.

    :raises NonPhysicalInput: if either trace deviates from 1 by more than 1e-3.
    """
    if rho.basis != target.basis:
        raise ValueError("fidelity arguments live on different bases")
    _check_trace(rho, "state")
    _check_trace(target, "target")

    if isinstance(target, StateVector):
        if isinstance(rho, StateVector):
            value = abs(np.vdot(target.amplitudes, rho.amplitudes)) ** 2
        else:
            value = np.real(np.vdot(target.amplitudes, rho.matrix @ target.amplitudes))
    elif isinstance(rho, StateVector):
        value = np.real(np.vdot(rho.amplitudes, target.matrix @ rho.amplitudes))
    else:
        product = _matrix_sqrt(rho.matrix) @ _matrix_sqrt(target.matrix)
        value = np.linalg.norm(product, ord="nuc") ** 2
    return float(np.clip(value, 0.0, 1.0))


def _population_columns(basis: ProductBasis, diagonal: np.ndarray) -> Dict[str, np.ndarray]:
    populations = {}
    for name, label in NAMED_STATES.items():
        if label in basis:
            populations[name] = diagonal[:, basis.index(label)]
        else:
            populations[name] = np.zeros(diagonal.shape[0])
    return populations


def propagate_schrodinger(hamiltonian: Hamiltonian, psi0: StateVector, window: Window,
                          config: Optional[IntegratorConfig] = None,
                          target: Optional[StateVector] = None) -> Tuple[Trajectory, StateVector]:
    """
    Integrate i d/dt psi = H(t) psi over the window.

    The state is never renormalized; the largest deviation of <psi|psi> from 1 is recorded as
    ``max_norm_drift``.

    :raises StepFailure: if the adaptive integrator cannot meet its tolerance.
    """
    config = config or IntegratorConfig()
    if psi0.basis != hamiltonian.basis:
        raise ValueError("initial state and Hamiltonian live on different bases")
    if abs(psi0.norm() - 1.0) > 1e-10:
        raise NonPhysicalInput(f"initial state has norm {psi0.norm():.12g}")

    times = config.grid(window)
    integrator = config.build(window, hamiltonian.max_frequency)

    def rhs(t, y):
        return -1j * (hamiltonian.matrix(t) @ y)

    states = integrator.integrate(rhs, psi0.amplitudes, times)
    diagonal = np.abs(states) ** 2
    norms = diagonal.sum(axis=1)
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > DefaultConfig.norm_tolerance:
        logger.warning(f"Norm drift {drift:.3g} exceeds {DefaultConfig.norm_tolerance:g}")

    fidelities = None
    if target is not None:
        fidelities = np.clip(np.abs(states @ target.amplitudes.conj()) ** 2, 0.0, 1.0)

    trajectory = Trajectory(times, _population_columns(psi0.basis, diagonal), norms, fidelities,
                            mixed=False, max_norm_drift=drift)
    return trajectory, StateVector(psi0.basis, states[-1])


def _lindblad_channels(channels: Sequence[JumpChannel]) -> List[Tuple[float, np.ndarray, np.ndarray, np.ndarray]]:
    prepared = []
    for channel in channels:
        if channel.rate <= 0:
            continue
        jump = channel.operator.matrix
        jump_dag = jump.conj().T
        prepared.append((channel.rate, jump, jump_dag, jump_dag @ jump))
    return prepared


def propagate_lindblad(hamiltonian: Hamiltonian, jumps: Sequence[JumpChannel], rho0: DensityMatrix,
                       window: Window, config: Optional[IntegratorConfig] = None,
                       target: Optional[StateVector] = None) -> Tuple[Trajectory, DensityMatrix]:
    """
    Integrate d/dt rho = -i[H, rho] + sum_k rate_k (L rho L^dagger - {L^dagger L, rho} / 2).

    rho is symmetrized to (rho + rho^dagger) / 2 at every output sample.

    :raises StepFailure: if the adaptive integrator cannot meet its tolerance.
    :raises PositivityLoss: if the final state has an eigenvalue below -1e-5.
    """
    config = config or IntegratorConfig()
    basis = rho0.basis
    if basis != hamiltonian.basis:
        raise ValueError("initial state and Hamiltonian live on different bases")
    for channel in jumps:
        if channel.operator.basis != basis:
            raise ValueError(f"jump channel '{channel.name}' lives on a different basis")
    _check_trace(rho0, "initial state")

    dim = basis.dim
    channels = _lindblad_channels(jumps)
    times = config.grid(window)
    integrator = config.build(window, hamiltonian.max_frequency)

    def rhs(t, y):
        rho = y.reshape(dim, dim)
        h = hamiltonian.matrix(t)
        d_rho = -1j * (h @ rho - rho @ h)
        for rate, jump, jump_dag, number in channels:
            d_rho += rate * (jump @ rho @ jump_dag - 0.5 * (number @ rho + rho @ number))
        return d_rho.reshape(-1)

    def symmetrize(y):
        rho = y.reshape(dim, dim)
        return (0.5 * (rho + rho.conj().T)).reshape(-1)

    flat = integrator.integrate(rhs, rho0.matrix.reshape(-1), times, post_sample=symmetrize)
    rhos = flat.reshape(len(times), dim, dim)

    diagonal = np.real(np.einsum("kii->ki", rhos))
    traces = diagonal.sum(axis=1)
    drift = float(np.max(np.abs(traces - 1.0)))
    hermiticity = float(np.max(np.abs(rhos - np.conj(np.transpose(rhos, (0, 2, 1))))))
    minima = np.linalg.eigvalsh(rhos)[:, 0]
    min_eigenvalue = float(minima.min())
    if minima[-1] < DefaultConfig.positivity_failure:
        raise PositivityLoss(f"final density matrix has eigenvalue {minima[-1]:.3g}",
                             details={"min_eigenvalue": float(minima[-1])})
    if drift > DefaultConfig.norm_tolerance:
        logger.warning(f"Trace drift {drift:.3g} exceeds {DefaultConfig.norm_tolerance:g}")

    fidelities = None
    if target is not None:
        psi = target.amplitudes
        fidelities = np.clip(np.real(np.einsum("i,kij,j->k", psi.conj(), rhos, psi)), 0.0, 1.0)

    trajectory = Trajectory(times, _population_columns(basis, diagonal), traces, fidelities, mixed=True,
                            max_norm_drift=drift, max_hermiticity_error=hermiticity,
                            min_eigenvalue=min_eigenvalue)
    return trajectory, DensityMatrix(basis, rhos[-1])
