"""
Hamiltonians and dissipators of the two-atom cavity system, as sums of
(scalar coefficient of t) x (constant operator) terms over a product basis.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import NotHermitian, TruncationError
from .misc import AtomLevel, DefaultConfig
from .pulses import DetuningParams, PulseSet, aux_rabi, cdd_coupling, eta
from .statespace import (PHI1, PHI5, Operator, ProductBasis, atomic_projector, mode_annihilator,
                         project_operator)

logger = logging.getLogger(__name__)

Coefficient = Callable[[float], complex]


def _unit(t: float) -> complex:
    return 1.0


@dataclass(frozen=True)
class HamiltonianTerm:
    """
    One term c(t) * O, plus conj(c(t)) * O^dagger when ``with_conjugate`` is set.

    ``frequency`` is the fastest oscillation carried by the coefficient, used to cap the step size.
    """

    operator: Operator
    coefficient: Coefficient = _unit
    with_conjugate: bool = True
    frequency: float = 0.0
    label: str = ""

    def project(self, indices: Sequence[int]) -> "HamiltonianTerm":
        return HamiltonianTerm(project_operator(self.operator, indices), self.coefficient,
                               self.with_conjugate, self.frequency, self.label)


class Hamiltonian:
    """
    Abstract base for time-dependent Hamiltonians.

    Subclasses must implement `matrix`, `project` and `generators`.
    """

    def __init__(self, basis: ProductBasis, window: Optional[Tuple[float, float]] = None, name: str = ""):
        self.basis = basis
        self.window = window
        self.name = name

    def matrix(self, t: float) -> np.ndarray:
        raise NotImplementedError("Subclasses must implement this method.")

    def project(self, indices: Sequence[int]) -> "Hamiltonian":
        raise NotImplementedError("Subclasses must implement this method.")

    def generators(self) -> List[Operator]:
        raise NotImplementedError("Subclasses must implement this method.")

    @property
    def max_frequency(self) -> float:
        return 0.0

    def evaluate(self, t: float) -> Operator:
        return Operator(self.basis, self.matrix(t))

    def hermiticity_error(self, times: Sequence[float]) -> float:
        worst = 0.0
        for t in times:
            m = self.matrix(float(t))
            worst = max(worst, float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0)
        return worst

    def check_hermitian(self, times: Sequence[float], tol: float = DefaultConfig.hermiticity_tolerance):
        error = self.hermiticity_error(times)
        if error > tol:
            raise NotHermitian(f"{self.name or 'Hamiltonian'} deviates from Hermitian by {error:.3g}",
                               details={"error": error})


class TimeDependentHamiltonian(Hamiltonian):
    """Sum of HamiltonianTerm over one basis"""

    def __init__(self, basis: ProductBasis, terms: Sequence[HamiltonianTerm],
                 window: Optional[Tuple[float, float]] = None, name: str = ""):
        super().__init__(basis, window, name)
        for term in terms:
            if term.operator.basis != basis:
                raise ValueError(f"Term '{term.label}' lives on a different basis")
        self.terms: Tuple[HamiltonianTerm, ...] = tuple(terms)
        self._matrices = [(term.operator.matrix, term.operator.matrix.conj().T, term.with_conjugate)
                          for term in self.terms]

    def matrix(self, t: float) -> np.ndarray:
        total = np.zeros((self.basis.dim, self.basis.dim), dtype=complex)
        for term, (forward, backward, paired) in zip(self.terms, self._matrices):
            c = complex(term.coefficient(t))
            if c == 0:
                continue
            total += c * forward
            if paired:
                total += c.conjugate() * backward
        return total

    def project(self, indices: Sequence[int]) -> "TimeDependentHamiltonian":
        reduced = [term.project(indices) for term in self.terms]
        basis = reduced[0].operator.basis if reduced else self.basis.subset(indices)
        return TimeDependentHamiltonian(basis, reduced, self.window, self.name)

    def generators(self) -> List[Operator]:
        return [term.operator for term in self.terms]

    @property
    def max_frequency(self) -> float:
        return max((abs(term.frequency) for term in self.terms), default=0.0)

    def __add__(self, other: "TimeDependentHamiltonian") -> "TimeDependentHamiltonian":
        if other.basis != self.basis:
            raise ValueError("Cannot add Hamiltonians on different bases")
        window = self.window or other.window
        name = f"{self.name}+{other.name}" if self.name and other.name else self.name or other.name
        return TimeDependentHamiltonian(self.basis, self.terms + other.terms, window, name)

    def __repr__(self):
        return f"<TimeDependentHamiltonian({self.name}, terms={len(self.terms)}, dim={self.basis.dim})>"


class SampledHamiltonian(Hamiltonian):
    """
    Hamiltonian known on a time grid, linearly interpolated between samples and zero outside the grid.
    """

    def __init__(self, basis: ProductBasis, times: Sequence[float], matrices: np.ndarray, name: str = ""):
        times = np.asarray(times, dtype=float)
        matrices = np.asarray(matrices, dtype=complex)
        if matrices.shape != (len(times), basis.dim, basis.dim):
            raise ValueError("Sample matrices do not match the time grid and basis")
        if np.any(np.diff(times) <= 0):
            raise ValueError("Sample times must be strictly ascending")
        super().__init__(basis, (float(times[0]), float(times[-1])) if len(times) else None, name)
        self.times = times
        self.matrices = matrices

    def matrix(self, t: float) -> np.ndarray:
        if len(self.times) == 0 or t < self.times[0] or t > self.times[-1]:
            return np.zeros((self.basis.dim, self.basis.dim), dtype=complex)
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        if k >= len(self.times) - 1:
            return self.matrices[-1].copy()
        weight = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        return (1.0 - weight) * self.matrices[k] + weight * self.matrices[k + 1]

    def project(self, indices: Sequence[int]) -> "SampledHamiltonian":
        reduced = self.basis.subset(indices)
        idx = np.ix_(indices, indices)
        return SampledHamiltonian(reduced, self.times, self.matrices[:, idx[0], idx[1]], self.name)

    def generators(self) -> List[Operator]:
        support = np.any(np.abs(self.matrices) > 0, axis=0).astype(complex)
        return [Operator(self.basis, support)]


def build_h0(basis: ProductBasis, pulses: PulseSet, g: float = DefaultConfig.g) -> TimeDependentHamiltonian:
    """
    Reference Hamiltonian in the rotating-wave approximation:
    O1(t)|s><g|_1 - i O2(t)|s><g|_2 + g a (|s><f|_1 + |s><f|_2) + h.c.

    The -i on the second drive carries the fixed relative phase of the two classical fields.
    """
    a = mode_annihilator(basis, "a")
    cavity = a @ (atomic_projector(basis, 1, AtomLevel.F, AtomLevel.S)
                  + atomic_projector(basis, 2, AtomLevel.F, AtomLevel.S))
    omega1, omega2 = pulses.omega1, pulses.omega2
    terms = [
        HamiltonianTerm(atomic_projector(basis, 1, AtomLevel.G, AtomLevel.S),
                        lambda t: omega1(t), label="drive_1"),
        HamiltonianTerm(atomic_projector(basis, 2, AtomLevel.G, AtomLevel.S),
                        lambda t: -1j * omega2(t), label="drive_2"),
        HamiltonianTerm(cavity, lambda t: g, label="cavity_a"),
    ]
    return TimeDependentHamiltonian(basis, terms, pulses.window, "H0")


def build_h1_analytic(basis: ProductBasis, pulses: PulseSet,
                      g: float = DefaultConfig.g) -> TimeDependentHamiltonian:
    """C(t) (|phi1><phi5| + |phi5><phi1|)"""
    op = Operator.outer(basis, PHI1, PHI5)
    term = HamiltonianTerm(op, lambda t: cdd_coupling(t, pulses, g), label="cdd")
    return TimeDependentHamiltonian(basis, [term], pulses.window, "H1")


def _check_aux_sign(pulses: PulseSet, detunings: DetuningParams, g: float):
    # raises SignMismatch before any propagation starts
    t_start, t_end = pulses.window
    aux_rabi(np.linspace(t_start, t_end, 2001), pulses, detunings, g)


def build_h_aux(basis: ProductBasis, pulses: PulseSet, detunings: DetuningParams,
                g: float = DefaultConfig.g) -> TimeDependentHamiltonian:
    """
    Auxiliary interaction Hamiltonian, both atoms with identical couplings:
    sum_k aux(t) e^{i delta1 t}|g><e|_k + g e^{i delta2 t} b^dagger |f><e|_k + h.c.

    :raises TruncationError: if mode b is truncated to the vacuum.
    """
    if basis.n_max_b < 1:
        raise TruncationError("the auxiliary Hamiltonian needs n_max_b >= 1 (one b photon)",
                              details={"n_max_b": basis.n_max_b})
    _check_aux_sign(pulses, detunings, g)
    b_dag = mode_annihilator(basis, "b").dag()
    to_g = atomic_projector(basis, 1, AtomLevel.E, AtomLevel.G) + atomic_projector(basis, 2, AtomLevel.E, AtomLevel.G)
    to_f = b_dag @ (atomic_projector(basis, 1, AtomLevel.E, AtomLevel.F)
                    + atomic_projector(basis, 2, AtomLevel.E, AtomLevel.F))
    delta1, delta2 = detunings.delta1, detunings.delta2
    terms = [
        HamiltonianTerm(to_g, lambda t: aux_rabi(t, pulses, detunings, g) * np.exp(1j * delta1 * t),
                        frequency=delta1, label="aux_drive"),
        HamiltonianTerm(to_f, lambda t: g * np.exp(1j * delta2 * t),
                        frequency=delta2, label="cavity_b"),
    ]
    return TimeDependentHamiltonian(basis, terms, pulses.window, "Haux")


def build_h_eff(basis: ProductBasis, pulses: PulseSet, detunings: DetuningParams,
                g: float = DefaultConfig.g) -> TimeDependentHamiltonian:
    """
    Effective flip-flop Hamiltonian (eta^2 / delta)(S1+ S2- + S2+ S1-), S+ = |f><g|.

    Stark-shift terms are not included.
    """
    _check_aux_sign(pulses, detunings, g)
    flip_flop = (atomic_projector(basis, 1, AtomLevel.G, AtomLevel.F)
                 @ atomic_projector(basis, 2, AtomLevel.F, AtomLevel.G))
    delta = detunings.delta
    term = HamiltonianTerm(flip_flop, lambda t: eta(t, pulses, detunings, g) ** 2 / delta, label="flip_flop")
    return TimeDependentHamiltonian(basis, [term], pulses.window, "Heff")


class DecoherenceParams(BaseModel):
    """Cavity decay kappa (both modes) and atomic decay Gamma, split as Gamma/2 per channel"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kappa: float = Field(0.0, ge=0)
    gamma: float = Field(0.0, ge=0)

    @property
    def is_closed(self) -> bool:
        return self.kappa == 0 and self.gamma == 0


@dataclass(frozen=True)
class JumpChannel:
    """Contributes rate * (L rho L^dagger - {L^dagger L, rho} / 2) to the master equation"""

    name: str
    rate: float
    operator: Operator

    def project(self, indices: Sequence[int]) -> "JumpChannel":
        return JumpChannel(self.name, self.rate, project_operator(self.operator, indices))


def build_jump_operators(basis: ProductBasis, decoherence: DecoherenceParams) -> List[JumpChannel]:
    """
    Cavity leakage on modes a and b (rate kappa each) and the eight atomic decays |m><n|_k,
    n in {s, e}, m in {g, f}, k in {1, 2} (rate Gamma/2 each). Mode b is skipped when truncated to vacuum.
    """
    channels = [JumpChannel("a", decoherence.kappa, mode_annihilator(basis, "a"))]
    if basis.n_max_b >= 1:
        channels.append(JumpChannel("b", decoherence.kappa, mode_annihilator(basis, "b")))
    for atom in (1, 2):
        for upper in (AtomLevel.S, AtomLevel.E):
            for lower in (AtomLevel.G, AtomLevel.F):
                name = f"atom{atom}_{upper.name.lower()}_{lower.name.lower()}"
                channels.append(JumpChannel(name, 0.5 * decoherence.gamma,
                                            atomic_projector(basis, atom, upper, lower)))
    logger.debug(f"Built {len(channels)} jump channels (kappa={decoherence.kappa}, gamma={decoherence.gamma})")
    return channels
