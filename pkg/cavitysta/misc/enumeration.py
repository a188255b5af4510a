# encoding=utf-8

from enum import Enum, IntEnum


class AtomLevel(IntEnum):
    """
    Internal levels of one atom, in basis order.

    Attributes:
        G: ground state driven by the classical fields.
        F: ground state coupled to the cavity modes.
        S: excited state of the Lambda system.
        E: auxiliary excited state, far detuned.
    """
    G = 0
    F = 1
    S = 2
    E = 3


class Task(str, Enum):
    """Target of a scenario run"""
    TRANSFER = "transfer"
    ENTANGLE = "entangle"


class HamiltonianMode(str, Enum):
    """
    Which drive governs a scenario.

    Attributes:
        ADIABATIC: reference Hamiltonian H0 only.
        CDD: analytic counter-diabatic Hamiltonian H1 only.
        AUX: H0 plus the auxiliary interaction Hamiltonian.
        AUX_ONLY: auxiliary interaction Hamiltonian alone.
        EFFECTIVE: H0 plus the effective flip-flop Hamiltonian.
        EFFECTIVE_ONLY: effective flip-flop Hamiltonian alone.
    """
    ADIABATIC = "adiabatic"
    CDD = "cdd"
    AUX = "aux"
    AUX_ONLY = "aux-only"
    EFFECTIVE = "effective"
    EFFECTIVE_ONLY = "effective-only"

    @property
    def needs_mode_b(self) -> bool:
        return self in (HamiltonianMode.AUX, HamiltonianMode.AUX_ONLY)

    @property
    def needs_detunings(self) -> bool:
        return self in (HamiltonianMode.AUX, HamiltonianMode.AUX_ONLY,
                        HamiltonianMode.EFFECTIVE, HamiltonianMode.EFFECTIVE_ONLY)


class IntegratorMethod(str, Enum):
    RK4 = "rk4"
    ADAPTIVE = "adaptive"
