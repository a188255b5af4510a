"""
Instantaneous eigensystem of the reference Hamiltonian on the single-excitation subspace, the
approximate analytic eigenstates, the adiabaticity diagnostic, and the numerical transitionless-driving
Hamiltonian built from a tracked eigenbasis.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import linear_sum_assignment

from .errors import DegenerateInput, GaugeBreak, NotHermitian
from .hamiltonians import Hamiltonian, SampledHamiltonian, build_h0, build_h1_analytic
from .misc import DefaultConfig
from .pulses import PulseSet
from .statespace import (PHI1, PHI2, PHI3, PHI4, PHI5, SINGLE_EXCITATION, Operator, ProductBasis,
                         build_basis)

logger = logging.getLogger(__name__)

# eigenstate labels in ascending order of their approximate eigenvalues
ANALYTIC_ORDER = (4, 2, 1, 3, 5)

MIN_TRACK_OVERLAP = 0.9


@dataclass(frozen=True)
class EigenSnapshot:
    """
    Eigenvalues in ascending order and eigenvectors as the columns of ``vectors``.

    ``labels[k]`` is the eigenstate label (1..5) of column k when it is known.
    """

    t: float
    basis: ProductBasis
    eigenvalues: np.ndarray
    vectors: np.ndarray
    labels: Optional[Tuple[int, ...]] = None
    gauge: str = "eigh"

    def column(self, label: int) -> int:
        if self.labels is None:
            raise ValueError("snapshot carries no eigenstate labels")
        return self.labels.index(label)

    def vector(self, label: int) -> np.ndarray:
        return self.vectors[:, self.column(label)]

    def eigenvalue(self, label: int) -> float:
        return float(self.eigenvalues[self.column(label)])

    def relabeled(self, labels: Sequence[int]) -> "EigenSnapshot":
        return EigenSnapshot(self.t, self.basis, self.eigenvalues, self.vectors, tuple(labels), self.gauge)


@dataclass(frozen=True)
class EigenTrack:
    """
    Snapshots along a time grid with columns matched by maximal overlap and phases made continuous,
    so that Re <v_n(t_j)|v_n(t_j+1)> >= 0 for every column.
    """

    times: np.ndarray
    snapshots: Tuple[EigenSnapshot, ...]
    min_overlap: float

    @property
    def basis(self) -> ProductBasis:
        return self.snapshots[0].basis

    def vectors(self) -> np.ndarray:
        return np.array([s.vectors for s in self.snapshots])

    def covers(self, t: float) -> bool:
        return bool(self.times[0] <= t <= self.times[-1])

    def label(self, snapshot: EigenSnapshot) -> EigenSnapshot:
        """Carry the labels of the nearest tracked snapshot over to ``snapshot`` by maximal overlap"""
        nearest = self.snapshots[int(np.argmin(np.abs(self.times - snapshot.t)))]
        return snapshot.relabeled(label_analytic(snapshot, nearest))


def single_excitation_basis(basis: Optional[ProductBasis] = None) -> ProductBasis:
    """The five states phi1..phi5, cut from ``basis`` (default n_max_a = 1, n_max_b = 0)"""
    basis = basis or build_basis(1, 0)
    return basis.subset(basis.indices_of(SINGLE_EXCITATION))


def _analytic_vectors(omega1: float, omega2: float, g: float):
    norm2 = omega1 ** 2 + omega2 ** 2
    root = np.sqrt(2.0 * norm2)
    outer_norm = 1.0 / np.sqrt(norm2 / g ** 2 + 8.0)
    dark_norm = 1.0 / np.sqrt(norm2 + (omega1 * omega2 / g) ** 2)
    # amplitudes on (phi1, phi2, phi3, phi4, phi5)
    states = {
        1: dark_norm * np.array([-1j * omega2, 0, 1j * omega1 * omega2 / g, 0, omega1]),
        2: np.array([1j * omega1 / root, -0.5j, 0, 0.5j, omega2 / root]),
        3: np.array([1j * omega1 / root, 0.5j, 0, -0.5j, omega2 / root]),
        4: outer_norm * np.array([-1j * omega1 / g, 1j * np.sqrt(2), -2j, 1j * np.sqrt(2), omega2 / g]),
        5: outer_norm * np.array([-1j * omega1 / g, -1j * np.sqrt(2), -2j, -1j * np.sqrt(2), omega2 / g]),
    }
    half = np.sqrt(norm2 / 2.0)
    values = {1: 0.0, 2: -half, 3: half, 4: -np.sqrt(2) * g, 5: np.sqrt(2) * g}
    return states, values


def analytic_eigensystem(t: float, pulses: PulseSet, g: float = DefaultConfig.g,
                         basis: Optional[ProductBasis] = None) -> EigenSnapshot:
    """
    Approximate eigenstates of H0 in the weak-driving regime; the dark state is exact.

    Vectors are renormalized numerically and ordered by ascending approximate eigenvalue; ``labels``
    records which eigenstate each column is.

    :param basis: basis containing phi1..phi5 (default: the five-state subspace).
    :raises DegenerateInput: when both pulses vanish at t.
    """
    omega1, omega2 = float(pulses.omega1(t)), float(pulses.omega2(t))
    if omega1 ** 2 + omega2 ** 2 < DefaultConfig.pulse_floor:
        raise DegenerateInput(f"both pulses vanish at t = {t:.6g}/g", details={"t": t})
    basis = basis or single_excitation_basis()
    states, values = _analytic_vectors(omega1, omega2, g)
    positions = [basis.index(label) for label in (PHI1, PHI2, PHI3, PHI4, PHI5)]

    vectors = np.zeros((basis.dim, 5), dtype=complex)
    eigenvalues = np.empty(5)
    for column, label in enumerate(ANALYTIC_ORDER):
        amplitudes = states[label]
        vectors[positions, column] = amplitudes / np.linalg.norm(amplitudes)
        eigenvalues[column] = values[label]
    return EigenSnapshot(float(t), basis, eigenvalues, vectors, ANALYTIC_ORDER, "analytic")


def numeric_eigensystem(h: Operator, t: float = 0.0) -> EigenSnapshot:
    """
    Dense Hermitian eigensolve; eigenvalues ascending.

    :raises NotHermitian: if h deviates from its adjoint by more than 1e-10.
    """
    error = h.hermiticity_error()
    if error > DefaultConfig.hermiticity_tolerance:
        raise NotHermitian(f"cannot diagonalize: |H - H^dagger| = {error:.3g}", details={"error": error})
    matrix = 0.5 * (h.matrix + h.matrix.conj().T)
    eigenvalues, vectors = eigh(matrix)
    return EigenSnapshot(float(t), h.basis, eigenvalues, vectors)


def label_analytic(numeric: EigenSnapshot, analytic: EigenSnapshot) -> Tuple[int, ...]:
    """
    Assign each numeric eigenvector the label of the reference state it overlaps most with. The
    reference is usually the analytic eigensystem but any labelled snapshot works.

    :return: labels, one per numeric column.
    """
    if numeric.basis != analytic.basis:
        raise ValueError("snapshots live on different bases")
    overlap = np.abs(analytic.vectors.conj().T @ numeric.vectors)
    rows, cols = linear_sum_assignment(-overlap)
    labels = [0] * numeric.vectors.shape[1]
    for row, col in zip(rows, cols):
        labels[col] = analytic.labels[row]
    return tuple(labels)


def _projected_h0(pulses: PulseSet, g: float):
    full = build_basis(1, 0)
    indices = full.indices_of(SINGLE_EXCITATION)
    return build_h0(full, pulses, g).project(indices)


def adiabaticity_ratio(t: float, pulses: PulseSet, g: float = DefaultConfig.g, n: int = 2,
                       step: Optional[float] = None, h0: Optional[Hamiltonian] = None) -> float:
    """
    |<psi_n|d/dt psi_1>| / |lambda_n| with the dark-state derivative taken by central difference.

    :param n: eigenstate label, 2..5.
    :param step: difference step, default 1e-4 of the pulse window.
    :param h0: H0 already projected on the five-state subspace, reused across calls.
    :raises DegenerateInput: if |lambda_n| < 1e-9 g or the pulses vanish around t.
    """
    if n not in (2, 3, 4, 5):
        raise ValueError("n must be one of 2, 3, 4, 5")
    step = step or 1e-4 * pulses.duration
    h0 = h0 or _projected_h0(pulses, g)

    dark_before = analytic_eigensystem(t - step, pulses, g, h0.basis).vector(1)
    dark_after = analytic_eigensystem(t + step, pulses, g, h0.basis).vector(1)
    d_dark = (dark_after - dark_before) / (2.0 * step)

    snapshot = numeric_eigensystem(h0.evaluate(t), t)
    snapshot = snapshot.relabeled(label_analytic(snapshot, analytic_eigensystem(t, pulses, g, h0.basis)))
    eigenvalue = snapshot.eigenvalue(n)
    if abs(eigenvalue) < 1e-9 * g:
        raise DegenerateInput(f"lambda_{n} vanishes at t = {t:.6g}/g", details={"t": t, "n": n})
    return float(abs(np.vdot(snapshot.vector(n), d_dark)) / abs(eigenvalue))


def _align(previous: EigenSnapshot, current: EigenSnapshot) -> Tuple[EigenSnapshot, float]:
    overlap = previous.vectors.conj().T @ current.vectors
    rows, cols = linear_sum_assignment(-np.abs(overlap))
    order = cols[np.argsort(rows)]
    vectors = current.vectors[:, order]
    eigenvalues = current.eigenvalues[order]
    matched = np.einsum("ij,ij->j", previous.vectors.conj(), vectors)
    magnitudes = np.abs(matched)
    phases = np.where(magnitudes > 0, matched.conj() / np.where(magnitudes > 0, magnitudes, 1.0), 1.0)
    vectors = vectors * phases[np.newaxis, :]
    aligned = EigenSnapshot(current.t, current.basis, eigenvalues, vectors, previous.labels, "continuous")
    return aligned, float(magnitudes.min()) if magnitudes.size else 1.0


def build_eigen_track(hamiltonian: Hamiltonian, times: Sequence[float],
                      labels: Optional[Sequence[int]] = None) -> EigenTrack:
    """
    Diagonalize along a time grid, following each eigenvector by maximal overlap with its predecessor
    rather than by sort order.

    :param labels: optional labels for the columns of the first snapshot.
    :raises GaugeBreak: if a matched overlap drops below 0.9.
    """
    times = np.asarray(times, dtype=float)
    if len(times) == 0:
        raise ValueError("empty time grid")
    first = numeric_eigensystem(hamiltonian.evaluate(float(times[0])), float(times[0]))
    if labels is not None:
        first = first.relabeled(labels)
    snapshots = [first]
    worst = 1.0
    for t in times[1:]:
        current = numeric_eigensystem(hamiltonian.evaluate(float(t)), float(t))
        aligned, overlap = _align(snapshots[-1], current)
        if overlap < MIN_TRACK_OVERLAP:
            raise GaugeBreak(f"eigenvector overlap {overlap:.3f} at t = {t:.6g}/g; refine the grid",
                             details={"t": float(t), "overlap": overlap})
        worst = min(worst, overlap)
        snapshots.append(aligned)
    logger.debug(f"Tracked {len(times)} snapshots, minimum overlap {worst:.6f}")
    return EigenTrack(times, tuple(snapshots), worst)


def cdd_numeric(track: EigenTrack) -> SampledHamiltonian:
    """
    H1 = i sum_m |d/dt psi_m><psi_m| from finite differences along the track, in parallel-transport
    gauge: A_nm = <psi_n|d/dt psi_m> is antisymmetrized with its diagonal removed, H1 = i V A V^dagger.
    """
    vectors = track.vectors()
    times = track.times
    count = len(times)
    if count < 2:
        raise ValueError("a track needs at least two snapshots")
    matrices = np.empty((count, track.basis.dim, track.basis.dim), dtype=complex)
    for k in range(count):
        lo, hi = max(k - 1, 0), min(k + 1, count - 1)
        derivative = (vectors[hi] - vectors[lo]) / (times[hi] - times[lo])
        v = vectors[k]
        connection = v.conj().T @ derivative
        connection = 0.5 * (connection - connection.conj().T)
        np.fill_diagonal(connection, 0.0)
        matrices[k] = 1j * v @ connection @ v.conj().T
    return SampledHamiltonian(track.basis, times, matrices, "H1_numeric")


def cdd_track(pulses: PulseSet, g: float = DefaultConfig.g, samples: int = 2001,
              basis: Optional[ProductBasis] = None) -> EigenTrack:
    """
    Eigen-track of H0 on the five-state subspace over the part of the window where
    O1^2 + O2^2 exceeds 1e-6 g^2.
    """
    full = basis or build_basis(1, 0)
    h0 = build_h0(full, pulses, g).project(full.indices_of(SINGLE_EXCITATION))
    grid = np.linspace(pulses.window[0], pulses.window[1], samples)
    active = np.asarray(pulses.rabi_norm_squared(grid)) > DefaultConfig.track_floor * g ** 2
    if not np.any(active):
        raise DegenerateInput("the pulses never exceed the tracking floor")
    first, last = np.flatnonzero(active)[[0, -1]]
    times = grid[first:last + 1]
    start = numeric_eigensystem(h0.evaluate(float(times[0])), float(times[0]))
    labels = label_analytic(start, analytic_eigensystem(float(times[0]), pulses, g, h0.basis))
    return build_eigen_track(h0, times, labels)


def cdd_gap(pulses: PulseSet, t: float, g: float = DefaultConfig.g, samples: int = 2001) -> float:
    """
    Relative Frobenius gap between the numeric transitionless Hamiltonian and
    C(t)(|phi1><phi5| + h.c.), both restricted to span{phi1, phi5}.
    """
    track = cdd_track(pulses, g, samples)
    numeric = cdd_numeric(track)
    analytic = build_h1_analytic(track.basis, pulses, g)
    block = [track.basis.index(PHI1), track.basis.index(PHI5)]
    idx = np.ix_(block, block)
    h_numeric = numeric.matrix(t)[idx]
    h_analytic = analytic.matrix(t)[idx]
    scale = np.linalg.norm(h_analytic)
    if scale == 0:
        raise DegenerateInput(f"C(t) vanishes at t = {t:.6g}/g", details={"t": t})
    return float(np.linalg.norm(h_numeric - h_analytic) / scale)
