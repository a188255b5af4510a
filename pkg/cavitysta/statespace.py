"""
Truncated product Hilbert space of two four-level atoms and two cavity modes

Basis labels are (level_1, level_2, n_a, n_b) in lexicographic order with G < F < S < E,
so serialized output never depends on construction order.
"""

import itertools
import logging
from collections import deque
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .misc import AtomLevel, DefaultConfig

logger = logging.getLogger(__name__)

Label = Tuple[AtomLevel, AtomLevel, int, int]

G, F, S, E = AtomLevel.G, AtomLevel.F, AtomLevel.S, AtomLevel.E

PHI1: Label = (G, F, 0, 0)
PHI2: Label = (S, F, 0, 0)
PHI3: Label = (F, F, 1, 0)
PHI4: Label = (F, S, 0, 0)
PHI5: Label = (F, G, 0, 0)
EF: Label = (E, F, 0, 0)
FFB: Label = (F, F, 0, 1)
FE: Label = (F, E, 0, 0)
FF: Label = (F, F, 0, 0)

# population columns of every trajectory, in output order
NAMED_STATES: Dict[str, Label] = {
    "phi1": PHI1,
    "phi2": PHI2,
    "phi3": PHI3,
    "phi4": PHI4,
    "phi5": PHI5,
    "ef": EF,
    "ffb": FFB,
    "fe": FE,
    "ff": FF,
}

SINGLE_EXCITATION = (PHI1, PHI2, PHI3, PHI4, PHI5)


def _normalize_label(label: Sequence) -> Label:
    level1, level2, n_a, n_b = label
    return AtomLevel(level1), AtomLevel(level2), int(n_a), int(n_b)


class ProductBasis:
    """
    Ordered list of product-state labels with a label -> index map.

    A full basis enumerates every label up to the Fock cutoffs; a reduced basis keeps a sorted subset of
    them and remembers the indices it was cut from.
    """

    def __init__(self, n_max_a: int, n_max_b: int, labels: Optional[Iterable[Label]] = None,
                 parent_indices: Optional[Sequence[int]] = None):
        if n_max_a < 0 or n_max_b < 0:
            raise ValueError("Fock cutoffs must be nonnegative")
        self.n_max_a = int(n_max_a)
        self.n_max_b = int(n_max_b)

        if labels is None:
            labels = itertools.product(AtomLevel, AtomLevel, range(self.n_max_a + 1), range(self.n_max_b + 1))
        self.labels: Tuple[Label, ...] = tuple(_normalize_label(label) for label in labels)
        self._index = {label: i for i, label in enumerate(self.labels)}
        if len(self._index) != len(self.labels):
            raise ValueError("Basis labels must be unique")
        self.parent_indices = tuple(parent_indices) if parent_indices is not None else None
        self._key = (self.n_max_a, self.n_max_b, self.labels)

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def is_full(self) -> bool:
        return self.parent_indices is None

    def index(self, label: Sequence) -> int:
        try:
            return self._index[_normalize_label(label)]
        except KeyError:
            raise KeyError(f"Label {tuple(label)} is not part of this basis") from None

    def label(self, index: int) -> Label:
        return self.labels[index]

    def __contains__(self, label) -> bool:
        return _normalize_label(label) in self._index

    def indices_of(self, labels: Iterable[Label]) -> List[int]:
        return sorted(self.index(label) for label in labels)

    def subset(self, indices: Sequence[int]) -> "ProductBasis":
        indices = _check_indices(indices, self.dim)
        if self.parent_indices is None:
            parent = indices
        else:
            parent = [self.parent_indices[i] for i in indices]
        return ProductBasis(self.n_max_a, self.n_max_b, [self.labels[i] for i in indices], parent)

    def basis_state(self, label: Sequence) -> "StateVector":
        amplitudes = np.zeros(self.dim, dtype=complex)
        amplitudes[self.index(label)] = 1.0
        return StateVector(self, amplitudes)

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return isinstance(other, ProductBasis) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        kind = "full" if self.is_full else "reduced"
        return f"<ProductBasis({kind}, dim={self.dim}, n_max_a={self.n_max_a}, n_max_b={self.n_max_b})>"


def _check_indices(indices: Sequence[int], dim: int) -> List[int]:
    indices = [int(i) for i in indices]
    for i in indices:
        if i < 0 or i >= dim:
            raise IndexError(f"Basis index {i} out of range for dimension {dim}")
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise ValueError("Subspace indices must be sorted and unique")
    return indices


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class StateVector:
    """Dense complex amplitude vector over a basis"""

    __slots__ = ("basis", "amplitudes")

    def __init__(self, basis: ProductBasis, amplitudes):
        amplitudes = np.array(amplitudes, dtype=complex).reshape(-1)
        if amplitudes.shape[0] != basis.dim:
            raise ValueError(f"State has {amplitudes.shape[0]} amplitudes, basis dimension is {basis.dim}")
        if not np.all(np.isfinite(amplitudes)):
            raise ValueError("State amplitudes must be finite")
        self.basis = basis
        self.amplitudes = _frozen(amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        norm = self.norm()
        if norm == 0.0:
            raise ValueError("Cannot normalize the zero vector")
        return StateVector(self.basis, self.amplitudes / norm)

    def is_normalized(self, tol: float = 1e-10) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def overlap(self, other: "StateVector") -> complex:
        """<self|other>"""
        _check_same_basis(self.basis, other.basis)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def amplitude(self, label: Sequence) -> complex:
        if label not in self.basis:
            return 0.0j
        return complex(self.amplitudes[self.basis.index(label)])

    def population(self, label: Sequence) -> float:
        return abs(self.amplitude(label)) ** 2

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.basis, np.outer(self.amplitudes, self.amplitudes.conj()))

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_same_basis(self.basis, other.basis)
        return StateVector(self.basis, self.amplitudes + other.amplitudes)

    def __mul__(self, scalar) -> "StateVector":
        return StateVector(self.basis, self.amplitudes * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"<StateVector(dim={self.basis.dim}, norm={self.norm():.12g})>"


class DensityMatrix:
    """Dense complex density matrix over a basis"""

    __slots__ = ("basis", "matrix")

    def __init__(self, basis: ProductBasis, matrix):
        matrix = np.array(matrix, dtype=complex)
        if matrix.shape != (basis.dim, basis.dim):
            raise ValueError(f"Density matrix shape {matrix.shape} does not match basis dimension {basis.dim}")
        self.basis = basis
        self.matrix = _frozen(matrix)

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        return state.to_density()

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) if self.basis.dim else 0.0

    def symmetrized(self) -> "DensityMatrix":
        return DensityMatrix(self.basis, 0.5 * (self.matrix + self.matrix.conj().T))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def is_physical(self, trace_tol: float = 1e-6) -> bool:
        return (self.hermiticity_error() <= DefaultConfig.hermiticity_tolerance
                and abs(self.trace() - 1.0) <= trace_tol
                and self.min_eigenvalue() >= DefaultConfig.positivity_floor)

    def population(self, label: Sequence) -> float:
        if label not in self.basis:
            return 0.0
        i = self.basis.index(label)
        return float(np.real(self.matrix[i, i]))

    def __repr__(self):
        return f"<DensityMatrix(dim={self.basis.dim}, trace={self.trace().real:.12g})>"


class Operator:
    """
    Dense complex operator over a basis.

    Frequencies are in units of g (hbar = 1).
    """

    __slots__ = ("basis", "matrix")

    def __init__(self, basis: ProductBasis, matrix):
        matrix = np.array(matrix, dtype=complex)
        if matrix.shape != (basis.dim, basis.dim):
            raise ValueError(f"Operator shape {matrix.shape} does not match basis dimension {basis.dim}")
        self.basis = basis
        self.matrix = _frozen(matrix)

    @classmethod
    def zeros(cls, basis: ProductBasis) -> "Operator":
        return cls(basis, np.zeros((basis.dim, basis.dim), dtype=complex))

    @classmethod
    def identity(cls, basis: ProductBasis) -> "Operator":
        return cls(basis, np.eye(basis.dim, dtype=complex))

    @classmethod
    def outer(cls, basis: ProductBasis, bra_label: Sequence, ket_label: Sequence) -> "Operator":
        """|bra_label><ket_label|"""
        matrix = np.zeros((basis.dim, basis.dim), dtype=complex)
        matrix[basis.index(bra_label), basis.index(ket_label)] = 1.0
        return cls(basis, matrix)

    def dag(self) -> "Operator":
        return Operator(self.basis, self.matrix.conj().T)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) if self.basis.dim else 0.0

    def is_hermitian(self, tol: float = DefaultConfig.hermiticity_tolerance) -> bool:
        return self.hermiticity_error() <= tol

    def element(self, bra_label: Sequence, ket_label: Sequence) -> complex:
        """<bra_label|O|ket_label>"""
        return complex(self.matrix[self.basis.index(bra_label), self.basis.index(ket_label)])

    def apply(self, state: StateVector) -> StateVector:
        _check_same_basis(self.basis, state.basis)
        return StateVector(self.basis, self.matrix @ state.amplitudes)

    def expectation(self, state: Union[StateVector, DensityMatrix]) -> complex:
        _check_same_basis(self.basis, state.basis)
        if isinstance(state, StateVector):
            return complex(np.vdot(state.amplitudes, self.matrix @ state.amplitudes))
        return complex(np.trace(self.matrix @ state.matrix))

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_basis(self.basis, other.basis)
        return Operator(self.basis, self.matrix + other.matrix)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.basis, self.matrix * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return self.apply(other)
        _check_same_basis(self.basis, other.basis)
        return Operator(self.basis, self.matrix @ other.matrix)

    def __repr__(self):
        return f"<Operator(dim={self.basis.dim}, nnz={int(np.count_nonzero(self.matrix))})>"


def _check_same_basis(first: ProductBasis, second: ProductBasis):
    if first != second:
        raise ValueError(f"Basis mismatch: {first!r} vs {second!r}")


def build_basis(n_max_a: int = DefaultConfig.nmax_a, n_max_b: int = DefaultConfig.nmax_b) -> ProductBasis:
    """
    Full product basis with lexicographic ordering.

    :param n_max_a: Fock cutoff of the resonant cavity mode a.
    :param n_max_b: Fock cutoff of the auxiliary cavity mode b.
    :return: basis of dimension 16 * (n_max_a + 1) * (n_max_b + 1).
    """
    basis = ProductBasis(n_max_a, n_max_b)
    logger.debug(f"Built product basis n_max_a={n_max_a}, n_max_b={n_max_b}, dim={basis.dim}")
    return basis


def atomic_projector(basis: ProductBasis, atom: int, from_level: AtomLevel, to_level: AtomLevel) -> Operator:
    """
    Transition operator |to><from| acting on one atom, identity elsewhere.

    :param atom: 1 or 2.
    """
    if atom not in (1, 2):
        raise ValueError("atom must be 1 or 2")
    slot = atom - 1
    matrix = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col, label in enumerate(basis.labels):
        if label[slot] != from_level:
            continue
        target = list(label)
        target[slot] = AtomLevel(to_level)
        target = tuple(target)
        if target in basis:
            matrix[basis.index(target), col] = 1.0
    return Operator(basis, matrix)


def mode_annihilator(basis: ProductBasis, mode: str) -> Operator:
    """
    Truncated ladder operator of cavity mode 'a' or 'b'.
    """
    if mode not in ("a", "b"):
        raise ValueError("mode must be 'a' or 'b'")
    slot = 2 if mode == "a" else 3
    matrix = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col, label in enumerate(basis.labels):
        n = label[slot]
        if n == 0:
            continue
        target = list(label)
        target[slot] = n - 1
        target = tuple(target)
        if target in basis:
            matrix[basis.index(target), col] = np.sqrt(n)
    return Operator(basis, matrix)


def number_operator(basis: ProductBasis, mode: str) -> Operator:
    annihilator = mode_annihilator(basis, mode)
    return annihilator.dag() @ annihilator


def reachable_subspace(generators: Sequence[Operator], seed: StateVector,
                       threshold: float = DefaultConfig.reachability_threshold,
                       dissipators: Sequence[Operator] = ()) -> List[int]:
    """
    Breadth-first closure of the seed's support under the generators and their adjoints.

    Jump operators only move population one way (L rho L^dagger), so ``dissipators`` are followed
    forward only.

    :param generators: Hermitian-paired operators on the seed's basis (Hamiltonian terms).
    :param seed: initial state; its support above ``threshold`` starts the search.
    :param threshold: matrix elements with magnitude at or below it count as zero.
    :param dissipators: jump operators.
    :return: sorted basis indices.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    dim = seed.basis.dim
    adjacency = np.zeros((dim, dim), dtype=bool)
    for op in generators:
        _check_same_basis(op.basis, seed.basis)
        magnitude = np.abs(op.matrix) > threshold
        adjacency |= magnitude | magnitude.T
    for op in dissipators:
        _check_same_basis(op.basis, seed.basis)
        adjacency |= np.abs(op.matrix) > threshold

    start = [int(i) for i in np.flatnonzero(np.abs(seed.amplitudes) > threshold)]
    visited = set(start)
    queue = deque(start)
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(adjacency[:, i]):
            j = int(j)
            if j not in visited:
                visited.add(j)
                queue.append(j)
    indices = sorted(visited)
    logger.debug(f"Reachable subspace: {len(indices)} of {dim} states")
    return indices


def project_operator(op: Operator, indices: Sequence[int]) -> Operator:
    """Restriction of an operator to the sorted index set"""
    indices = _check_indices(indices, op.basis.dim)
    reduced = op.basis.subset(indices)
    return Operator(reduced, op.matrix[np.ix_(indices, indices)])


def project_state(state: StateVector, indices: Sequence[int]) -> StateVector:
    indices = _check_indices(indices, state.basis.dim)
    return StateVector(state.basis.subset(indices), state.amplitudes[indices])


def _embedding(reduced: ProductBasis, full: ProductBasis) -> List[int]:
    return [full.index(label) for label in reduced.labels]


def embed_operator(op: Operator, full: ProductBasis) -> Operator:
    """Inverse of project_operator: zeros outside the reduced subspace"""
    positions = _embedding(op.basis, full)
    matrix = np.zeros((full.dim, full.dim), dtype=complex)
    matrix[np.ix_(positions, positions)] = op.matrix
    return Operator(full, matrix)


def embed_state(state: StateVector, full: ProductBasis) -> StateVector:
    positions = _embedding(state.basis, full)
    amplitudes = np.zeros(full.dim, dtype=complex)
    amplitudes[positions] = state.amplitudes
    return StateVector(full, amplitudes)
