"""
Occupation-number bases, state vectors and sector-restricted sparse operators.

Occupations are stored as integer bitstrings with mode 0 in the least significant
bit. Fermionic ladder operators carry the Jordan-Wigner sign
(-1)^(number of occupied modes with a strictly smaller index); hard-core bosons
carry none. Spin-orbitals of molecular systems are interleaved: orbital p with
spin alpha is mode 2p, with spin beta mode 2p+1.

Composite operators are built term by term: every basis column is pushed through
the ladder string on the full Fock space and the result is kept only when it lands
inside the target basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy import sparse

from .errors import ContractViolation, DomainError

MAX_MODES = 24

# A ladder string as written left to right, e.g. a_i^dag a_j -> ((i, True), (j, False)).
LadderString = Tuple[Tuple[int, bool], ...]
Term = Tuple[complex, LadderString]


class SpaceKind(str, Enum):
    FERMION = "fermion"
    HARD_CORE_BOSON = "hcb"


class LadderKind(str, Enum):
    CREATE = "create"
    ANNIHILATE = "annihilate"


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Canonically ordered occupation bitstrings of one or more particle-number sectors."""

    space_kind: SpaceKind
    num_modes: int
    particle_counts: Tuple[int, ...]
    states: np.ndarray
    index_of: Dict[int, int]

    @property
    def key(self) -> tuple:
        return (self.space_kind, self.num_modes, self.particle_counts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FockBasis):
            return NotImplemented
        return self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __len__(self) -> int:
        return int(self.states.shape[0])

    @property
    def dim(self) -> int:
        return len(self)

    @property
    def particle_count(self) -> Optional[int]:
        """The sector particle count, or None when the basis spans several sectors."""
        if len(self.particle_counts) == 1:
            return self.particle_counts[0]
        return None

    @property
    def is_fermionic(self) -> bool:
        return self.space_kind is SpaceKind.FERMION

    def occupations(self) -> np.ndarray:
        """0/1 matrix of shape (dim, num_modes)."""
        modes = np.arange(self.num_modes, dtype=np.int64)
        return ((self.states[:, None] >> modes[None, :]) & 1).astype(float)

    def __repr__(self) -> str:
        return (f"FockBasis({self.space_kind.value}, modes={self.num_modes}, "
                f"particles={self.particle_counts}, dim={self.dim})")


def _sector_union(space_kind: SpaceKind, num_modes: int, counts: Iterable[int]) -> FockBasis:
    counts = tuple(sorted(set(counts)))
    states = []
    for count in counts:
        for occupied in combinations(range(num_modes), count):
            states.append(sum(1 << mode for mode in occupied))
    states_array = np.array(sorted(states), dtype=np.int64)
    states_array.setflags(write=False)
    index_of = {int(state): idx for idx, state in enumerate(states_array)}
    return FockBasis(space_kind, num_modes, counts, states_array, index_of)


def build_basis(space_kind: Union[SpaceKind, str], num_modes: int,
                particle_count: Optional[int]) -> FockBasis:
    """Enumerate the sector with `particle_count` particles; None gives the whole Fock space."""
    space_kind = SpaceKind(space_kind)
    if not 0 <= num_modes <= MAX_MODES:
        raise DomainError(f"num_modes must lie in [0, {MAX_MODES}], got {num_modes}")
    if particle_count is None:
        counts: Sequence[int] = range(num_modes + 1)
    else:
        if not 0 <= particle_count <= num_modes:
            raise DomainError(
                f"particle_count must lie in [0, {num_modes}], got {particle_count}")
        counts = (particle_count,)
    basis = _sector_union(space_kind, num_modes, counts)
    logger.debug(f"Built {basis!r}")
    return basis


def shifted_basis(basis: FockBasis, shift: int) -> FockBasis:
    """The sectors of `basis` with every particle count moved by `shift`; empty counts are dropped."""
    counts = [c + shift for c in basis.particle_counts if 0 <= c + shift <= basis.num_modes]
    return _sector_union(basis.space_kind, basis.num_modes, counts)


# ── Ladder algebra on bitstrings ─────────────────────────────────────────

def _popcount(values: np.ndarray) -> np.ndarray:
    values = values.astype(np.int64, copy=True)
    count = np.zeros_like(values)
    while np.any(values):
        count += values & 1
        values >>= 1
    return count


def _apply_string(states: np.ndarray, ops: LadderString,
                  fermionic: bool) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Push every bitstring through a ladder string; returns (signs, new_states, alive)."""
    current = states.astype(np.int64, copy=True)
    signs = np.ones(current.shape, dtype=float)
    alive = np.ones(current.shape, dtype=bool)
    for mode, create in reversed(ops):
        bit = np.int64(1) << np.int64(mode)
        occupied = (current & bit) != 0
        alive &= ~occupied if create else occupied
        if fermionic:
            parity = _popcount(current & (bit - 1)) & 1
            signs = np.where(parity == 1, -signs, signs)
        current = current ^ bit
    return signs, current, alive


def term_matrix(source: FockBasis, terms: Iterable[Term],
                target: Optional[FockBasis] = None) -> sparse.csr_matrix:
    """Canonical CSR matrix of a sum of ladder strings mapping `source` into `target`.

    Images that fall outside `target` are dropped, which is exact for operators
    that map the source sector into the target sector.
    """
    target = source if target is None else target
    fermionic = source.is_fermionic
    rows, cols, values = [], [], []
    columns = np.arange(source.dim)
    for coeff, ops in terms:
        if coeff == 0:
            continue
        for mode, _ in ops:
            if not 0 <= mode < source.num_modes:
                raise DomainError(f"mode {mode} out of range for {source.num_modes} modes")
        signs, images, alive = _apply_string(source.states, ops, fermionic)
        if not np.any(alive) or target.dim == 0:
            continue
        positions = np.searchsorted(target.states, images)
        positions = np.clip(positions, 0, target.dim - 1)
        inside = alive & (target.states[positions] == images)
        rows.append(positions[inside])
        cols.append(columns[inside])
        values.append(coeff * signs[inside])
    shape = (target.dim, source.dim)
    if not rows:
        return sparse.csr_matrix(shape, dtype=complex)
    matrix = sparse.coo_matrix(
        (np.concatenate(values).astype(complex), (np.concatenate(rows), np.concatenate(cols))),
        shape=shape,
    ).tocsr()
    matrix.sum_duplicates()
    matrix.eliminate_zeros()
    matrix.sort_indices()
    return matrix


# ── States and operators ─────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class StateVector:
    """Dense complex amplitudes over a FockBasis. Immutable."""

    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex, copy=True).reshape(-1)
        if amplitudes.shape[0] != self.basis.dim:
            raise DomainError(
                f"state has {amplitudes.shape[0]} amplitudes, basis dimension is {self.basis.dim}")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def basis_state(cls, basis: FockBasis, bitstring: int) -> "StateVector":
        if bitstring not in basis.index_of:
            raise DomainError(f"bitstring {bitstring:b} is not in {basis!r}")
        amplitudes = np.zeros(basis.dim, dtype=complex)
        amplitudes[basis.index_of[bitstring]] = 1.0
        return cls(basis, amplitudes)

    @classmethod
    def from_bitstrings(cls, basis: FockBasis, weights: Dict[int, complex]) -> "StateVector":
        """Normalized superposition of the given occupation bitstrings."""
        amplitudes = np.zeros(basis.dim, dtype=complex)
        for bitstring, weight in weights.items():
            if bitstring not in basis.index_of:
                raise DomainError(f"bitstring {bitstring:b} is not in {basis!r}")
            amplitudes[basis.index_of[bitstring]] += weight
        return cls(basis, amplitudes).normalized()

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        norm = self.norm()
        if norm == 0.0:
            raise DomainError("cannot normalize the zero vector")
        return StateVector(self.basis, self.amplitudes / norm)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Canonical CSR matrix acting on one FockBasis. Immutable."""

    basis: FockBasis
    matrix: sparse.csr_matrix

    def __post_init__(self):
        matrix = sparse.csr_matrix(self.matrix, dtype=complex, copy=True)
        if matrix.shape != (self.basis.dim, self.basis.dim):
            raise DomainError(
                f"operator shape {matrix.shape} does not match basis dimension {self.basis.dim}")
        matrix.sum_duplicates()
        matrix.eliminate_zeros()
        matrix.sort_indices()
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_terms(cls, basis: FockBasis, terms: Iterable[Term]) -> "SparseOperator":
        return cls(basis, term_matrix(basis, terms))

    @classmethod
    def identity(cls, basis: FockBasis) -> "SparseOperator":
        return cls(basis, sparse.identity(basis.dim, dtype=complex, format="csr"))

    @classmethod
    def zero(cls, basis: FockBasis) -> "SparseOperator":
        return cls(basis, sparse.csr_matrix((basis.dim, basis.dim), dtype=complex))

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)

    def entries(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(row, col, value) triplets sorted by (row, col)."""
        coo = self.matrix.tocoo()
        return coo.row.copy(), coo.col.copy(), coo.data.copy()

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.basis, self.matrix.conj().T.tocsr())

    def is_zero(self) -> bool:
        return self.nnz == 0

    def hermiticity_error(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def _check_same_basis(self, other: "SparseOperator") -> None:
        if self.basis != other.basis:
            raise ContractViolation(f"operators act on different bases: {self.basis!r} vs {other.basis!r}")

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        self._check_same_basis(other)
        return SparseOperator(self.basis, self.matrix + other.matrix)

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        self._check_same_basis(other)
        return SparseOperator(self.basis, self.matrix - other.matrix)

    def __matmul__(self, other: "SparseOperator") -> "SparseOperator":
        self._check_same_basis(other)
        return SparseOperator(self.basis, self.matrix @ other.matrix)

    def __mul__(self, scalar: complex) -> "SparseOperator":
        return SparseOperator(self.basis, self.matrix * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SparseOperator":
        return self * -1.0


def ladder_matrix(basis: FockBasis, mode: int, kind: Union[LadderKind, str]) -> SparseOperator:
    """Single creation/annihilation operator on the union of the sectors adjacent to `basis`.

    The action is exact on every column of the original sectors; products such as
    a_i^dag a_j can be formed here and restricted back with `restrict`.
    """
    kind = LadderKind(kind)
    if not 0 <= mode < basis.num_modes:
        raise DomainError(f"mode {mode} out of range for {basis.num_modes} modes")
    counts = {c + shift for c in basis.particle_counts for shift in (-1, 0, 1)}
    counts = {c for c in counts if 0 <= c <= basis.num_modes}
    union = _sector_union(basis.space_kind, basis.num_modes, counts)
    term = (1.0, ((mode, kind is LadderKind.CREATE),))
    return SparseOperator(union, term_matrix(union, [term]))


def restrict(op: SparseOperator, basis: FockBasis) -> SparseOperator:
    """Project an operator onto a sub-basis whose states all belong to `op.basis`."""
    if op.basis.space_kind is not basis.space_kind or op.basis.num_modes != basis.num_modes:
        raise ContractViolation(f"cannot restrict {op.basis!r} to {basis!r}")
    try:
        positions = np.array([op.basis.index_of[int(s)] for s in basis.states], dtype=np.int64)
    except KeyError as exc:
        raise ContractViolation(f"{basis!r} is not contained in {op.basis!r}") from exc
    return SparseOperator(basis, op.matrix[positions][:, positions])


def number_operator(basis: FockBasis, mode: Optional[int] = None) -> SparseOperator:
    """n_mode, or the total number operator when `mode` is None."""
    modes = range(basis.num_modes) if mode is None else (mode,)
    for m in modes:
        if not 0 <= m < basis.num_modes:
            raise DomainError(f"mode {m} out of range for {basis.num_modes} modes")
    occupations = basis.occupations()[:, list(modes)].sum(axis=1)
    return SparseOperator(basis, sparse.diags(occupations.astype(complex), format="csr"))


def apply(op: SparseOperator, v: StateVector) -> StateVector:
    """op·v as a new StateVector."""
    if op.basis != v.basis:
        raise ContractViolation(f"operator basis {op.basis!r} does not match state basis {v.basis!r}")
    return StateVector(v.basis, op.matrix @ v.amplitudes)


def expectation(op: SparseOperator, v: StateVector) -> complex:
    """<v|op|v>."""
    if op.basis != v.basis:
        raise ContractViolation(f"operator basis {op.basis!r} does not match state basis {v.basis!r}")
    return complex(np.vdot(v.amplitudes, op.matrix @ v.amplitudes))
