"""
Operator pools of anti-Hermitian generators.

Fermionic pools hold generalized singles a_i^dag a_k - a_k^dag a_i and generalized
doubles a_i^dag a_j^dag a_k a_l - a_k^dag a_l^dag a_i a_j; the pair pool holds
hard-core-boson hops b_i^dag b_j - b_j^dag b_i. Every operator is stored already
restricted to the basis sector. Operators whose restriction vanishes, and operators
whose restriction duplicates an earlier one up to sign, are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from .errors import DomainError
from .fock import FockBasis, SparseOperator, SpaceKind, Term


class PoolOperatorKind(str, Enum):
    SINGLE = "single"
    DOUBLE = "double"
    PAIR_HOP = "pair_hop"


class PoolKind(str, Enum):
    GSD = "gsd"
    GSD_SPIN_FILTERED = "gsd_spin"
    PAIR = "pair"


@dataclass(frozen=True, eq=False)
class PoolOperator:
    kind: PoolOperatorKind
    mode_indices: Tuple[int, ...]
    matrix: SparseOperator

    @property
    def label(self) -> str:
        return f"{self.kind.value}{self.mode_indices}"


@dataclass(frozen=True, eq=False)
class OperatorPool:
    operators: Tuple[PoolOperator, ...]
    pool_kind: PoolKind
    basis: FockBasis

    def __len__(self) -> int:
        return len(self.operators)

    def __iter__(self) -> Iterator[PoolOperator]:
        return iter(self.operators)


def _spin(mode: int) -> int:
    # interleaved spin-orbitals: even modes alpha, odd modes beta
    return mode % 2


def _realization_key(op: SparseOperator) -> bytes:
    """Identity of a sparse realization up to an overall sign."""
    matrix = op.matrix
    data = matrix.data
    first = data[np.flatnonzero(np.abs(data) > 0)[0]]
    phase = first / abs(first)
    canonical = np.round(data / phase, 12) + 0.0
    return matrix.indptr.tobytes() + b"|" + matrix.indices.tobytes() + b"|" + canonical.tobytes()


def _collect(basis: FockBasis,
             candidates: List[Tuple[PoolOperatorKind, Tuple[int, ...], List[Term]]]) -> List[PoolOperator]:
    operators: List[PoolOperator] = []
    seen = set()
    dropped_zero = dropped_duplicate = 0
    for kind, indices, terms in candidates:
        matrix = SparseOperator.from_terms(basis, terms)
        if matrix.is_zero():
            dropped_zero += 1
            continue
        key = _realization_key(matrix)
        if key in seen:
            dropped_duplicate += 1
            continue
        seen.add(key)
        operators.append(PoolOperator(kind, indices, matrix))
    logger.debug(f"Pool on {basis!r}: kept {len(operators)}, "
                 f"dropped {dropped_zero} zero and {dropped_duplicate} duplicate operators")
    return operators


def build_gsd_pool(basis: FockBasis, spin_filtered: bool = False) -> OperatorPool:
    """Generalized singles and doubles, optionally keeping only S^z-conserving operators."""
    if basis.space_kind is not SpaceKind.FERMION:
        raise DomainError("generalized singles/doubles need a fermionic basis; use build_pair_pool")
    modes = range(basis.num_modes)
    candidates = []
    for i, k in combinations(modes, 2):
        if spin_filtered and _spin(i) != _spin(k):
            continue
        terms = [(1.0, ((i, True), (k, False))), (-1.0, ((k, True), (i, False)))]
        candidates.append((PoolOperatorKind.SINGLE, (i, k), terms))
    pairs = list(combinations(modes, 2))
    for (i, j), (k, l) in combinations(pairs, 2):
        if spin_filtered and _spin(i) + _spin(j) != _spin(k) + _spin(l):
            continue
        terms = [
            (1.0, ((i, True), (j, True), (k, False), (l, False))),
            (-1.0, ((k, True), (l, True), (i, False), (j, False))),
        ]
        candidates.append((PoolOperatorKind.DOUBLE, (i, j, k, l), terms))
    kind = PoolKind.GSD_SPIN_FILTERED if spin_filtered else PoolKind.GSD
    return OperatorPool(tuple(_collect(basis, candidates)), kind, basis)


def build_pair_pool(basis: FockBasis) -> OperatorPool:
    """Pair hops b_i^dag b_j - b_j^dag b_i for i < j."""
    if basis.space_kind is not SpaceKind.HARD_CORE_BOSON:
        raise DomainError("the pair pool needs a hard-core-boson basis; use build_gsd_pool")
    candidates = []
    for i, j in combinations(range(basis.num_modes), 2):
        terms = [(1.0, ((i, True), (j, False))), (-1.0, ((j, True), (i, False)))]
        candidates.append((PoolOperatorKind.PAIR_HOP, (i, j), terms))
    return OperatorPool(tuple(_collect(basis, candidates)), PoolKind.PAIR, basis)


def build_pool(basis: FockBasis, pool_kind: Optional[Union[PoolKind, str]] = None) -> OperatorPool:
    """Pool of the requested kind; defaults to spin-filtered GSD for fermions and pairs otherwise."""
    if pool_kind is None:
        pool_kind = PoolKind.GSD_SPIN_FILTERED if basis.is_fermionic else PoolKind.PAIR
    pool_kind = PoolKind(pool_kind)
    if pool_kind is PoolKind.PAIR:
        return build_pair_pool(basis)
    return build_gsd_pool(basis, spin_filtered=pool_kind is PoolKind.GSD_SPIN_FILTERED)


def operator_at(pool: OperatorPool, index: int) -> PoolOperator:
    index = int(index)
    if not 0 <= index < len(pool):
        raise DomainError(f"pool index {index} out of range for a pool of {len(pool)} operators")
    return pool.operators[index]
