"""
The growing ansatz U_n = A_n ... A_1 with A = exp(theta * P).

States are evolved directly: exp(theta*P) is applied to a state vector with a
truncated Taylor series, so no matrix exponential is ever formed. An Ansatz is an
immutable snapshot holding its accepted elements and the state they produce.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from .errors import ContractViolation, DomainError, NumericalError, ParseError
from .fock import StateVector
from .pool import OperatorPool, PoolKind, PoolOperator, operator_at

TAYLOR_TOLERANCE = 1e-15
TAYLOR_MAX_TERMS = 60
ANSATZ_MAGIC = "NREP-ANSATZ v1"


def apply_exponential(operator: PoolOperator, theta: float, state: StateVector) -> StateVector:
    """exp(theta * P) applied to `state`, renormalized to unit norm."""
    if operator.matrix.basis != state.basis:
        raise ContractViolation("pool operator and state live on different bases")
    theta = float(theta)
    if not np.isfinite(theta):
        raise DomainError(f"theta must be finite, got {theta}")
    if theta == 0.0:
        return state

    matrix = operator.matrix.matrix
    result = np.array(state.amplitudes, dtype=complex)
    term = result.copy()
    for k in range(1, TAYLOR_MAX_TERMS + 1):
        term = (theta / k) * (matrix @ term)
        result += term
        if np.linalg.norm(term) < TAYLOR_TOLERANCE:
            break
    else:
        raise NumericalError(
            f"Taylor series for exp(theta*P) did not converge in {TAYLOR_MAX_TERMS} terms "
            f"(theta={theta}, operator {operator.label})")

    norm = np.linalg.norm(result)
    if not np.isfinite(norm) or norm == 0.0:
        raise NumericalError(f"exp(theta*P) produced a degenerate vector (norm={norm})")
    return StateVector(state.basis, result / norm)


@dataclass(frozen=True)
class AnsatzElement:
    pool_index: int
    theta: float


@dataclass(frozen=True, eq=False)
class Ansatz:
    """Accepted elements in application order plus the cached state they produce."""

    pool: OperatorPool
    initial_state: StateVector
    elements: Tuple[AnsatzElement, ...] = ()
    state: Optional[StateVector] = None

    def __post_init__(self):
        if self.pool.basis != self.initial_state.basis:
            raise ContractViolation("pool and initial state live on different bases")
        if self.state is None:
            object.__setattr__(self, "state", self.initial_state)

    def __len__(self) -> int:
        return len(self.elements)


def extend(ansatz: Ansatz, element: AnsatzElement, cached_state: StateVector) -> Ansatz:
    """New ansatz with `element` appended; `cached_state` must be exp(theta*P) of the current state."""
    operator_at(ansatz.pool, element.pool_index)
    if cached_state.basis != ansatz.pool.basis:
        raise ContractViolation("cached state does not live on the pool basis")
    return dataclasses.replace(
        ansatz,
        elements=ansatz.elements + (element,),
        state=cached_state,
    )


def evolve_from_scratch(ansatz: Ansatz) -> StateVector:
    state = ansatz.initial_state
    for element in ansatz.elements:
        state = apply_exponential(operator_at(ansatz.pool, element.pool_index), element.theta, state)
    return state


def replay_deviation(ansatz: Ansatz) -> float:
    """Largest amplitude difference between the cached state and a full replay."""
    replayed = evolve_from_scratch(ansatz)
    return float(np.max(np.abs(replayed.amplitudes - ansatz.state.amplitudes), initial=0.0))


# ── Text format ──────────────────────────────────────────────────────────

def _header(pool: OperatorPool) -> str:
    particles = pool.basis.particle_count
    return (f"{ANSATZ_MAGIC} {pool.pool_kind.value} {pool.basis.num_modes} "
            f"{'all' if particles is None else particles}")


def write_ansatz(ansatz: Ansatz, path: Union[str, Path]) -> None:
    lines = [_header(ansatz.pool)]
    lines.extend(f"{e.pool_index} {format(e.theta, '.17g')}" for e in ansatz.elements)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_ansatz_elements(path: Union[str, Path]) -> Tuple[dict, List[AnsatzElement]]:
    """Parse an ansatz file into its header fields and elements."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError(path, 1, "empty ansatz file")
    tokens = lines[0].split()
    if len(tokens) != 5 or " ".join(tokens[:2]) != ANSATZ_MAGIC:
        raise ParseError(path, 1, f"expected '{ANSATZ_MAGIC} <pool_kind> <num_modes> <particle_count>'")
    try:
        header = {
            "pool_kind": PoolKind(tokens[2]),
            "num_modes": int(tokens[3]),
            "particle_count": None if tokens[4] == "all" else int(tokens[4]),
        }
    except ValueError as exc:
        raise ParseError(path, 1, f"bad header field: {exc}") from exc

    elements = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ParseError(path, line_no, "expected 'pool_index theta'")
        try:
            element = AnsatzElement(int(fields[0]), float(fields[1]))
        except ValueError as exc:
            raise ParseError(path, line_no, str(exc)) from exc
        if not np.isfinite(element.theta):
            raise ParseError(path, line_no, "theta is not finite")
        elements.append(element)
    return header, elements


def read_ansatz(path: Union[str, Path], pool: OperatorPool, initial_state: StateVector) -> Ansatz:
    """Rebuild an Ansatz from its text form by replaying it on `initial_state`."""
    header, elements = read_ansatz_elements(path)
    expected = (pool.pool_kind, pool.basis.num_modes, pool.basis.particle_count)
    found = (header["pool_kind"], header["num_modes"], header["particle_count"])
    if found != expected:
        raise ParseError(path, 1, f"ansatz header {found} does not match pool {expected}")
    ansatz = Ansatz(pool, initial_state)
    state = initial_state
    for element in elements:
        state = apply_exponential(operator_at(pool, element.pool_index), element.theta, state)
        ansatz = extend(ansatz, element, state)
    logger.debug(f"Loaded ansatz of length {len(ansatz)} from {path}")
    return ansatz
