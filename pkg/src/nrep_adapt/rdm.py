"""
Reduced density matrices, the Hilbert-Schmidt cost and target files.

Conventions:
    1-RDM     (i, j)        = <a_i^dag a_j>,                 trace N
    2-RDM     (i, j, k, l)  = <a_i^dag a_j^dag a_l a_k>,     composite row (i,j), column (k,l),
                                                             pair trace N(N-1)
    DOCI      PI (i, j)     = <b_i^dag b_j>,  D (i, j) = <n_i n_j>

RDMs are obtained from lowered states: with V_j = a_j|psi>, the 1-RDM is the Gram matrix
of the V_j, and with U_kl = a_l a_k|psi> the composite 2-RDM is the Gram matrix of the U_kl.
The stacked lowering maps are cached per basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
from loguru import logger
from scipy import sparse

from .errors import DomainError, ParseError
from .fock import FockBasis, SpaceKind, StateVector, shifted_basis, term_matrix

TARGET_MAGIC = "NREP-TARGET v1"
_METADATA_KEYS = ("provenance", "system", "noise")


class RdmKind(str, Enum):
    RDM1 = "rdm1"
    RDM2 = "rdm2"
    DOCI = "doci"


@dataclass(frozen=True)
class Rdm1:
    matrix: np.ndarray

    @property
    def arrays(self) -> Tuple[np.ndarray, ...]:
        return (self.matrix,)


@dataclass(frozen=True)
class Rdm2:
    tensor: np.ndarray

    @property
    def arrays(self) -> Tuple[np.ndarray, ...]:
        return (self.tensor,)

    @property
    def composite(self) -> np.ndarray:
        m = self.tensor.shape[0]
        return self.tensor.reshape(m * m, m * m)


@dataclass(frozen=True)
class DociBlocks:
    pi_matrix: np.ndarray
    d_matrix: np.ndarray

    @property
    def arrays(self) -> Tuple[np.ndarray, ...]:
        return (self.pi_matrix, self.d_matrix)


def _expected_shapes(kind: RdmKind, num_modes: int) -> Tuple[Tuple[int, ...], ...]:
    m = num_modes
    if kind is RdmKind.RDM1:
        return ((m, m),)
    if kind is RdmKind.RDM2:
        return ((m, m, m, m),)
    return ((m, m), (m, m))


@dataclass(frozen=True)
class RdmTarget:
    """A fixed, possibly non-N-representable, p-body matrix plus where it came from."""

    kind: RdmKind
    arrays: Tuple[np.ndarray, ...]
    num_modes: int
    particle_count: int
    provenance: str = ""
    noise_epsilon: float = 0.0
    system: str = ""

    def __post_init__(self):
        kind = RdmKind(self.kind)
        object.__setattr__(self, "kind", kind)
        arrays = []
        for array in self.arrays:
            array = np.array(array, dtype=complex, copy=True)
            array.setflags(write=False)
            arrays.append(array)
        expected = _expected_shapes(kind, self.num_modes)
        found = tuple(a.shape for a in arrays)
        if found != expected:
            raise DomainError(f"{kind.value} target on {self.num_modes} modes needs shapes {expected}, got {found}")
        object.__setattr__(self, "arrays", tuple(arrays))

    def as_payload(self) -> Union[Rdm1, Rdm2, DociBlocks]:
        if self.kind is RdmKind.RDM1:
            return Rdm1(self.arrays[0])
        if self.kind is RdmKind.RDM2:
            return Rdm2(self.arrays[0])
        return DociBlocks(*self.arrays)


Payload = Union[Rdm1, Rdm2, DociBlocks, RdmTarget]


def target_from_rdm(rdm: Union[Rdm1, Rdm2, DociBlocks], particle_count: int,
                    provenance: str = "", system: str = "") -> RdmTarget:
    kind = {Rdm1: RdmKind.RDM1, Rdm2: RdmKind.RDM2, DociBlocks: RdmKind.DOCI}[type(rdm)]
    num_modes = rdm.arrays[0].shape[0]
    return RdmTarget(kind, rdm.arrays, num_modes, particle_count, provenance=provenance, system=system)


# ── Extraction ───────────────────────────────────────────────────────────

@lru_cache(maxsize=32)
def _lowering_stack(basis: FockBasis, depth: int) -> Tuple[sparse.csr_matrix, int]:
    """Vertical stack of a_j (depth 1) or a_l a_k (depth 2, row block k*m + l) into the lowered sectors."""
    m = basis.num_modes
    lower = shifted_basis(basis, -depth)
    if depth == 1:
        strings = [((j, False),) for j in range(m)]
    else:
        strings = [((l, False), (k, False)) for k in range(m) for l in range(m)]
    blocks = [term_matrix(basis, [(1.0, ops)], lower) for ops in strings]
    stack = sparse.vstack(blocks, format="csr")
    logger.debug(f"Cached depth-{depth} lowering stack for {basis!r}: {stack.shape}, nnz={stack.nnz}")
    return stack, lower.dim


def _lowered(state: StateVector, depth: int) -> np.ndarray:
    stack, lower_dim = _lowering_stack(state.basis, depth)
    rows = state.basis.num_modes ** depth
    if lower_dim == 0:
        return np.zeros((rows, 0), dtype=complex)
    return (stack @ state.amplitudes).reshape(rows, lower_dim)


def compute_rdm1(state: StateVector) -> Rdm1:
    if state.basis.space_kind is not SpaceKind.FERMION:
        raise DomainError("1-RDM needs a fermionic basis; use compute_doci_blocks for pair spaces")
    lowered = _lowered(state, 1)
    return Rdm1(lowered.conj() @ lowered.T)


def compute_rdm2(state: StateVector) -> Rdm2:
    basis = state.basis
    if basis.space_kind is not SpaceKind.FERMION:
        raise DomainError("2-RDM needs a fermionic basis; use compute_doci_blocks for pair spaces")
    if min(basis.particle_counts) < 2:
        raise DomainError(f"2-RDM needs at least two particles, basis has {basis.particle_counts}")
    m = basis.num_modes
    lowered = _lowered(state, 2)
    composite = lowered.conj() @ lowered.T
    return Rdm2(composite.reshape(m, m, m, m))


def compute_doci_blocks(state: StateVector) -> DociBlocks:
    basis = state.basis
    if basis.space_kind is not SpaceKind.HARD_CORE_BOSON:
        raise DomainError("DOCI blocks need a hard-core-boson basis; use compute_rdm1/compute_rdm2")
    lowered = _lowered(state, 1)
    pi_matrix = lowered.conj() @ lowered.T
    occupations = basis.occupations()
    probabilities = state.probabilities()
    d_matrix = occupations.T @ (probabilities[:, None] * occupations)
    return DociBlocks(pi_matrix, d_matrix.astype(complex))


def extract_rdm(kind: Union[RdmKind, str], state: StateVector) -> Union[Rdm1, Rdm2, DociBlocks]:
    kind = RdmKind(kind)
    if kind is RdmKind.RDM1:
        return compute_rdm1(state)
    if kind is RdmKind.RDM2:
        return compute_rdm2(state)
    return compute_doci_blocks(state)


# ── Metric and noise ─────────────────────────────────────────────────────

def hs_distance(a: Payload, b: Payload) -> float:
    """Squared Frobenius distance summed over all blocks of two same-shaped payloads."""
    arrays_a, arrays_b = a.arrays, b.arrays
    shapes_a = tuple(x.shape for x in arrays_a)
    shapes_b = tuple(x.shape for x in arrays_b)
    if shapes_a != shapes_b:
        raise DomainError(f"payload shapes differ: {shapes_a} vs {shapes_b}")
    return float(sum(np.sum(np.abs(x - y) ** 2) for x, y in zip(arrays_a, arrays_b)))


def add_noise(exact: RdmTarget, epsilon: float, seed: int, antithetic: bool = False) -> RdmTarget:
    """exact + eps*R with R uniform in [-1, 1] and symmetrized as (R + R^T)/2.

    Args:
        exact: target to perturb
        epsilon: noise strength, must be non-negative
        seed: seed of the generator that draws R
        antithetic: subtract the same eps*R instead of adding it

    Returns:
        New RdmTarget carrying the noise strength in its metadata.
    """
    epsilon = float(epsilon)
    if not np.isfinite(epsilon) or epsilon < 0:
        raise DomainError(f"noise strength must be a finite non-negative number, got {epsilon}")
    rng = np.random.default_rng(seed)
    sign = -1.0 if antithetic else 1.0
    noisy = []
    for array in exact.arrays:
        # 2-RDM noise lives on the composite matrix
        flat = array.reshape(array.shape[0] ** (array.ndim // 2), -1)
        draw = rng.uniform(-1.0, 1.0, size=flat.shape)
        draw = 0.5 * (draw + draw.T)
        noisy.append((flat + sign * epsilon * draw).reshape(array.shape))
    tag = f"noise eps={epsilon:g} seed={seed}{' antithetic' if antithetic else ''}"
    provenance = f"{exact.provenance}; {tag}" if exact.provenance else tag
    return RdmTarget(exact.kind, tuple(noisy), exact.num_modes, exact.particle_count,
                     provenance=provenance, noise_epsilon=epsilon, system=exact.system)


# ── NREP-TARGET v1 ───────────────────────────────────────────────────────

def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_target(target: RdmTarget, path: Union[str, Path]) -> None:
    """Write `target` in the NREP-TARGET v1 text format; zero elements are omitted."""
    lines = [
        TARGET_MAGIC,
        f"kind {target.kind.value} modes {target.num_modes} particles {target.particle_count}",
    ]
    if target.provenance:
        lines.append("provenance " + " ".join(target.provenance.split()))
    if target.system:
        lines.append("system " + " ".join(target.system.split()))
    if target.noise_epsilon:
        lines.append(f"noise {_fmt(target.noise_epsilon)}")

    tags = ("PI", "D") if target.kind is RdmKind.DOCI else ("",)
    for tag, array in zip(tags, target.arrays):
        prefix = f"{tag} " if tag else ""
        for index in np.argwhere(array != 0):
            value = array[tuple(index)]
            indices = " ".join(str(i) for i in index)
            lines.append(f"{prefix}{indices} {_fmt(value.real)} {_fmt(value.imag)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_kind_line(path, line: str) -> Tuple[RdmKind, int, int]:
    tokens = line.split()
    if len(tokens) != 6 or tokens[0] != "kind" or tokens[2] != "modes" or tokens[4] != "particles":
        raise ParseError(path, 2, "expected 'kind <rdm1|rdm2|doci> modes <m> particles <n>'")
    try:
        kind = RdmKind(tokens[1])
    except ValueError:
        raise ParseError(path, 2, f"unknown target kind '{tokens[1]}'") from None
    try:
        num_modes, particles = int(tokens[3]), int(tokens[5])
    except ValueError:
        raise ParseError(path, 2, "modes and particles must be integers") from None
    if num_modes < 1 or not 0 <= particles <= num_modes:
        raise ParseError(path, 2, f"inconsistent sizes: modes {num_modes}, particles {particles}")
    return kind, num_modes, particles


def read_target(path: Union[str, Path]) -> RdmTarget:
    """Parse an NREP-TARGET v1 file. Every malformed line raises ParseError with its line number."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(path, 1, "empty target file")
    if lines[0].strip() != TARGET_MAGIC:
        raise ParseError(path, 1, f"expected header '{TARGET_MAGIC}'")
    if len(lines) < 2:
        raise ParseError(path, 2, "missing 'kind ... modes ... particles ...' line")
    kind, num_modes, particles = _parse_kind_line(path, lines[1])

    metadata: Dict[str, str] = {}
    metadata_line: Dict[str, int] = {}
    arrays = [np.zeros(shape, dtype=complex) for shape in _expected_shapes(kind, num_modes)]
    rank = len(arrays[0].shape)
    seen = set()
    in_body = False
    for line_no, raw in enumerate(lines[2:], start=3):
        line = raw.strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if head in _METADATA_KEYS:
            if in_body:
                raise ParseError(path, line_no, f"'{head}' must precede the matrix elements")
            if head in metadata:
                raise ParseError(path, line_no, f"duplicate '{head}' line")
            metadata[head] = rest.strip()
            metadata_line[head] = line_no
            continue
        in_body = True

        fields = line.split()
        block = 0
        if kind is RdmKind.DOCI:
            if fields[0] not in ("PI", "D"):
                raise ParseError(path, line_no, "doci elements start with 'PI' or 'D'")
            block = 0 if fields[0] == "PI" else 1
            fields = fields[1:]
        if len(fields) != rank + 2:
            raise ParseError(path, line_no, f"expected {rank} indices and 're im', got {len(fields)} fields")
        try:
            index = tuple(int(f) for f in fields[:rank])
            value = complex(float(fields[rank]), float(fields[rank + 1]))
        except ValueError:
            raise ParseError(path, line_no, "indices must be integers and values real numbers") from None
        if any(not 0 <= i < num_modes for i in index):
            raise ParseError(path, line_no, f"index {index} out of range for {num_modes} modes")
        if not np.isfinite(value):
            raise ParseError(path, line_no, "non-finite matrix element")
        if (block, index) in seen:
            raise ParseError(path, line_no, f"duplicate element {index}")
        seen.add((block, index))
        arrays[block][index] = value

    noise = 0.0
    if "noise" in metadata:
        try:
            noise = float(metadata["noise"])
        except ValueError:
            raise ParseError(path, metadata_line["noise"], f"bad noise value '{metadata['noise']}'") from None
    target = RdmTarget(kind, tuple(arrays), num_modes, particles,
                       provenance=metadata.get("provenance", ""), noise_epsilon=noise,
                       system=metadata.get("system", ""))
    logger.debug(f"Read {kind.value} target ({len(seen)} elements) from {path}")
    return target


# ── Diagnostics ──────────────────────────────────────────────────────────

def target_diagnostics(target: RdmTarget) -> Dict[str, object]:
    """Shape, Hermiticity, trace and spectrum figures for a target, as plain Python values."""
    n, m = target.particle_count, target.num_modes
    if target.kind is RdmKind.RDM1:
        blocks: List[np.ndarray] = [target.arrays[0]]
        trace = np.trace(target.arrays[0])
        expected_trace = float(n)
    elif target.kind is RdmKind.RDM2:
        blocks = [target.arrays[0].reshape(m * m, m * m)]
        trace = np.trace(blocks[0])
        expected_trace = float(n * (n - 1))
    else:
        blocks = list(target.arrays)
        trace = np.trace(target.arrays[0])
        expected_trace = float(n)

    hermiticity = max(float(np.max(np.abs(b - b.conj().T), initial=0.0)) for b in blocks)
    spectra = [np.linalg.eigvalsh(0.5 * (b + b.conj().T)) for b in blocks]
    report: Dict[str, object] = {
        "kind": target.kind.value,
        "modes": m,
        "particles": n,
        "shapes": [list(a.shape) for a in target.arrays],
        "hermiticity_error": hermiticity,
        "trace": float(trace.real),
        "expected_trace": expected_trace,
        "eigenvalue_min": float(min(s.min() for s in spectra)),
        "eigenvalue_max": float(max(s.max() for s in spectra)),
        "noise_epsilon": target.noise_epsilon,
        "provenance": target.provenance,
    }
    if target.kind is RdmKind.RDM2:
        tensor = target.arrays[0]
        report["antisymmetry_error"] = float(max(
            np.max(np.abs(tensor + tensor.transpose(1, 0, 2, 3))),
            np.max(np.abs(tensor + tensor.transpose(0, 1, 3, 2))),
        ))
    return report
