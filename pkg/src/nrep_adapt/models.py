"""
Benchmark systems: molecular Hamiltonians from FCIDUMP integrals, the reduced BCS
pairing model and the open XXZ chain in hard-core-boson form.

Also hosts the dense eigen-solvers used to build exact targets and the reference
states the annealer starts from.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from itertools import product
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from scipy import linalg

from .errors import DomainError, ParseError
from .fock import (FockBasis, SparseOperator, SpaceKind, StateVector, Term,
                   build_basis, expectation, number_operator)

DATA_DIR = Path(__file__).parent / "data"
H4_FCIDUMP = DATA_DIR / "h4_sto3g_0.75.fcidump"

HERMITICITY_TOLERANCE = 1e-10
SINGLET_TOLERANCE = 1e-6
INTEGRAL_CUTOFF = 1e-14


# ── FCIDUMP ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class MolecularIntegrals:
    """Spatial-orbital integrals in Hartree; `two_body` is (pq|rs) in chemists' notation."""

    num_orbitals: int
    num_electrons: int
    ms2: int
    core_energy: float
    one_body: np.ndarray
    two_body: np.ndarray
    source: str = ""

    @property
    def num_spin_orbitals(self) -> int:
        return 2 * self.num_orbitals


_NOTATIONS = ("CHEMIST", "PHYSICIST")
_NAMELIST_FIELD = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([^=]*?)(?=,?\s*[A-Za-z_][A-Za-z0-9_]*\s*=|$)")


def _parse_namelist(path, text: str) -> dict:
    body = re.sub(r"^\s*&\s*FCI", "", text, flags=re.IGNORECASE).strip()
    fields = {}
    for key, value in _NAMELIST_FIELD.findall(body):
        fields[key.upper()] = value.strip().rstrip(",").strip()
    for required in ("NORB", "NELEC"):
        if required not in fields:
            raise ParseError(path, 1, f"namelist lacks {required}")
    return fields


def load_fcidump(path: Union[str, Path]) -> MolecularIntegrals:
    """Read a FCIDUMP file (1-based indices, `value 0 0 0 0` core record).

    Two-body records are chemists' (pq|rs) unless the namelist sets NOTATION='PHYSICIST',
    in which case they are read as <pq|rs> and stored as (pr|qs).

    Args:
        path: location of the FCIDUMP file

    Returns:
        MolecularIntegrals with every permutation-equivalent two-body slot filled.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].strip().upper().startswith("&FCI"):
        raise ParseError(path, 1, "expected a '&FCI' namelist header")

    header_lines = []
    body_start = None
    for line_no, line in enumerate(lines, start=1):
        stripped = line.strip()
        end = re.search(r"&END|/\s*$", stripped, flags=re.IGNORECASE)
        if end:
            header_lines.append(stripped[:end.start()])
            body_start = line_no
            break
        header_lines.append(stripped)
    if body_start is None:
        raise ParseError(path, len(lines), "namelist is not terminated by '&END' or '/'")

    fields = _parse_namelist(path, " ".join(header_lines))
    try:
        norb = int(fields["NORB"])
        nelec = int(fields["NELEC"])
        ms2 = int(fields.get("MS2", "0") or 0)
    except ValueError:
        raise ParseError(path, 1, "NORB, NELEC and MS2 must be integers") from None
    if norb < 1 or not 0 <= nelec <= 2 * norb:
        raise ParseError(path, 1, f"inconsistent header: NORB={norb}, NELEC={nelec}")
    if fields.get("IUHF", "0").strip() not in ("", "0", ".FALSE.", "F"):
        raise ParseError(path, 1, f"IUHF={fields['IUHF']}: unrestricted integral files are not supported")
    notation = fields.get("NOTATION", "CHEMIST").strip("'\" ").upper()
    if notation not in _NOTATIONS:
        raise ParseError(path, 1, f"NOTATION must be CHEMIST or PHYSICIST, got '{fields['NOTATION']}'")
    physicist = notation == "PHYSICIST"

    one_body = np.zeros((norb, norb))
    two_body = np.zeros((norb, norb, norb, norb))
    core_energy: Optional[float] = None
    for line_no, line in enumerate(lines[body_start:], start=body_start + 1):
        fields_ = line.split()
        if not fields_:
            continue
        if len(fields_) != 5:
            raise ParseError(path, line_no, "expected 'value i j k l'")
        try:
            value = float(fields_[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(f) for f in fields_[1:])
        except ValueError:
            raise ParseError(path, line_no, "malformed integral record") from None
        if any(not 0 <= idx <= norb for idx in (i, j, k, l)):
            raise ParseError(path, line_no, f"orbital index out of range 0..{norb}")
        if i and j and k and l:
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            if physicist:
                q, r = r, q  # <pq|rs> = (pr|qs)
            for a, b, c, d in ((p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r)):
                two_body[a, b, c, d] = value
                two_body[c, d, a, b] = value
        elif i and j and not k and not l:
            one_body[i - 1, j - 1] = value
            one_body[j - 1, i - 1] = value
        elif not (i or j or k or l):
            core_energy = value
        elif i and not (j or k or l):
            continue  # orbital energy, not needed
        else:
            raise ParseError(path, line_no, f"unrecognised index pattern {i} {j} {k} {l}")

    if core_energy is None:
        raise ParseError(path, len(lines), "missing core-energy record 'value 0 0 0 0'")
    logger.debug(f"Loaded FCIDUMP {path.name}: NORB={norb}, NELEC={nelec}, MS2={ms2}")
    return MolecularIntegrals(norb, nelec, ms2, core_energy, one_body, two_body, source=str(path))


def _spin_orbital(orbital: int, spin: int) -> int:
    return 2 * orbital + spin


def build_molecular_hamiltonian(ints: MolecularIntegrals, basis: FockBasis,
                                include_core: bool = True) -> SparseOperator:
    """H = sum h_pq a+_p a_q + 1/2 sum (pq|rs) a+_p a+_r a_s a_q over spin, plus the core energy."""
    if not basis.is_fermionic or basis.num_modes != ints.num_spin_orbitals:
        raise DomainError(f"molecular Hamiltonian needs {ints.num_spin_orbitals} fermionic modes, got {basis!r}")
    if basis.particle_count not in (None, ints.num_electrons):
        raise DomainError(f"basis holds {basis.particle_count} particles, integrals declare NELEC={ints.num_electrons}")

    K = ints.num_orbitals
    terms: List[Term] = []
    for p, q in product(range(K), repeat=2):
        h = ints.one_body[p, q]
        if abs(h) < INTEGRAL_CUTOFF:
            continue
        for sigma in (0, 1):
            terms.append((h, ((_spin_orbital(p, sigma), True), (_spin_orbital(q, sigma), False))))
    for p, q, r, s in product(range(K), repeat=4):
        v = ints.two_body[p, q, r, s]
        if abs(v) < INTEGRAL_CUTOFF:
            continue
        for sigma, tau in product((0, 1), repeat=2):
            ops = (
                (_spin_orbital(p, sigma), True),
                (_spin_orbital(r, tau), True),
                (_spin_orbital(s, tau), False),
                (_spin_orbital(q, sigma), False),
            )
            terms.append((0.5 * v, ops))

    hamiltonian = SparseOperator.from_terms(basis, terms)
    if include_core and ints.core_energy:
        hamiltonian = hamiltonian + ints.core_energy * SparseOperator.identity(basis)
    logger.debug(f"Molecular Hamiltonian on {basis!r}: nnz={hamiltonian.nnz}")
    return hamiltonian


def spin_squared_operator(basis: FockBasis) -> SparseOperator:
    """S^2 = S-S+ + Sz + Sz^2 on interleaved spin-orbitals."""
    if not basis.is_fermionic or basis.num_modes % 2:
        raise DomainError(f"S^2 needs an even number of fermionic spin-orbitals, got {basis!r}")
    K = basis.num_modes // 2
    raise_terms = [(1.0, ((_spin_orbital(p, 0), True), (_spin_orbital(p, 1), False))) for p in range(K)]
    lower_terms = [(1.0, ((_spin_orbital(p, 1), True), (_spin_orbital(p, 0), False))) for p in range(K)]
    s_plus = SparseOperator.from_terms(basis, raise_terms)
    s_minus = SparseOperator.from_terms(basis, lower_terms)
    alpha = sum((number_operator(basis, _spin_orbital(p, 0)) for p in range(K)), SparseOperator.zero(basis))
    beta = sum((number_operator(basis, _spin_orbital(p, 1)) for p in range(K)), SparseOperator.zero(basis))
    s_z = 0.5 * (alpha - beta)
    return s_minus @ s_plus + s_z + s_z @ s_z


# ── Pairing and spin-chain models ────────────────────────────────────────

def level_energies(levels: int, scaled: bool = True) -> np.ndarray:
    """Single-particle energies eps_i = i/K (scaled) or eps_i = i, for i = 1..K."""
    energies = np.arange(1, levels + 1, dtype=float)
    return energies / levels if scaled else energies


def _check_pair_basis(basis: FockBasis, levels: int, label: str) -> None:
    if basis.space_kind is not SpaceKind.HARD_CORE_BOSON or basis.num_modes != levels:
        raise DomainError(f"{label} needs a hard-core-boson basis with {levels} levels, got {basis!r}")


def build_bcs_hamiltonian(levels: int, coupling: float, basis: FockBasis,
                          energies: Optional[Sequence[float]] = None) -> SparseOperator:
    """Reduced BCS model H = sum eps_i n_i - G sum_ij b+_i b_j in pair space (i = j included)."""
    if levels < 2 or levels % 2:
        raise DomainError(f"half filling needs an even number of levels >= 2, got K={levels}")
    _check_pair_basis(basis, levels, "the BCS Hamiltonian")
    if basis.particle_count != levels // 2:
        raise DomainError(f"BCS runs at half filling M={levels // 2}, basis holds {basis.particle_counts}")
    eps = level_energies(levels) if energies is None else np.asarray(energies, dtype=float)
    if eps.shape != (levels,):
        raise DomainError(f"expected {levels} level energies, got {eps.shape}")

    terms: List[Term] = [(eps[i], ((i, True), (i, False))) for i in range(levels)]
    terms += [(-coupling, ((i, True), (j, False))) for i, j in product(range(levels), repeat=2)]
    hamiltonian = SparseOperator.from_terms(basis, terms)
    logger.debug(f"BCS Hamiltonian K={levels}, G={coupling}: nnz={hamiltonian.nnz}")
    return hamiltonian


def chemical_potential(levels: int, scaled: bool = True) -> float:
    if levels < 2 or levels % 2:
        raise DomainError(f"K must be even and >= 2, got {levels}")
    eps = level_energies(levels, scaled)
    half = levels // 2
    return float(0.5 * (eps[half - 1] + eps[half]))


def bcs_critical_g(levels: int, scaled: bool = True) -> float:
    """Critical pairing strength G_c = [sum_i 1/|eps_i - mu|]^-1 from the zero-gap limit of the gap equation."""
    mu = chemical_potential(levels, scaled)
    eps = level_energies(levels, scaled)
    return float(1.0 / np.sum(1.0 / np.abs(eps - mu)))


def build_xxz_hamiltonian(sites: int, anisotropy: float, basis: FockBasis) -> SparseOperator:
    """Open XXZ chain H = sum 1/2 (b+_i b_i+1 + h.c.) + Delta (n_i - 1/2)(n_i+1 - 1/2)."""
    if sites < 2:
        raise DomainError(f"the XXZ chain needs at least two sites, got K={sites}")
    _check_pair_basis(basis, sites, "the XXZ Hamiltonian")
    terms: List[Term] = []
    for i in range(sites - 1):
        j = i + 1
        terms += [
            (0.5, ((i, True), (j, False))),
            (0.5, ((j, True), (i, False))),
            (anisotropy, ((i, True), (i, False), (j, True), (j, False))),
            (-0.5 * anisotropy, ((i, True), (i, False))),
            (-0.5 * anisotropy, ((j, True), (j, False))),
        ]
    hamiltonian = SparseOperator.from_terms(basis, terms)
    hamiltonian = hamiltonian + (0.25 * anisotropy * (sites - 1)) * SparseOperator.identity(basis)
    logger.debug(f"XXZ Hamiltonian K={sites}, Delta={anisotropy}: nnz={hamiltonian.nnz}")
    return hamiltonian


# ── Exact diagonalization ────────────────────────────────────────────────

def _fix_phase(vector: np.ndarray) -> np.ndarray:
    pivot = vector[np.argmax(np.abs(vector))]
    return vector * (abs(pivot) / pivot) if pivot != 0 else vector


def exact_eigenstates(hamiltonian: SparseOperator, count: int) -> List[Tuple[float, StateVector]]:
    """Lowest `count` eigenpairs by dense diagonalization, ascending, phase-fixed."""
    dim = hamiltonian.basis.dim
    if not 1 <= count <= dim:
        raise DomainError(f"requested {count} eigenstates of a {dim}-dimensional operator")
    error = hamiltonian.hermiticity_error()
    if error > HERMITICITY_TOLERANCE:
        raise DomainError(f"operator is not Hermitian (max |H - H^dag| = {error:.3e})")
    dense = hamiltonian.to_dense()
    dense = 0.5 * (dense + dense.conj().T)
    values, vectors = linalg.eigh(dense, subset_by_index=[0, count - 1])
    return [(float(values[n]), StateVector(hamiltonian.basis, _fix_phase(vectors[:, n])))
            for n in range(count)]


def singlet_eigenstates(hamiltonian: SparseOperator, count: int) -> List[Tuple[float, StateVector]]:
    """Lowest `count` eigenpairs with <S^2> below the singlet tolerance."""
    s_squared = spin_squared_operator(hamiltonian.basis)
    singlets = []
    for energy, state in exact_eigenstates(hamiltonian, hamiltonian.basis.dim):
        if abs(expectation(s_squared, state)) < SINGLET_TOLERANCE:
            singlets.append((energy, state))
            if len(singlets) == count:
                return singlets
    raise DomainError(f"only {len(singlets)} singlet eigenstates exist, {count} requested")


# ── Systems and reference states ─────────────────────────────────────────

class ModelKind(str, Enum):
    MOLECULAR = "molecular"
    BCS = "bcs"
    XXZ = "xxz"


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    levels: int = 4
    coupling: float = 1.0
    fcidump: Optional[Path] = None
    scaled_energies: bool = True

    def describe(self) -> str:
        if self.kind is ModelKind.MOLECULAR:
            return f"molecular {self.fcidump}"
        symbol = "G" if self.kind is ModelKind.BCS else "Delta"
        return f"{self.kind.value} K={self.levels} {symbol}={self.coupling:g}"


@dataclass(frozen=True, eq=False)
class ModelSystem:
    spec: ModelSpec
    basis: FockBasis
    hamiltonian: SparseOperator
    integrals: Optional[MolecularIntegrals] = None

    @property
    def is_molecular(self) -> bool:
        return self.spec.kind is ModelKind.MOLECULAR


def build_model(spec: ModelSpec) -> ModelSystem:
    """Basis and Hamiltonian for `spec`; pairing and spin models live in the M = K/2 pair sector."""
    if spec.kind is ModelKind.MOLECULAR:
        if spec.fcidump is None:
            raise DomainError("a molecular system needs an FCIDUMP path")
        ints = load_fcidump(spec.fcidump)
        basis = build_basis(SpaceKind.FERMION, ints.num_spin_orbitals, ints.num_electrons)
        return ModelSystem(spec, basis, build_molecular_hamiltonian(ints, basis), ints)

    if spec.levels < 2 or spec.levels % 2:
        raise DomainError(f"half filling needs an even number of levels >= 2, got K={spec.levels}")
    basis = build_basis(SpaceKind.HARD_CORE_BOSON, spec.levels, spec.levels // 2)
    if spec.kind is ModelKind.BCS:
        energies = level_energies(spec.levels, spec.scaled_energies)
        hamiltonian = build_bcs_hamiltonian(spec.levels, spec.coupling, basis, energies)
    else:
        hamiltonian = build_xxz_hamiltonian(spec.levels, spec.coupling, basis)
    return ModelSystem(spec, basis, hamiltonian)


def neel_relative_sign(sites: int) -> int:
    """Relative sign of the two Neel strings in the large-Delta ground state of the open chain.

    The strings couple at order K/2 in the hopping through K/2 - 1 energy denominators, so the
    effective tunneling amplitude has sign (-1)^(K/2 - 1); a negative amplitude favours the
    symmetric combination.
    """
    return 1 if (sites // 2) % 2 == 0 else -1


def reference_state(spec: ModelSpec, basis: FockBasis) -> StateVector:
    """Independent-particle starting point: Hartree-Fock, the G = 0 pairing ground state or the Neel state."""
    count = basis.particle_count
    if spec.kind is ModelKind.MOLECULAR:
        if not basis.is_fermionic or count is None:
            raise DomainError(f"Hartree-Fock reference needs a single fermionic sector, got {basis!r}")
        return StateVector.basis_state(basis, (1 << count) - 1)

    if basis.space_kind is not SpaceKind.HARD_CORE_BOSON or basis.num_modes != spec.levels \
            or count != spec.levels // 2:
        raise DomainError(f"{spec.describe()} needs the half-filled pair sector, got {basis!r}")
    if spec.kind is ModelKind.BCS:
        return StateVector.basis_state(basis, (1 << count) - 1)

    even_sites = sum(1 << i for i in range(0, spec.levels, 2))
    odd_sites = sum(1 << i for i in range(1, spec.levels, 2))
    return StateVector.from_bitstrings(basis, {even_sites: 1.0, odd_sites: float(neel_relative_sign(spec.levels))})
