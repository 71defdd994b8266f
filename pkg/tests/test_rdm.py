from itertools import product

import numpy as np
import pytest

from conftest import dense_ladder, dense_on_basis, random_state
from nrep_adapt.errors import DomainError, ParseError
from nrep_adapt.fock import SpaceKind, StateVector, build_basis
from nrep_adapt.models import (ModelKind, ModelSpec, build_bcs_hamiltonian, build_model, exact_eigenstates,
                               singlet_eigenstates)
from nrep_adapt.rdm import (DociBlocks, Rdm1, RdmKind, RdmTarget, add_noise, compute_doci_blocks, compute_rdm1,
                            compute_rdm2, hs_distance, read_target, target_diagnostics, target_from_rdm,
                            write_target)


def _dense_expectation(matrix, state):
    return np.vdot(state.amplitudes, matrix @ state.amplitudes)


# ── Extraction ──

def test_hartree_fock_rdm1_is_diagonal_projector():
    basis = build_basis(SpaceKind.FERMION, 6, 3)
    rdm = compute_rdm1(StateVector.basis_state(basis, 0b000111))
    assert np.allclose(rdm.matrix, np.diag([1, 1, 1, 0, 0, 0]), atol=1e-14)


def test_rdm1_and_rdm2_match_brute_force():
    m = 6
    basis = build_basis(SpaceKind.FERMION, m, 3)
    state = random_state(basis, seed=21)
    a = [dense_ladder(m, j, False) for j in range(m)]
    ad = [op.T for op in a]
    rdm1 = compute_rdm1(state).matrix
    rdm2 = compute_rdm2(state).tensor
    for i, j in product(range(m), repeat=2):
        expected = _dense_expectation(dense_on_basis(ad[i] @ a[j], basis), state)
        assert abs(rdm1[i, j] - expected) <= 1e-12
    raise_pairs = {(i, j): ad[i] @ ad[j] for i, j in product(range(m), repeat=2)}
    lower_pairs = {(k, l): a[l] @ a[k] for k, l in product(range(m), repeat=2)}
    for (i, j), (k, l) in product(raise_pairs, lower_pairs):
        expected = _dense_expectation(dense_on_basis(raise_pairs[i, j] @ lower_pairs[k, l], basis), state)
        assert abs(rdm2[i, j, k, l] - expected) <= 1e-12


def test_rdm_invariants_on_random_state():
    n = 3
    basis = build_basis(SpaceKind.FERMION, 6, n)
    state = random_state(basis, seed=22)
    rdm1 = compute_rdm1(state)
    rdm2 = compute_rdm2(state)
    tensor = rdm2.tensor

    assert np.max(np.abs(rdm1.matrix - rdm1.matrix.conj().T)) <= 1e-12
    assert np.trace(rdm1.matrix).real == pytest.approx(n, abs=1e-10)
    eigenvalues = np.linalg.eigvalsh(rdm1.matrix)
    assert eigenvalues.min() >= -1e-10 and eigenvalues.max() <= 1 + 1e-10

    assert np.max(np.abs(tensor + tensor.transpose(1, 0, 2, 3))) <= 1e-12
    assert np.max(np.abs(tensor + tensor.transpose(0, 1, 3, 2))) <= 1e-12
    assert np.max(np.abs(rdm2.composite - rdm2.composite.conj().T)) <= 1e-12
    assert np.trace(rdm2.composite).real == pytest.approx(n * (n - 1), abs=1e-9)
    contraction = np.einsum("ijkj->ik", tensor)
    assert np.max(np.abs(contraction - (n - 1) * rdm1.matrix)) <= 1e-9


def test_rdm2_of_single_determinant():
    basis = build_basis(SpaceKind.FERMION, 4, 2)
    tensor = compute_rdm2(StateVector.basis_state(basis, 0b0011)).tensor
    expected = np.zeros((4, 4, 4, 4))
    expected[0, 1, 0, 1] = expected[1, 0, 1, 0] = 1
    expected[1, 0, 0, 1] = expected[0, 1, 1, 0] = -1
    assert np.allclose(tensor, expected, atol=1e-14)


def test_doci_blocks_of_pair_determinant():
    basis = build_basis(SpaceKind.HARD_CORE_BOSON, 4, 2)
    blocks = compute_doci_blocks(StateVector.basis_state(basis, 0b0011))
    assert np.allclose(blocks.pi_matrix, np.diag([1, 1, 0, 0]), atol=1e-14)
    assert blocks.d_matrix[0, 1] == pytest.approx(1.0)
    assert np.allclose(np.diag(blocks.d_matrix), [1, 1, 0, 0])


def test_doci_blocks_of_bcs_ground_state_match_oracle():
    basis = build_basis(SpaceKind.HARD_CORE_BOSON, 4, 2)
    _, ground = exact_eigenstates(build_bcs_hamiltonian(4, 1.0, basis), 1)[0]
    blocks = compute_doci_blocks(ground)
    b = [dense_ladder(4, j, False, fermionic=False) for j in range(4)]
    n = [op.T @ op for op in b]
    for i, j in product(range(4), repeat=2):
        pi_expected = _dense_expectation(dense_on_basis(b[i].T @ b[j], basis), ground)
        d_expected = _dense_expectation(dense_on_basis(n[i] @ n[j], basis), ground)
        assert abs(blocks.pi_matrix[i, j] - pi_expected) <= 1e-12
        assert abs(blocks.d_matrix[i, j] - d_expected) <= 1e-12
    assert np.trace(blocks.pi_matrix).real == pytest.approx(2.0, abs=1e-10)
    assert np.allclose(np.diag(blocks.pi_matrix), np.diag(blocks.d_matrix), atol=1e-12)


def test_extraction_domain_errors():
    pairs = build_basis(SpaceKind.HARD_CORE_BOSON, 4, 2)
    fermions = build_basis(SpaceKind.FERMION, 4, 1)
    with pytest.raises(DomainError):
        compute_rdm1(random_state(pairs))
    with pytest.raises(DomainError):
        compute_rdm2(random_state(fermions))
    with pytest.raises(DomainError):
        compute_doci_blocks(random_state(fermions))


# ── Distance and noise ──

def test_hs_distance_basics():
    zero = Rdm1(np.zeros((2, 2)))
    identity = Rdm1(np.eye(2))
    assert hs_distance(zero, identity) == pytest.approx(2.0)
    assert hs_distance(identity, identity) == 0.0
    a = Rdm1(np.array([[0.3, 0.1j], [-0.1j, 0.7]]))
    assert hs_distance(a, identity) == pytest.approx(hs_distance(identity, a))
    assert hs_distance(a, identity) > 0
    blocks = DociBlocks(np.eye(2), np.zeros((2, 2)))
    assert hs_distance(blocks, DociBlocks(np.zeros((2, 2)), np.zeros((2, 2)))) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        hs_distance(zero, Rdm1(np.zeros((3, 3))))
    with pytest.raises(DomainError):
        hs_distance(zero, blocks)


def _hf_target():
    basis = build_basis(SpaceKind.FERMION, 4, 2)
    return target_from_rdm(compute_rdm1(StateVector.basis_state(basis, 0b0011)), 2, provenance="hf")


def test_add_noise_zero_is_identity_and_hermitian():
    exact = _hf_target()
    assert hs_distance(add_noise(exact, 0.0, seed=1), exact) == 0.0
    noisy = add_noise(exact, 0.05, seed=1)
    matrix = noisy.arrays[0]
    assert np.max(np.abs(matrix - matrix.conj().T)) <= 1e-15
    assert noisy.noise_epsilon == 0.05
    assert 0 < hs_distance(noisy, exact) <= 16 * 0.05 ** 2


def test_add_noise_is_seeded():
    zero = RdmTarget(RdmKind.RDM1, (np.zeros((2, 2)),), 2, 1)
    first = add_noise(zero, 1.0, seed=42).arrays[0]
    again = add_noise(zero, 1.0, seed=42).arrays[0]
    other = add_noise(zero, 1.0, seed=43).arrays[0]
    assert np.array_equal(first, again)
    assert not np.array_equal(first, other)
    assert np.all(np.abs(first) <= 1.0)


def test_antithetic_noise_averages_back():
    exact = _hf_target()
    plus = add_noise(exact, 0.1, seed=7).arrays[0]
    minus = add_noise(exact, 0.1, seed=7, antithetic=True).arrays[0]
    assert np.max(np.abs(0.5 * (plus + minus) - exact.arrays[0])) <= 1e-15


def test_add_noise_rejects_negative_strength():
    with pytest.raises(DomainError):
        add_noise(_hf_target(), -0.1, seed=0)


def test_rdm2_noise_is_hermitian_in_composite_view():
    basis = build_basis(SpaceKind.FERMION, 4, 2)
    exact = target_from_rdm(compute_rdm2(random_state(basis, seed=3)), 2)
    composite = add_noise(exact, 0.01, seed=3).arrays[0].reshape(16, 16)
    assert np.max(np.abs(composite - composite.conj().T)) <= 1e-14


# ── Target files ──

def test_target_file_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    raw = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    target = RdmTarget(RdmKind.RDM1, (raw + raw.conj().T,), 4, 2, provenance="random hermitian",
                       noise_epsilon=0.001, system="test system")
    path = tmp_path / "target.txt"
    write_target(target, path)
    loaded = read_target(path)
    assert loaded.kind is RdmKind.RDM1
    assert np.max(np.abs(loaded.arrays[0] - target.arrays[0])) <= 1e-15
    assert loaded.provenance == "random hermitian"
    assert loaded.system == "test system"
    assert loaded.noise_epsilon == 0.001


def test_doci_and_rdm2_targets_round_trip(tmp_path):
    pairs = build_basis(SpaceKind.HARD_CORE_BOSON, 4, 2)
    doci = target_from_rdm(compute_doci_blocks(random_state(pairs, seed=1)), 2)
    fermions = build_basis(SpaceKind.FERMION, 4, 2)
    rdm2 = target_from_rdm(compute_rdm2(random_state(fermions, seed=2)), 2)
    for target in (doci, rdm2):
        path = tmp_path / f"{target.kind.value}.txt"
        write_target(target, path)
        assert hs_distance(read_target(path), target) <= 1e-28


@pytest.mark.parametrize("content, line_no", [
    ("", 1),
    ("NREP-TARGET v2\nkind rdm1 modes 2 particles 1\n", 1),
    ("NREP-TARGET v1\nkind rdm3 modes 2 particles 1\n", 2),
    ("NREP-TARGET v1\nkind rdm2 modes 2 particles 2\n0 1 0.5 0\n", 3),
    ("NREP-TARGET v1\nkind rdm1 modes 2 particles 1\n0 2 0.5 0\n", 3),
    ("NREP-TARGET v1\nkind rdm1 modes 2 particles 1\n0 0 nan 0\n", 3),
    ("NREP-TARGET v1\nkind rdm1 modes 2 particles 1\n0 0 1 0\n0 0 1 0\n", 4),
    ("NREP-TARGET v1\nkind doci modes 2 particles 1\nX 0 0 1 0\n", 3),
])
def test_malformed_target_files(tmp_path, content, line_no):
    path = tmp_path / "bad.txt"
    path.write_text(content)
    with pytest.raises(ParseError) as excinfo:
        read_target(path)
    assert excinfo.value.line_no == line_no


def test_target_diagnostics():
    report = target_diagnostics(_hf_target())
    assert report["trace"] == pytest.approx(2.0)
    assert report["expected_trace"] == 2.0
    assert report["hermiticity_error"] == 0.0
    assert report["eigenvalue_min"] == pytest.approx(0.0, abs=1e-12)
    assert report["eigenvalue_max"] == pytest.approx(1.0)


# ── Linear H4 ──

def test_h4_ground_state_spectra(h4_fcidump):
    system = build_model(ModelSpec(ModelKind.MOLECULAR, fcidump=h4_fcidump))
    _, ground = singlet_eigenstates(system.hamiltonian, 1)[0]
    occupations = np.linalg.eigvalsh(compute_rdm1(ground).matrix)
    assert occupations.min() == pytest.approx(0.0048, abs=5e-4)
    assert occupations.max() == pytest.approx(0.9936, abs=5e-4)
    pair_eigenvalues = np.linalg.eigvalsh(compute_rdm2(ground).composite)
    assert pair_eigenvalues.max() == pytest.approx(2.0148, abs=5e-4)
    assert pair_eigenvalues.min() >= -1e-10


def test_h4_first_excited_singlet_spectrum(h4_fcidump):
    system = build_model(ModelSpec(ModelKind.MOLECULAR, fcidump=h4_fcidump))
    _, excited = singlet_eigenstates(system.hamiltonian, 2)[1]
    occupations = np.linalg.eigvalsh(compute_rdm1(excited).matrix)
    assert occupations.min() == pytest.approx(0.0015, abs=5e-4)
    assert occupations.max() == pytest.approx(0.9985, abs=5e-4)
