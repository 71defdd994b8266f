import math

import numpy as np
import pytest

from conftest import random_state
from nrep_adapt.annealer import (AnnealingProblem, AnnealSchedule, TerminationReason, accept, propose, run,
                                 state_distance, step_distance)
from nrep_adapt.ansatz import apply_exponential, evolve_from_scratch
from nrep_adapt.errors import AnnealingAborted, ConfigError, ContractViolation, DomainError
from nrep_adapt.fock import SpaceKind, build_basis
from nrep_adapt.models import (ModelKind, ModelSpec, build_model, exact_eigenstates, reference_state,
                               singlet_eigenstates)
from nrep_adapt.pool import build_pair_pool, build_pool
from nrep_adapt.rdm import RdmKind, RdmTarget, add_noise, extract_rdm, hs_distance, target_from_rdm

BCS = ModelSpec(ModelKind.BCS, levels=4, coupling=1.0)
XXZ = ModelSpec(ModelKind.XXZ, levels=4, coupling=2.0)


def _problem(spec, kind=RdmKind.DOCI, target_state=None):
    """Reference start, default pool; the target defaults to the exact ground state."""
    system = build_model(spec)
    initial = reference_state(spec, system.basis)
    if target_state is None:
        target_state = exact_eigenstates(system.hamiltonian, 1)[0][1]
    target = target_from_rdm(extract_rdm(kind, target_state), system.basis.particle_count)
    return AnnealingProblem(build_pool(system.basis), initial, target)


def _self_problem(spec, kind=RdmKind.DOCI):
    system = build_model(spec)
    return _problem(spec, kind, target_state=reference_state(spec, system.basis))


# ── Schedule ──

@pytest.mark.parametrize("override, key", [
    ({"t_decay": 1.0}, "t_decay"),
    ({"t_initial": -0.1}, "t_initial"),
    ({"theta_growth": 0.9}, "theta_growth"),
    ({"theta_max_initial": 3.0}, "theta_max_initial"),
    ({"stall_window": 0}, "stall_window"),
])
def test_schedule_validation_names_the_key(override, key):
    with pytest.raises(ConfigError) as excinfo:
        AnnealSchedule(**override)
    assert excinfo.value.key == key


def test_schedule_defaults():
    schedule = AnnealSchedule()
    assert (schedule.t_decay, schedule.theta_max_initial) == (0.995, 0.5)
    assert (schedule.theta_decay, schedule.theta_growth) == (0.999, 1.0025)


# ── Moves ──

def test_propose_from_single_operator_pool():
    pool = build_pair_pool(build_basis(SpaceKind.HARD_CORE_BOSON, 2, 1))
    assert len(pool) == 1
    rng = np.random.default_rng(0)
    for _ in range(100):
        index, theta = propose(rng, pool, 0.25)
        assert index == 0 and abs(theta) <= 0.25


def test_propose_statistics():
    pool = build_pool(build_basis(SpaceKind.HARD_CORE_BOSON, 4, 2))
    rng = np.random.default_rng(1)
    theta_max = 0.3
    draws = [propose(rng, pool, theta_max) for _ in range(100_000)]
    indices = np.array([d[0] for d in draws])
    thetas = np.array([d[1] for d in draws])
    assert np.all(np.abs(thetas) <= theta_max)
    sigma = theta_max / math.sqrt(3) / math.sqrt(len(thetas))
    assert abs(thetas.mean()) <= 3 * sigma
    assert set(indices.tolist()) == set(range(len(pool)))


def test_propose_is_deterministic():
    pool = build_pool(build_basis(SpaceKind.FERMION, 4, 2))
    first = [propose(np.random.default_rng(5), pool, 0.5) for _ in range(3)]
    rng_a, rng_b = np.random.default_rng(9), np.random.default_rng(9)
    assert [propose(rng_a, pool, 0.5) for _ in range(50)] == [propose(rng_b, pool, 0.5) for _ in range(50)]
    assert first[0] == first[1] == first[2]
    with pytest.raises(DomainError):
        propose(rng_a, pool, 0.0)


def test_accept_rules():
    rng = np.random.default_rng(0)
    assert accept(-0.1, 0.0, rng)
    assert accept(0.0, 0.0, rng)
    assert not accept(1e-12, 0.0, rng)
    assert accept(-1.0, 1.0, rng)
    with pytest.raises(DomainError):
        accept(0.1, -1.0, rng)


def test_accept_consumes_one_draw():
    rng_a, rng_b = np.random.default_rng(3), np.random.default_rng(3)
    accept(-1.0, 0.5, rng_a)
    rng_b.random()
    assert rng_a.random() == rng_b.random()


def test_acceptance_rate_matches_boltzmann_factor():
    rng = np.random.default_rng(11)
    rate = np.mean([accept(0.05, 0.05, rng) for _ in range(100_000)])
    assert rate == pytest.approx(math.exp(-1.0), abs=0.01)


def test_step_distance():
    problem = _problem(BCS)
    state = problem.initial_state
    assert step_distance(state, (0, 0.0), problem.target, problem.pool) == state_distance(state, problem.target)

    evolved = apply_exponential(problem.pool.operators[2], 0.4, state)
    own = target_from_rdm(extract_rdm(RdmKind.DOCI, evolved), 2)
    assert step_distance(state, (2, 0.4), own, problem.pool) <= 1e-14
    assert step_distance(state, (2, 0.4), problem.target, problem.pool) == pytest.approx(
        state_distance(evolved, problem.target), abs=1e-15)


def test_problem_checks_operands():
    problem = _problem(BCS)
    other = random_state(build_basis(SpaceKind.HARD_CORE_BOSON, 4, 1))
    with pytest.raises(ContractViolation):
        AnnealingProblem(problem.pool, other, problem.target)
    wide = _problem(ModelSpec(ModelKind.BCS, levels=6, coupling=1.0))
    with pytest.raises(DomainError):
        AnnealingProblem(problem.pool, problem.initial_state, wide.target)
    wrong_count = target_from_rdm(problem.target.as_payload(), 3)
    with pytest.raises(DomainError):
        AnnealingProblem(problem.pool, problem.initial_state, wrong_count)


# ── Runs ──

@pytest.mark.parametrize("spec", [BCS, XXZ], ids=["bcs", "xxz"])
def test_self_target_terminates_immediately(spec):
    ansatz, trace = run(_self_problem(spec), AnnealSchedule(seed=1))
    assert trace.termination_reason is TerminationReason.CONVERGED
    assert trace.final_distance <= 1e-12
    assert len(ansatz) == 0 and trace.total_proposals == 0


def test_h4_self_target(h4_fcidump):
    spec = ModelSpec(ModelKind.MOLECULAR, fcidump=h4_fcidump)
    ansatz, trace = run(_self_problem(spec, RdmKind.RDM1), AnnealSchedule(seed=1))
    assert trace.termination_reason is TerminationReason.CONVERGED
    assert trace.final_distance <= 1e-12


def test_run_accounting():
    problem = _problem(BCS)
    schedule = AnnealSchedule(seed=3, max_iterations=400, converged_distance=0.0)
    ansatz, trace = run(problem, schedule)
    assert trace.termination_reason is TerminationReason.MAX_ITERATIONS
    assert trace.total_proposals == len(trace.records) == 400
    assert [r.iteration for r in trace.records] == list(range(400))
    assert trace.accepted_count == len(ansatz) == trace.ansatz_length
    assert trace.accepted_count > 0
    assert trace.records[-1].current_distance == trace.final_distance
    assert trace.best_distance <= min(trace.final_distance, trace.initial_distance)
    replayed = state_distance(evolve_from_scratch(ansatz), problem.target)
    assert abs(replayed - trace.final_distance) <= 1e-12


def test_temperature_and_amplitude_schedules():
    schedule = AnnealSchedule(seed=4, max_iterations=300, converged_distance=0.0, theta_max_initial=1.9)
    _, trace = run(_problem(BCS), schedule)
    for n, record in enumerate(trace.records):
        assert record.temperature == pytest.approx(schedule.t_initial * schedule.t_decay ** n, rel=1e-12)
        assert schedule.theta_min <= record.theta_max <= schedule.theta_cap
        assert abs(record.proposed_theta) <= record.theta_max
    for prev, cur in zip(trace.records, trace.records[1:]):
        if prev.accepted:
            expected = min(prev.theta_max * schedule.theta_growth, schedule.theta_cap)
        else:
            expected = max(prev.theta_max * schedule.theta_decay, schedule.theta_min)
        assert cur.theta_max == pytest.approx(expected, rel=1e-14)


def test_zero_temperature_never_goes_uphill():
    problem = _problem(XXZ)
    _, trace = run(problem, AnnealSchedule(seed=2, t_initial=0.0, max_iterations=500, converged_distance=0.0))
    previous = trace.initial_distance
    for record in trace.records:
        assert record.current_distance <= previous
        assert record.accepted == (record.candidate_distance <= previous)
        previous = record.current_distance


def test_distance_rises_only_on_accepted_moves():
    problem = _problem(BCS)
    _, trace = run(problem, AnnealSchedule(seed=6, t_initial=0.1, max_iterations=500, converged_distance=0.0))
    previous = trace.initial_distance
    for record in trace.records:
        if record.current_distance > previous:
            assert record.accepted and record.candidate_distance > previous
        if not record.accepted:
            assert record.current_distance == previous
        previous = record.current_distance


def test_stall_window_ends_run():
    problem = _problem(BCS)
    noisy = add_noise(problem.target, 0.1, seed=42)
    stalled = AnnealingProblem(problem.pool, problem.initial_state, noisy)
    schedule = AnnealSchedule(seed=1, stall_epsilon=10.0, stall_window=20)
    _, trace = run(stalled, schedule)
    assert trace.termination_reason is TerminationReason.STALLED
    assert trace.total_proposals == 20


def test_runs_are_reproducible():
    problem = _problem(BCS)
    schedule = AnnealSchedule(seed=17, max_iterations=200)
    ansatz_a, trace_a = run(problem, schedule)
    ansatz_b, trace_b = run(problem, schedule)
    assert trace_a.records == trace_b.records
    assert ansatz_a.elements == ansatz_b.elements
    assert np.array_equal(ansatz_a.state.amplitudes, ansatz_b.state.amplitudes)


def test_non_finite_target_aborts():
    problem = _problem(BCS)
    broken = RdmTarget(RdmKind.DOCI, tuple(np.full((4, 4), np.nan) for _ in range(2)), 4, 2)
    with pytest.raises(AnnealingAborted) as excinfo:
        run(AnnealingProblem(problem.pool, problem.initial_state, broken), AnnealSchedule())
    assert excinfo.value.trace.termination_reason is TerminationReason.ABORTED
    assert len(excinfo.value.ansatz) == 0


# ── Benchmark runs ──

@pytest.mark.slow
def test_bcs_exact_target_converges():
    problem = _problem(BCS)
    converged = 0
    for seed in range(1, 6):
        _, trace = run(problem, AnnealSchedule(seed=seed, max_iterations=20_000))
        converged += trace.final_distance <= 1e-10
    assert converged >= 4


@pytest.mark.slow
def test_h4_ground_rdm1_target(h4_fcidump):
    problem = _problem(ModelSpec(ModelKind.MOLECULAR, fcidump=h4_fcidump), RdmKind.RDM1)
    converged = 0
    for seed in range(1, 6):
        _, trace = run(problem, AnnealSchedule(seed=seed, max_iterations=10_000))
        converged += trace.final_distance <= 1e-8
    assert converged >= 4


@pytest.mark.slow
def test_h4_excited_rdm1_target(h4_fcidump):
    spec = ModelSpec(ModelKind.MOLECULAR, fcidump=h4_fcidump)
    excited = singlet_eigenstates(build_model(spec).hamiltonian, 2)[1][1]
    problem = _problem(spec, RdmKind.RDM1, target_state=excited)
    converged = 0
    for seed in range(1, 6):
        _, trace = run(problem, AnnealSchedule(seed=seed, max_iterations=30_000))
        converged += trace.final_distance <= 1e-6
    assert converged >= 3


@pytest.mark.slow
def test_h4_rdm2_target(h4_fcidump):
    problem = _problem(ModelSpec(ModelKind.MOLECULAR, fcidump=h4_fcidump), RdmKind.RDM2)
    _, trace = run(problem, AnnealSchedule(seed=1, max_iterations=20_000))
    assert trace.final_distance <= 1e-4


@pytest.mark.slow
@pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
def test_h4_noise_ordering(h4_fcidump, seed):
    problem = _problem(ModelSpec(ModelKind.MOLECULAR, fcidump=h4_fcidump), RdmKind.RDM1)
    finals = []
    for epsilon in (0.0, 0.001, 0.01, 0.1):
        noisy = add_noise(problem.target, epsilon, seed=42)
        reference = hs_distance(problem.target, noisy)
        _, trace = run(AnnealingProblem(problem.pool, problem.initial_state, noisy),
                       AnnealSchedule(seed=seed, max_iterations=10_000))
        finals.append(trace.final_distance)
        if epsilon > 0:
            assert trace.final_distance <= 1.1 * reference
    assert finals == sorted(finals) and len(set(finals)) == 4
