"""
Simulated-annealing growth of the ansatz.

Each proposal draws one pool operator and an amplitude in [-theta_max, theta_max],
evaluates the distance of the candidate state's RDM to the target and accepts it
with the Metropolis rule on the change of the current accepted distance. Accepted
proposals are appended to the ansatz; rejected ones are discarded. The temperature
decays every proposal; theta_max grows on accept and shrinks on reject.

All randomness comes from one generator seeded by the schedule and consumed in a
fixed order: operator index, amplitude, acceptance draw.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from .ansatz import Ansatz, AnsatzElement, apply_exponential, extend
from .errors import AnnealingAborted, ConfigError, ContractViolation, DomainError, NumericalError
from .fock import StateVector
from .pool import OperatorPool, operator_at
from .rdm import RdmTarget, extract_rdm, hs_distance


@dataclass(frozen=True)
class AnnealSchedule:
    t_initial: float = 0.01
    t_decay: float = 0.995
    theta_max_initial: float = 0.5
    theta_decay: float = 0.999
    theta_growth: float = 1.0025
    theta_min: float = 1e-6
    theta_cap: float = 2.0
    stall_epsilon: float = 1e-12
    stall_window: int = 1000
    max_iterations: int = 50000
    converged_distance: float = 1e-14
    seed: int = 0
    log_every: int = 1000

    def __post_init__(self):
        checks = [
            (self.t_initial >= 0, "t_initial", "must be >= 0"),
            (0 < self.t_decay < 1, "t_decay", "must lie in (0, 1)"),
            (0 < self.theta_decay < 1, "theta_decay", "must lie in (0, 1)"),
            (self.theta_growth > 1, "theta_growth", "must be > 1"),
            (0 < self.theta_min <= self.theta_cap, "theta_min", "must lie in (0, theta_cap]"),
            (self.theta_min <= self.theta_max_initial <= self.theta_cap, "theta_max_initial",
             "must lie in [theta_min, theta_cap]"),
            (self.stall_epsilon >= 0, "stall_epsilon", "must be >= 0"),
            (self.stall_window >= 1, "stall_window", "must be >= 1"),
            (self.max_iterations >= 0, "max_iterations", "must be >= 0"),
            (self.converged_distance >= 0, "converged_distance", "must be >= 0"),
            (self.log_every >= 0, "log_every", "must be >= 0"),
        ]
        for ok, name, message in checks:
            if not ok:
                raise ConfigError(name, f"{message} (got {getattr(self, name)})")


class TerminationReason(str, Enum):
    CONVERGED = "converged"
    STALLED = "stalled"
    MAX_ITERATIONS = "max_iterations"
    ABORTED = "aborted"


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    proposed_op: int
    proposed_theta: float
    candidate_distance: float
    accepted: bool
    current_distance: float
    temperature: float
    theta_max: float


@dataclass
class RunTrace:
    """Per-proposal records of one run plus its summary. Appended only by the owning run."""

    seed: int
    initial_distance: float
    records: List[TraceRecord] = field(default_factory=list)
    final_distance: float = math.nan
    best_distance: float = math.nan
    ansatz_length: int = 0
    termination_reason: Optional[TerminationReason] = None
    wall_time: float = 0.0

    @property
    def total_proposals(self) -> int:
        return len(self.records)

    @property
    def accepted_count(self) -> int:
        return sum(1 for r in self.records if r.accepted)

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "initial_distance": self.initial_distance,
            "final_distance": self.final_distance,
            "best_distance": self.best_distance,
            "ansatz_length": self.ansatz_length,
            "total_proposals": self.total_proposals,
            "termination_reason": self.termination_reason.value if self.termination_reason else None,
            "wall_time": self.wall_time,
        }


@dataclass(frozen=True, eq=False)
class AnnealingProblem:
    pool: OperatorPool
    initial_state: StateVector
    target: RdmTarget

    def __post_init__(self):
        basis = self.initial_state.basis
        if self.pool.basis != basis:
            raise ContractViolation("pool and initial state live on different bases")
        if self.target.num_modes != basis.num_modes:
            raise DomainError(f"target has {self.target.num_modes} modes, system has {basis.num_modes}")
        if basis.particle_count is not None and self.target.particle_count != basis.particle_count:
            raise DomainError(f"target describes {self.target.particle_count} particles, "
                              f"system sector holds {basis.particle_count}")


# ── Moves ────────────────────────────────────────────────────────────────

def propose(rng: np.random.Generator, pool: OperatorPool, theta_max: float) -> Tuple[int, float]:
    """Uniform pool index, then uniform amplitude in [-theta_max, theta_max]."""
    if len(pool) == 0:
        raise DomainError("cannot propose from an empty pool")
    if not theta_max > 0:
        raise DomainError(f"theta_max must be positive, got {theta_max}")
    index = int(rng.integers(len(pool)))
    theta = float(rng.uniform(-theta_max, theta_max))
    return index, theta


def accept(delta: float, temperature: float, rng: np.random.Generator) -> bool:
    """Metropolis rule. Always consumes one draw so the stream stays aligned."""
    if temperature < 0:
        raise DomainError(f"temperature must be >= 0, got {temperature}")
    draw = rng.random()
    if delta <= 0:
        return True
    if temperature == 0:
        return False
    return bool(draw < math.exp(-delta / temperature))


def _evaluate(state: StateVector, candidate: Tuple[int, float], target: RdmTarget,
              pool: OperatorPool) -> Tuple[float, StateVector]:
    index, theta = candidate
    evolved = apply_exponential(operator_at(pool, index), theta, state)
    return hs_distance(extract_rdm(target.kind, evolved), target), evolved


def step_distance(state: StateVector, candidate: Tuple[int, float], target: RdmTarget,
                  pool: OperatorPool) -> float:
    """Distance to `target` after applying the candidate element to `state`."""
    distance, _ = _evaluate(state, candidate, target, pool)
    return distance


def state_distance(state: StateVector, target: RdmTarget) -> float:
    return hs_distance(extract_rdm(target.kind, state), target)


# ── Main loop ────────────────────────────────────────────────────────────

def run(problem: AnnealingProblem, schedule: AnnealSchedule) -> Tuple[Ansatz, RunTrace]:
    """Grow an ansatz until the distance converges, stalls or the proposal budget runs out.

    Args:
        problem: pool, starting state and target
        schedule: temperature/amplitude schedule, stopping rules and seed

    Returns:
        (final ansatz, complete trace)

    Raises:
        AnnealingAborted: a non-finite distance or a numerical failure; carries the partial
            trace and the ansatz accepted so far.
    """
    started = time.perf_counter()
    rng = np.random.default_rng(schedule.seed)
    ansatz = Ansatz(problem.pool, problem.initial_state)
    current = state_distance(problem.initial_state, problem.target)
    trace = RunTrace(seed=schedule.seed, initial_distance=current)
    best = current

    def finish(reason: TerminationReason) -> None:
        trace.final_distance = current
        trace.best_distance = best
        trace.ansatz_length = len(ansatz)
        trace.termination_reason = reason
        trace.wall_time = time.perf_counter() - started

    if not math.isfinite(current):
        finish(TerminationReason.ABORTED)
        raise AnnealingAborted(f"initial distance is not finite ({current})", trace, ansatz)

    temperature = schedule.t_initial
    theta_max = schedule.theta_max_initial
    stalled_for = 0
    reason = TerminationReason.MAX_ITERATIONS
    if current <= schedule.converged_distance:
        reason = TerminationReason.CONVERGED

    iteration = 0
    while reason is TerminationReason.MAX_ITERATIONS and iteration < schedule.max_iterations:
        candidate = propose(rng, problem.pool, theta_max)
        try:
            distance, evolved = _evaluate(ansatz.state, candidate, problem.target, problem.pool)
        except NumericalError as exc:
            finish(TerminationReason.ABORTED)
            raise AnnealingAborted(f"iteration {iteration}: {exc}", trace, ansatz) from exc
        if not math.isfinite(distance):
            finish(TerminationReason.ABORTED)
            raise AnnealingAborted(f"iteration {iteration}: non-finite distance {distance}", trace, ansatz)

        accepted = accept(distance - current, temperature, rng)
        trace.records.append(TraceRecord(
            iteration=iteration,
            proposed_op=candidate[0],
            proposed_theta=candidate[1],
            candidate_distance=distance,
            accepted=accepted,
            current_distance=distance if accepted else current,
            temperature=temperature,
            theta_max=theta_max,
        ))

        if accepted:
            improved = current - distance > schedule.stall_epsilon
            ansatz = extend(ansatz, AnsatzElement(*candidate), evolved)
            current = distance
            best = min(best, current)
            theta_max = min(theta_max * schedule.theta_growth, schedule.theta_cap)
        else:
            improved = False
            theta_max = max(theta_max * schedule.theta_decay, schedule.theta_min)
        temperature *= schedule.t_decay
        stalled_for = 0 if improved else stalled_for + 1
        iteration += 1

        if schedule.log_every and iteration % schedule.log_every == 0:
            logger.debug(f"  iter {iteration}: D={current:.3e} best={best:.3e} L={len(ansatz)} "
                         f"T={temperature:.3e} theta_max={theta_max:.3e}")
        if current <= schedule.converged_distance:
            reason = TerminationReason.CONVERGED
        elif stalled_for >= schedule.stall_window:
            reason = TerminationReason.STALLED

    finish(reason)
    logger.info(f"Seed {schedule.seed}: {reason.value} after {trace.total_proposals} proposals, "
                f"D_L={trace.final_distance:.3e}, best={trace.best_distance:.3e}, "
                f"L={trace.ansatz_length}, {trace.wall_time:.2f}s")
    return ansatz, trace
