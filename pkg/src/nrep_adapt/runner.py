#!/usr/bin/env python3
"""
Experiment runner and command-line entry point.

Reads a flat `key = value` config, builds the system, resolves the target (exact
eigenstate RDM, optionally perturbed, or a target file), anneals once per seed and
writes trace CSVs, ansatz files, the resolved target and a JSON summary.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from loguru import logger

from .annealer import AnnealingProblem, AnnealSchedule, RunTrace, TraceRecord, run
from .ansatz import write_ansatz
from .errors import AnnealingAborted, ConfigError, DomainError, NrepError, ParseError
from .fock import StateVector
from .models import (ModelKind, ModelSpec, ModelSystem, bcs_critical_g, build_model,
                     exact_eigenstates, reference_state, singlet_eigenstates)
from .pool import PoolKind, build_pool
from .rdm import (RdmKind, RdmTarget, add_noise, extract_rdm, hs_distance, read_target,
                  target_diagnostics, target_from_rdm, write_target)

SECTION = "experiment"
TRACE_HEADER = ["iter", "proposed_op", "proposed_theta", "candidate_D", "accepted", "current_D", "T", "theta_max"]
DOCI_METRIC_NOTE = "DOCI distance is the unweighted sum of the PI-block and D-block distances"
CRITICAL_G_NOTE = ("G_c from the zero-gap gap equation depends on the level scale: eps_i = i/K gives the 'scaled' "
                   "value, eps_i = i reproduces the commonly quoted K=4 value 0.1875")


class InitialStateKind(str, Enum):
    REFERENCE = "reference"
    EXACT_GROUND = "exact_ground"


class TargetSource(str, Enum):
    EXACT_GROUND = "exact_ground"
    EXACT_EXCITED = "exact_excited"
    FILE = "file"


# key -> (default rendered as text, help)
CONFIG_KEYS: Dict[str, Tuple[str, str]] = {
    "model": ("", "bcs | xxz | molecular (required)"),
    "levels": ("4", "K: pair levels (bcs) or sites (xxz); even"),
    "coupling": ("1.0", "G (bcs) or Delta (xxz)"),
    "fcidump": ("", "FCIDUMP path for molecular systems, relative to the config file"),
    "energy_scale": ("scaled", "bcs level energies: scaled (eps_i = i/K) | unscaled (eps_i = i)"),
    "pool": ("", "gsd | gsd_spin | pair (default gsd_spin for molecular, pair otherwise)"),
    "initial_state": ("reference", "reference | exact_ground"),
    "target_source": ("exact_ground", "exact_ground | exact_excited | file"),
    "excited_index": ("1", "k for exact_excited (1 = first excited state)"),
    "target_file": ("", "NREP-TARGET v1 file for target_source = file"),
    "target_kind": ("", "rdm1 | rdm2 | doci (default rdm1 for molecular, doci otherwise)"),
    "noise_epsilon": ("0.0", "strength of the uniform noise added to the target"),
    "noise_seed": ("0", "seed of the noise draw"),
    "antithetic_noise": ("false", "subtract the noise draw instead of adding it"),
    "t_initial": ("0.01", "initial temperature"),
    "t_decay": ("0.995", "temperature factor per proposal"),
    "theta_max_initial": ("0.5", "initial amplitude bound"),
    "theta_decay": ("0.999", "amplitude-bound factor on reject"),
    "theta_growth": ("1.0025", "amplitude-bound factor on accept"),
    "theta_min": ("1e-06", "lower clamp of the amplitude bound"),
    "theta_cap": ("2.0", "upper clamp of the amplitude bound"),
    "stall_epsilon": ("1e-12", "smallest decrease of the current distance that counts as progress"),
    "stall_window": ("1000", "proposals without progress before a run stops"),
    "max_iterations": ("50000", "proposal budget per seed"),
    "converged_distance": ("1e-14", "distance at which a run stops as converged"),
    "log_every": ("1000", "progress line every N proposals (0 disables)"),
    "seeds": ("1", "comma-separated annealing seeds"),
    "sweep_values": ("", "comma-separated couplings to sweep (bcs/xxz)"),
    "output_dir": ("runs", "output directory, relative to the working directory"),
}

_SCHEDULE_FLOATS = ("t_initial", "t_decay", "theta_max_initial", "theta_decay", "theta_growth",
                    "theta_min", "theta_cap", "stall_epsilon", "converged_distance")
_SCHEDULE_INTS = ("stall_window", "max_iterations", "log_every")


@dataclass(frozen=True)
class ExperimentConfig:
    system: ModelSpec
    pool: PoolKind
    initial_state: InitialStateKind = InitialStateKind.REFERENCE
    target_source: TargetSource = TargetSource.EXACT_GROUND
    excited_index: int = 1
    target_file: Optional[Path] = None
    target_kind: RdmKind = RdmKind.DOCI
    noise_epsilon: float = 0.0
    noise_seed: int = 0
    antithetic_noise: bool = False
    schedule: AnnealSchedule = field(default_factory=AnnealSchedule)
    seeds: Tuple[int, ...] = (1,)
    sweep_values: Tuple[float, ...] = ()
    output_dir: Path = Path("runs")


# ── Config parsing ───────────────────────────────────────────────────────

def _strip_comments(text: str) -> str:
    """Drop inline `#` comments that are not inside quotes; keep full-line comments."""
    cleaned = []
    for line in text.splitlines():
        if "#" in line and not line.strip().startswith("#"):
            before_hash = line.split("#", 1)[0]
            quote_count = before_hash.count('"') + before_hash.count("'")
            if quote_count % 2 == 0:
                line = before_hash.rstrip()
        cleaned.append(line)
    return "\n".join(cleaned) + "\n"


class _Values:
    """Typed access to the raw key/value pairs; every failure names its key."""

    def __init__(self, raw: Dict[str, str]):
        self.raw = raw

    def text(self, key: str) -> str:
        return self.raw.get(key, CONFIG_KEYS[key][0]).strip()

    def number(self, key: str, kind=float):
        value = self.text(key)
        try:
            return kind(value)
        except ValueError:
            raise ConfigError(key, f"expected {'an integer' if kind is int else 'a number'}, got '{value}'") from None

    def flag(self, key: str) -> bool:
        value = self.text(key).lower()
        if value in ("1", "true", "yes", "on"):
            return True
        if value in ("0", "false", "no", "off"):
            return False
        raise ConfigError(key, f"expected true/false, got '{value}'")

    def choice(self, key: str, enum, default=None):
        value = self.text(key)
        if not value:
            return default
        try:
            return enum(value)
        except ValueError:
            allowed = " | ".join(member.value for member in enum)
            raise ConfigError(key, f"expected one of {allowed}, got '{value}'") from None

    def listing(self, key: str, kind=float) -> tuple:
        value = self.text(key)
        if not value:
            return ()
        try:
            return tuple(kind(item) for item in value.split(",") if item.strip())
        except ValueError:
            raise ConfigError(key, f"expected a comma-separated list, got '{value}'") from None


def _resolve_path(value: str, base_dir: Optional[Path]) -> Path:
    path = Path(value).expanduser()
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    return path


def parse_config_text(text: str, base_dir: Optional[Path] = None) -> ExperimentConfig:
    """Validate a config given as text. Relative file paths are resolved against `base_dir`."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(f"[{SECTION}]\n" + _strip_comments(text))
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(exc.option, "given more than once") from None
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from None
    extra_sections = [s for s in parser.sections() if s != SECTION]
    if extra_sections:
        raise ConfigError(extra_sections[0], "sections are not used; write plain 'key = value' lines")

    raw = dict(parser[SECTION])
    for key in raw:
        if key not in CONFIG_KEYS:
            raise ConfigError(key, "unknown key")
    values = _Values(raw)

    kind = values.choice("model", ModelKind)
    if kind is None:
        raise ConfigError("model", "required (bcs | xxz | molecular)")
    molecular = kind is ModelKind.MOLECULAR

    levels = values.number("levels", int)
    if not molecular and (levels < 2 or levels % 2):
        raise ConfigError("levels", f"half filling needs an even K >= 2, got {levels}")
    fcidump = None
    if molecular:
        if not values.text("fcidump"):
            raise ConfigError("fcidump", "required for molecular systems")
        fcidump = _resolve_path(values.text("fcidump"), base_dir)
    elif values.text("fcidump"):
        raise ConfigError("fcidump", f"only used by molecular systems, model is {kind.value}")
    energy_scale = values.text("energy_scale")
    if energy_scale not in ("scaled", "unscaled"):
        raise ConfigError("energy_scale", f"expected scaled | unscaled, got '{energy_scale}'")
    system = ModelSpec(kind, levels=levels, coupling=values.number("coupling"), fcidump=fcidump,
                       scaled_energies=energy_scale == "scaled")

    pool = values.choice("pool", PoolKind, PoolKind.GSD_SPIN_FILTERED if molecular else PoolKind.PAIR)
    if molecular == (pool is PoolKind.PAIR):
        raise ConfigError("pool", f"pool {pool.value} does not act on a {kind.value} system")
    target_kind = values.choice("target_kind", RdmKind, RdmKind.RDM1 if molecular else RdmKind.DOCI)
    if molecular == (target_kind is RdmKind.DOCI):
        raise ConfigError("target_kind", f"{target_kind.value} targets do not fit a {kind.value} system")

    target_source = values.choice("target_source", TargetSource, TargetSource.EXACT_GROUND)
    target_file = None
    if target_source is TargetSource.FILE:
        if not values.text("target_file"):
            raise ConfigError("target_file", "required when target_source = file")
        target_file = _resolve_path(values.text("target_file"), base_dir)
    excited_index = values.number("excited_index", int)
    if excited_index < 1:
        raise ConfigError("excited_index", f"must be >= 1, got {excited_index}")

    noise_epsilon = values.number("noise_epsilon")
    if not noise_epsilon >= 0:
        raise ConfigError("noise_epsilon", f"must be >= 0, got {noise_epsilon}")

    schedule_fields = {key: values.number(key) for key in _SCHEDULE_FLOATS}
    schedule_fields.update({key: values.number(key, int) for key in _SCHEDULE_INTS})
    schedule = AnnealSchedule(**schedule_fields)

    seeds = values.listing("seeds", int)
    if not seeds:
        raise ConfigError("seeds", "at least one seed is needed")
    sweep_values = values.listing("sweep_values")
    if sweep_values and molecular:
        raise ConfigError("sweep_values", "coupling sweeps apply to bcs and xxz only")

    return ExperimentConfig(
        system=system,
        pool=pool,
        initial_state=values.choice("initial_state", InitialStateKind, InitialStateKind.REFERENCE),
        target_source=target_source,
        excited_index=excited_index,
        target_file=target_file,
        target_kind=target_kind,
        noise_epsilon=noise_epsilon,
        noise_seed=values.number("noise_seed", int),
        antithetic_noise=values.flag("antithetic_noise"),
        schedule=schedule,
        seeds=seeds,
        sweep_values=sweep_values,
        output_dir=Path(values.text("output_dir") or "runs"),
    )


def parse_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError("<file>", f"config file {path} not found (create one with 'nrep-adapt init-config')")
    return parse_config_text(path.read_text(encoding="utf-8"), base_dir=path.parent.resolve())


def config_to_text(config: ExperimentConfig) -> str:
    """Render a resolved config in the same `key = value` form parse_config_text accepts."""
    system = config.system
    lines = [f"model = {system.kind.value}"]
    if system.kind is ModelKind.MOLECULAR:
        lines.append(f"fcidump = {Path(system.fcidump).resolve()}")
    else:
        lines += [f"levels = {system.levels}", f"coupling = {system.coupling!r}",
                  f"energy_scale = {'scaled' if system.scaled_energies else 'unscaled'}"]
    lines += [
        f"pool = {config.pool.value}",
        f"initial_state = {config.initial_state.value}",
        f"target_source = {config.target_source.value}",
        f"excited_index = {config.excited_index}",
    ]
    if config.target_file is not None:
        lines.append(f"target_file = {Path(config.target_file).resolve()}")
    lines += [
        f"target_kind = {config.target_kind.value}",
        f"noise_epsilon = {config.noise_epsilon!r}",
        f"noise_seed = {config.noise_seed}",
        f"antithetic_noise = {str(config.antithetic_noise).lower()}",
    ]
    for key in _SCHEDULE_FLOATS + _SCHEDULE_INTS:
        lines.append(f"{key} = {getattr(config.schedule, key)!r}")
    lines.append(f"seeds = {', '.join(str(s) for s in config.seeds)}")
    if config.sweep_values:
        lines.append(f"sweep_values = {', '.join(repr(v) for v in config.sweep_values)}")
    lines.append(f"output_dir = {config.output_dir}")
    return "\n".join(lines) + "\n"


DEFAULT_CONFIG_TEXT = """\
# nrep-adapt experiment config: one 'key = value' per line, '#' starts a comment.

# ── System ──
model = bcs                 # bcs | xxz | molecular
levels = 4                  # K, even (pair levels or chain sites)
coupling = 1.0              # G for bcs, Delta for xxz
# fcidump = h4.fcidump      # molecular only, relative to this file
energy_scale = scaled       # scaled: eps_i = i/K, unscaled: eps_i = i
# pool = pair               # gsd | gsd_spin | pair
initial_state = reference   # reference | exact_ground

# ── Target ──
target_source = exact_ground    # exact_ground | exact_excited | file
excited_index = 1
# target_file = target.txt
# target_kind = doci            # rdm1 | rdm2 | doci
noise_epsilon = 0.0
noise_seed = 0
antithetic_noise = false

# ── Annealing schedule ──
t_initial = 0.01
t_decay = 0.995
theta_max_initial = 0.5
theta_decay = 0.999
theta_growth = 1.0025
theta_min = 1e-6
theta_cap = 2.0
stall_epsilon = 1e-12
stall_window = 1000
max_iterations = 50000
converged_distance = 1e-14
log_every = 1000

# ── Run ──
seeds = 1, 2, 3, 4, 5
# sweep_values = -2, -1, 0, 1, 2
output_dir = runs
"""


def create_default_config(path: Union[str, Path] = "experiment.cfg") -> Path:
    """Write a documented default config."""
    path = Path(path)
    if path.exists():
        raise ConfigError("<file>", f"{path} already exists; not overwriting")
    path.write_text(DEFAULT_CONFIG_TEXT, encoding="utf-8")
    logger.info(f"📝 Created {path}. Edit it, then run: nrep-adapt run {path}")
    return path


# ── Targets and starting states ──────────────────────────────────────────

def _lowest_states(system: ModelSystem, count: int) -> List[Tuple[float, StateVector]]:
    if system.is_molecular:
        return singlet_eigenstates(system.hamiltonian, count)
    return exact_eigenstates(system.hamiltonian, count)


def resolve_initial_state(config: ExperimentConfig, system: ModelSystem) -> StateVector:
    if config.initial_state is InitialStateKind.EXACT_GROUND:
        return _lowest_states(system, 1)[0][1]
    return reference_state(system.spec, system.basis)


def resolve_target(config: ExperimentConfig, system: ModelSystem) -> Tuple[RdmTarget, RdmTarget]:
    """(target, exact) where `exact` is the RDM of the exact state the target stands for.

    File targets are compared with the exact ground state.
    """
    basis = system.basis
    particles = basis.particle_count
    describe = system.spec.describe()
    index = config.excited_index if config.target_source is TargetSource.EXACT_EXCITED else 0
    energy, state = _lowest_states(system, index + 1)[index]
    label = "exact ground state" if index == 0 else f"exact excited state {index}"
    exact = target_from_rdm(extract_rdm(config.target_kind, state), particles,
                            provenance=f"{label} (E={energy:.12g})", system=describe)

    if config.target_source is TargetSource.FILE:
        target = read_target(config.target_file)
        if target.kind is not config.target_kind:
            raise ConfigError("target_kind", f"target file holds a {target.kind.value} target, "
                                             f"config asks for {config.target_kind.value}")
        if (target.num_modes, target.particle_count) != (basis.num_modes, particles):
            raise DomainError(f"target file describes {target.num_modes} modes / {target.particle_count} "
                              f"particles, system has {basis.num_modes} / {particles}")
    else:
        target = exact

    if config.noise_epsilon > 0:
        target = add_noise(target, config.noise_epsilon, config.noise_seed, antithetic=config.antithetic_noise)
    return target, exact


# ── Trace CSV ────────────────────────────────────────────────────────────

def _g17(value: float) -> str:
    return format(float(value), ".17g")


def emit_trace(trace: RunTrace, path: Union[str, Path]) -> None:
    """One CSV row per proposal, 17 significant digits, '\\n' line endings."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for r in trace.records:
            writer.writerow([
                r.iteration, r.proposed_op, _g17(r.proposed_theta), _g17(r.candidate_distance),
                1 if r.accepted else 0, _g17(r.current_distance), _g17(r.temperature), _g17(r.theta_max),
            ])


def read_trace(path: Union[str, Path]) -> List[TraceRecord]:
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise ParseError(path, 1, f"expected header {','.join(TRACE_HEADER)}")
        records = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(TRACE_HEADER):
                raise ParseError(path, line_no, f"expected {len(TRACE_HEADER)} columns, got {len(row)}")
            try:
                records.append(TraceRecord(
                    iteration=int(row[0]),
                    proposed_op=int(row[1]),
                    proposed_theta=float(row[2]),
                    candidate_distance=float(row[3]),
                    accepted=row[4] == "1",
                    current_distance=float(row[5]),
                    temperature=float(row[6]),
                    theta_max=float(row[7]),
                ))
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from None
    return records


# ── Experiment pipeline ──────────────────────────────────────────────────

def _run_system(config: ExperimentConfig, spec: ModelSpec, output_dir: Path) -> dict:
    output_dir.mkdir(parents=True, exist_ok=True)
    system = build_model(spec)
    pool = build_pool(system.basis, config.pool)
    target, exact = resolve_target(config, system)
    initial_state = resolve_initial_state(config, system)
    reference_distance = hs_distance(exact, target)
    write_target(target, output_dir / "target.txt")
    logger.info(f"📊 {spec.describe()}: {system.basis.dim} states, {len(pool)} pool operators, "
                f"reference distance {reference_distance:.3e}")

    report = {
        "system": spec.describe(),
        "coupling": spec.coupling if spec.kind is not ModelKind.MOLECULAR else None,
        "basis_dimension": system.basis.dim,
        "pool_size": len(pool),
        "target": {
            "kind": target.kind.value,
            "provenance": target.provenance,
            "noise_epsilon": target.noise_epsilon,
        },
        "reference_distance": reference_distance,
        "runs": [],
        "partial": False,
        "config": config_to_text(replace(config, system=spec, sweep_values=())),
    }
    if target.kind is RdmKind.DOCI:
        report["target"]["metric"] = DOCI_METRIC_NOTE
    if spec.kind is ModelKind.BCS:
        report["bcs_critical_g"] = {
            "scaled": bcs_critical_g(spec.levels, scaled=True),
            "unscaled": bcs_critical_g(spec.levels, scaled=False),
            "note": CRITICAL_G_NOTE,
        }

    problem = AnnealingProblem(pool, initial_state, target)
    for seed in config.seeds:
        schedule = replace(config.schedule, seed=seed)
        try:
            ansatz, trace = run(problem, schedule)
            entry = trace.summary()
        except AnnealingAborted as exc:
            logger.error(f"❌ Seed {seed} aborted: {exc}")
            ansatz, trace = exc.ansatz, exc.trace
            entry = trace.summary() if trace is not None else {"seed": seed}
            entry["error"] = str(exc)
            report["partial"] = True
        except NrepError as exc:
            logger.error(f"❌ Seed {seed} failed: {exc}")
            report["runs"].append({"seed": seed, "error": str(exc)})
            report["partial"] = True
            continue
        if trace is not None:
            emit_trace(trace, output_dir / f"trace_{seed}.csv")
        if ansatz is not None:
            write_ansatz(ansatz, output_dir / f"ansatz_{seed}.txt")
        report["runs"].append(entry)

    finals = [r["final_distance"] for r in report["runs"] if "final_distance" in r]
    report["min_final_distance"] = min(finals) if finals else None
    (output_dir / "summary.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    logger.info(f"📁 Wrote {output_dir / 'summary.json'}")
    return report


def run_experiment(config: ExperimentConfig) -> int:
    """Run every (coupling, seed) combination of `config`. Returns 0, or 1 if any run failed."""
    output_dir = Path(config.output_dir)
    if not config.sweep_values:
        try:
            report = _run_system(config, config.system, output_dir)
        except NrepError as exc:
            logger.error(f"❌ {exc}")
            return 1
        return 1 if report["partial"] else 0

    status = 0
    sweep = []
    for value in config.sweep_values:
        spec = replace(config.system, coupling=value)
        try:
            report = _run_system(config, spec, output_dir / f"coupling_{value:g}")
        except NrepError as exc:
            logger.error(f"❌ coupling {value:g}: {exc}")
            sweep.append({"coupling": value, "error": str(exc)})
            status = 1
            continue
        status = max(status, 1 if report["partial"] else 0)
        sweep.append({
            "coupling": value,
            "reference_distance": report["reference_distance"],
            "final_distances": [r.get("final_distance") for r in report["runs"]],
            "min_final_distance": report["min_final_distance"],
        })
    output_dir.mkdir(parents=True, exist_ok=True)
    summary = {"system": config.system.describe(), "sweep": sweep, "partial": status != 0,
               "config": config_to_text(config)}
    (output_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    logger.info(f"📁 Wrote sweep summary {output_dir / 'summary.json'}")
    return status


# ── CLI ──────────────────────────────────────────────────────────────────

def _keys_epilog() -> str:
    width = max(len(k) for k in CONFIG_KEYS)
    rows = [f"  {key.ljust(width)}  {help_}" + (f" [{default}]" if default else "")
            for key, (default, help_) in CONFIG_KEYS.items()]
    return "config keys:\n" + "\n".join(rows)


def _cmd_run(args) -> int:
    config = parse_config(args.config)
    if args.seed is not None:
        config = replace(config, seeds=(args.seed,))
    if args.max_iters is not None:
        config = replace(config, schedule=replace(config.schedule, max_iterations=args.max_iters))
    if args.output_dir is not None:
        config = replace(config, output_dir=Path(args.output_dir))
    logger.info(f"📋 Running {config.system.describe()} with seeds {list(config.seeds)}")
    return run_experiment(config)


def _cmd_check_target(args) -> int:
    report = target_diagnostics(read_target(args.file))
    logger.info(f"✓ {args.file}: {report['kind']} on {report['modes']} modes, {report['particles']} particles")
    for key, value in report.items():
        if key not in ("kind", "modes", "particles"):
            logger.info(f"   {key}: {value}")
    if report["hermiticity_error"] > 1e-12:
        logger.warning(f"⚠️  target is not Hermitian (max deviation {report['hermiticity_error']:.3e})")
    return 0


def _cmd_distance(args) -> int:
    print(_g17(hs_distance(read_target(args.first), read_target(args.second))))
    return 0


def _cmd_critical_g(args) -> int:
    scaled = bcs_critical_g(args.levels, scaled=True)
    unscaled = bcs_critical_g(args.levels, scaled=False)
    logger.info(f"📊 K={args.levels}: G_c = {scaled:.17g} (eps_i = i/K), {unscaled:.17g} (eps_i = i)")
    logger.info(f"   {CRITICAL_G_NOTE}")
    return 0


def _cmd_init_config(args) -> int:
    create_default_config(args.path)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        description="Anneal a pure state toward a target reduced density matrix",
        epilog=_keys_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--verbose", action="store_true", help="Show debug output")
    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="Run an experiment config")
    p_run.add_argument("config", help="Config file path")
    p_run.add_argument("--seed", type=int, help="Run this single seed instead of the configured seeds")
    p_run.add_argument("--max-iters", type=int, help="Override max_iterations")
    p_run.add_argument("--output-dir", help="Override output_dir")
    p_run.set_defaults(handler=_cmd_run)

    p_check = sub.add_parser("check-target", help="Validate an NREP-TARGET file and print diagnostics")
    p_check.add_argument("file")
    p_check.set_defaults(handler=_cmd_check_target)

    p_dist = sub.add_parser("distance", help="Hilbert-Schmidt distance between two target files")
    p_dist.add_argument("first")
    p_dist.add_argument("second")
    p_dist.set_defaults(handler=_cmd_distance)

    p_gc = sub.add_parser("critical-g", help="Critical BCS pairing strength for K levels")
    p_gc.add_argument("levels", type=int)
    p_gc.set_defaults(handler=_cmd_critical_g)

    p_init = sub.add_parser("init-config", help="Write a documented default config")
    p_init.add_argument("path", nargs="?", default="experiment.cfg")
    p_init.set_defaults(handler=_cmd_init_config)

    args = parser.parse_args(argv)

    logger.remove()
    logger.add(sys.stdout, colorize=True, format="<lvl>{message}</lvl>",
               level="DEBUG" if args.verbose else "INFO")

    if args.command is None:
        parser.print_help()
        return 2
    try:
        return args.handler(args)
    except KeyboardInterrupt:
        logger.warning("\n⏹️  Cancelled by user")
        return 130
    except (NrepError, OSError) as e:
        logger.error(f"❌ Error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
