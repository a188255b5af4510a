# _*_ coding: utf-8 _*_
"""
Command-line front end: subcommands, flat config files, CSV output and run manifests
"""

import argparse
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from dotenv.parser import parse_stream
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .config import ScenarioConfig
from .errors import CavityStaError, CheckFailed, ConfigError, InvariantViolation, PositivityLoss
from .experiments import (check_closure, check_equivalence, default_durations, default_rate_grid, run_scenario,
                          spectrum_table, sweep_decoherence, sweep_duration)
from .logger import Log
from .misc import DefaultConfig, HamiltonianMode, IntegratorMethod, Task
from .pulses import pulse_table
from .version import __title__, __version__

logger = logging.getLogger(__name__)

COMMANDS = ("transfer", "entangle", "sweep-duration", "sweep-decoherence", "check-closure",
            "check-equivalence", "spectrum", "pulses", "replay")

# flag dest -> ScenarioConfig field
SCENARIO_FLAGS = {
    "omega0": "omega0",
    "big_t": "big_t",
    "tau_frac": "tau_frac",
    "theta": "theta",
    "w": "w",
    "delta1": "delta1",
    "delta2": "delta2",
    "gamma": "gamma",
    "kappa": "kappa",
    "nmax_a": "nmax_a",
    "nmax_b": "nmax_b",
    "mode": "mode",
    "samples": "samples",
    "tol": "tol",
    "method": "method",
    "task": "task",
}

TRANSFER_ONLY = {"tau_frac"}
ENTANGLE_ONLY = {"theta", "w"}

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_INVARIANT = 3


class RunManifest(BaseModel):
    """Everything needed to regenerate one output file"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tool: str = __title__
    version: str = __version__
    command: str
    config: ScenarioConfig
    config_hash: str
    options: Dict[str, Any] = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)
    metadata: Dict[str, Any] = Field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    """Raises ConfigError instead of exiting, so every usage error gets the same one-line format"""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _scenario_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("scenario (units of g and 1/g)")
    group.add_argument("--omega0", type=float, help="pulse amplitude (default 0.2 transfer, 0.3 entangle)")
    group.add_argument("--big-t", dest="big_t", type=float, help="pulse duration T (default 50 transfer, 30 entangle)")
    group.add_argument("--tau-frac", dest="tau_frac", type=float, help="transfer delay tau / T (default 0.22)")
    group.add_argument("--theta", type=float, help="entangle Gaussian offset (default 17/120)")
    group.add_argument("--w", type=float, help="entangle Gaussian width (default 23/120)")
    group.add_argument("--delta1", type=float, help="auxiliary laser detuning (default 6)")
    group.add_argument("--delta2", type=float, help="cavity mode b detuning (default 7)")
    group.add_argument("--gamma", type=float, help="atomic decay rate Gamma (default 0)")
    group.add_argument("--kappa", type=float, help="cavity decay rate kappa (default 0)")
    group.add_argument("--nmax-a", dest="nmax_a", type=int, help="Fock cutoff of mode a (default 1)")
    group.add_argument("--nmax-b", dest="nmax_b", type=int, help="Fock cutoff of mode b (default 1)")
    group.add_argument("--mode", choices=[m.value for m in HamiltonianMode], help="drive (default aux)")
    group.add_argument("--samples", type=int, help="output samples (default 1000)")
    group.add_argument("--tol", type=float, help="integrator tolerance (default 1e-8)")
    group.add_argument("--method", choices=[m.value for m in IntegratorMethod], help="integrator (default adaptive)")
    group.add_argument("--config", help="flat key = value file; flags override it")
    return parent


def _output_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--out", help="CSV output path (default <command>.csv)")
    parent.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps (default 1)")
    parent.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parent.add_argument("--log-file", help="also write the log to this file")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cavitysta", description="Shortcut-to-adiabaticity simulator for two atoms in a cavity")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    scenario, output = _scenario_parent(), _output_parent()
    both = [scenario, output]

    commands.add_parser("transfer", parents=both, help="population transfer |phi1> -> |phi5>")
    commands.add_parser("entangle", parents=both, help="maximally entangled state creation")

    duration = commands.add_parser("sweep-duration", parents=both, help="fidelity versus pulse duration")
    duration.add_argument("--task", choices=[t.value for t in Task])
    duration.add_argument("--modes", default=",".join(m.value for m in (HamiltonianMode.ADIABATIC,
                                                                          HamiltonianMode.CDD,
                                                                          HamiltonianMode.AUX)),
                          help="comma-separated drives (default adiabatic,cdd,aux)")
    duration.add_argument("--t-min", dest="t_min", type=float, default=DefaultConfig.duration_t_min)
    duration.add_argument("--t-max", dest="t_max", type=float, default=DefaultConfig.duration_t_max)
    duration.add_argument("--t-step", dest="t_step", type=float, default=DefaultConfig.duration_t_step)

    heatmap = commands.add_parser("sweep-decoherence", parents=both, help="fidelity on the Gamma x kappa grid")
    heatmap.add_argument("--task", choices=[t.value for t in Task])
    heatmap.add_argument("--grid-max", dest="grid_max", type=float, default=DefaultConfig.decoherence_grid_max)
    heatmap.add_argument("--grid-points", dest="grid_points", type=int,
                         default=DefaultConfig.decoherence_grid_points)

    for name, text in (("check-closure", "reachable-subspace sizes"),
                       ("check-equivalence", "effective versus auxiliary dynamics"),
                       ("spectrum", "instantaneous eigenvalues and adiabaticity ratios"),
                       ("pulses", "pulse envelopes and derived couplings")):
        sub = commands.add_parser(name, parents=both, help=text)
        sub.add_argument("--task", choices=[t.value for t in Task])

    replay = commands.add_parser("replay", parents=[output], help="re-run the command recorded in a manifest")
    replay.add_argument("manifest", help="path to a <output>.manifest.json file")
    return parser


def load_config(path) -> Dict[str, Any]:
    """
    Read a flat ``key = value`` file with ``#`` comments. Keys mirror the CLI flags, with '-' or '_'.

    :return: the values found, as strings, keyed by ScenarioConfig field.
    :raises ConfigError: on an unreadable file, a malformed line or an unknown key.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e.strerror or e}") from e

    values: Dict[str, Any] = {}
    for binding in parse_stream(io.StringIO(text)):
        line = binding.original.line
        if binding.error:
            raise ConfigError(f"cannot parse '{binding.original.string.strip()}'", line=line)
        if binding.key is None:
            continue
        key = binding.key.strip().lower().replace("-", "_")
        if key not in SCENARIO_FLAGS:
            raise ConfigError(f"unknown key '{binding.key}'", line=line, key=binding.key)
        if binding.value is None or binding.value == "":
            raise ConfigError(f"missing value for '{binding.key}'", line=line, key=binding.key)
        values[SCENARIO_FLAGS[key]] = binding.value
    logger.debug(f"Loaded {len(values)} keys from {path}")
    return values


def _validation_message(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first.get("loc", ())) or "config"
    message = first.get("msg", "invalid value")
    return f"{location}: {message}"


def _task_for(command: str, values: Dict[str, Any]) -> Task:
    if command in ("transfer", "entangle"):
        task = Task(command)
        if "task" in values and Task(values["task"]) != task:
            raise ConfigError(f"task '{values['task']}' conflicts with command '{command}'", key="task")
        return task
    return Task(values.get("task", Task.TRANSFER))


def resolve_config(command: str, args: argparse.Namespace) -> ScenarioConfig:
    """Merge config file and flags (flags win) into a validated ScenarioConfig"""
    values = load_config(args.config) if getattr(args, "config", None) else {}
    for dest, name in SCENARIO_FLAGS.items():
        value = getattr(args, dest, None)
        if value is not None:
            values[name] = value
    try:
        task = _task_for(command, values)
    except ValueError as e:
        raise ConfigError(str(e), key="task") from e
    values["task"] = task

    stray = (ENTANGLE_ONLY if task == Task.TRANSFER else TRANSFER_ONLY) & set(values)
    if stray:
        names = ", ".join(f"--{s.replace('_', '-')}" for s in sorted(stray))
        raise ConfigError(f"{names} does not apply to the {task.value} task")
    if command == "check-equivalence" and task != Task.TRANSFER:
        raise ConfigError("check-equivalence runs on the transfer task only")

    try:
        return ScenarioConfig(**values)
    except ValidationError as e:
        raise ConfigError(_validation_message(e)) from None


def parse_cli(argv: Optional[Sequence[str]] = None) -> Tuple[str, Optional[ScenarioConfig], argparse.Namespace]:
    """
    :return: (command, resolved config or None for replay, parsed arguments).
    :raises ConfigError: on usage errors, bad values and mode or task mismatches.
    """
    args = build_parser().parse_args(argv)
    if args.command == "replay":
        return args.command, None, args
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    return args.command, resolve_config(args.command, args), args


def manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def emit_csv(frame: pd.DataFrame, path, manifest: RunManifest) -> Path:
    """
    Write the table with 12 significant digits and '\\n' line endings, and the manifest beside it.
    """
    path = Path(path)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.12g", lineterminator="\n")
        manifest = manifest.model_copy(update={"outputs": [str(path)]})
        manifest_path(path).write_text(
            json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as e:
        raise CavityStaError(f"cannot write {path}: {e.strerror or e}", details={"path": str(path)}) from e
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def _options(command: str, args: argparse.Namespace) -> Dict[str, Any]:
    if command == "sweep-duration":
        return {"modes": [m.strip() for m in args.modes.split(",") if m.strip()],
                "t_min": args.t_min, "t_max": args.t_max, "t_step": args.t_step}
    if command == "sweep-decoherence":
        return {"grid_max": args.grid_max, "grid_points": args.grid_points}
    return {}


def execute(command: str, config: ScenarioConfig, options: Dict[str, Any],
            jobs: int = 1) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """
    Run one command and return its table plus manifest metadata.

    :raises InvariantViolation: if a trajectory breaks a hard invariant.
    """
    if command in ("transfer", "entangle"):
        result = run_scenario(config)
        result.trajectory.check_invariants()
        print(f"{command} [{config.mode.value}]: fidelity {result.fidelity:.6f}")
        return result.trajectory.to_frame(), {"fidelity": result.fidelity,
                                              "subspace_dim": len(result.subspace)}
    if command == "sweep-duration":
        try:
            modes = [HamiltonianMode(m) for m in options["modes"]]
        except ValueError as e:
            raise ConfigError(f"--modes: {e}") from None
        durations = default_durations(options["t_min"], options["t_max"], options["t_step"])
        sweep = sweep_duration(config, durations, modes, jobs)
        return sweep.to_frame(), {"errors": sweep.errors, **sweep.metadata}
    if command == "sweep-decoherence":
        grid = default_rate_grid(options["grid_max"], options["grid_points"])
        sweep = sweep_decoherence(config, grid, grid, jobs)
        return sweep.to_frame(), {"errors": sweep.errors, **sweep.metadata}
    if command == "check-closure":
        report = check_closure(config)
        print(", ".join(f"{name}: {size}" for name, size in report.sizes.items()))
        return report.to_frame(), {"sizes": report.sizes}
    if command == "check-equivalence":
        report = check_equivalence(config)
        return report.to_frame(), {"population_trend_ok": report.population_trend_ok,
                                   "cdd_trend_ok": report.cdd_trend_ok, "failures": report.failures}
    if command == "spectrum":
        return spectrum_table(config), {}
    if command == "pulses":
        pulses = config.pulse_set()
        times = np.linspace(pulses.window[0], pulses.window[1], config.samples + 1)
        return pulse_table(pulses, config.detunings(), times), {}
    raise ConfigError(f"unknown command '{command}'")


def _raise_for_failures(command: str, metadata: Dict[str, Any]):
    """Exit status for runs whose table was written but whose points or checks failed"""
    broken = [e for e in metadata.get("errors", []) if e["code"] in (InvariantViolation.code, PositivityLoss.code)]
    if broken:
        first = broken[0]
        raise InvariantViolation(first.get("check") or "positivity",
                                 f"{len(broken)} sweep point(s) broke a run invariant, first at index "
                                 f"{first['index']}: {first['message']}")
    failures = metadata.get("failures", [])
    if failures:
        raise CheckFailed(f"{command}: " + "; ".join(failures), details={"failures": failures})


def run_command(command: str, config: ScenarioConfig, options: Dict[str, Any], out: Optional[str],
                jobs: int) -> Path:
    """
    :raises InvariantViolation: after writing a sweep in which some point broke a run invariant.
    :raises CheckFailed: after writing an equivalence report that misses its limits.
    """
    frame, metadata = execute(command, config, options, jobs)
    manifest = RunManifest(command=command, config=config, config_hash=config.config_hash(), options=options,
                           metadata=metadata)
    path = emit_csv(frame, out or f"{command}.csv", manifest)
    _raise_for_failures(command, metadata)
    return path


def replay(path, out: Optional[str] = None, jobs: int = 1) -> Path:
    """Re-run the command recorded in a manifest and rewrite its output"""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        manifest = RunManifest(**data)
    except OSError as e:
        raise ConfigError(f"cannot read manifest {path}: {e.strerror or e}") from e
    except (ValueError, TypeError) as e:
        raise ConfigError(f"invalid manifest {path}: {e}") from None
    if manifest.command not in COMMANDS or manifest.command == "replay":
        raise ConfigError(f"manifest records unsupported command '{manifest.command}'")
    target = out or (manifest.outputs[0] if manifest.outputs else f"{manifest.command}.csv")
    logger.info(f"Replaying {manifest.command} [{manifest.config_hash[:12]}] into {target}")
    return run_command(manifest.command, manifest.config, manifest.options, target, jobs)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        command, config, args = parse_cli(argv)
        Log.init(args.log_level, args.log_file)
        if command == "replay":
            replay(args.manifest, args.out, args.jobs)
        else:
            run_command(command, config, _options(command, args), args.out, args.jobs)
    except ConfigError as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (InvariantViolation, PositivityLoss) as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    except CavityStaError as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
