"""Command-line front end: run experiments, write CSV/JSON with a manifest.

Configuration comes from an optional flat key=value file plus command-line
flags; flags win.  Every run requires an explicit seed so outputs are
reproducible byte for byte (timestamps excepted).

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import __version__
from .core import FaultLocation, DEFAULT_FAULT_LOCATIONS
from .errors import ConfigurationError
from .experiments import (
    ExperimentConfig,
    FaultInjection,
    OracleScenario,
    config_violations,
    cost_comparison,
    exhaustive_oracle,
    memory_experiment,
    threshold_sweep,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

SWEEP_HEADER = ["tau", "level", "trials", "failures", "rate", "ci_low", "ci_high", "total_cost"]
COST_HEADER = ["trial", "cost_fanout", "cost_transversal",
               "faulty_targets_fanout", "faulty_targets_transversal"]

_DEFAULT_TAU_GRID = "0.001,0.003,0.01,0.03,0.1"
_DEFAULT_LEVELS = "0,1"

# Every key a config file may carry, with its parser.
_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_bool(raw: str) -> bool:
    try:
        return _BOOL[raw.strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {raw!r}")


def _parse_int_list(raw: str) -> List[int]:
    return [int(x) for x in raw.split(",") if x.strip() != ""]


def _parse_float_list(raw: str) -> List[float]:
    return [float(x) for x in raw.split(",") if x.strip() != ""]


_KEY_PARSERS = {
    "tau": float,
    "tau_ancilla": float,
    "level": int,
    "n": int,
    "rounds": int,
    "epochs": int,
    "trials": int,
    "seed": int,
    "mode": str,
    "fault_locations": str,
    "workers": int,
    "tau_grid": _parse_float_list,
    "levels": _parse_int_list,
    "format": str,
    "inject_control_bit": _parse_int_list,
    "inject_target_bit": _parse_int_list,
    "inject_control_phase": _parse_int_list,
    "inject_target_phase": _parse_int_list,
    "source_bit_probability": float,
    "live_tau": float,
    "fanout_source": int,
    "apply_e": _parse_bool,
    "oracle_location": str,
    "ancilla_faults": _parse_bool,
}


def read_config_file(path: Path) -> Tuple[Dict, List[str]]:
    """Parse a flat key=value file into typed values plus violations."""
    values: Dict = {}
    problems: List[str] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            problems.append(f"line {lineno}: expected key=value, got {stripped!r}")
            continue
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        parser = _KEY_PARSERS.get(key)
        if parser is None:
            problems.append(f"unknown key: {key}")
            continue
        try:
            values[key] = parser(raw)
        except ValueError:
            problems.append(f"invalid value for {key}: {raw!r}")
    return values, problems


def _parse_locations(raw: str) -> frozenset:
    names = [x.strip() for x in raw.split(",") if x.strip()]
    locations = set()
    for name in names:
        try:
            locations.add(FaultLocation(name))
        except ValueError:
            raise ValueError(name)
    return frozenset(locations)


def validate_config(values: Dict) -> Tuple[Optional[ExperimentConfig], List[str]]:
    """Normalize raw key/value settings into a fully defaulted config.

    Returns the config and a complete list of violations; the config is
    None whenever the list is nonempty.
    """
    problems: List[str] = []
    locations = DEFAULT_FAULT_LOCATIONS
    if "fault_locations" in values:
        try:
            locations = _parse_locations(values["fault_locations"])
        except ValueError as err:
            problems.append(f"fault_locations: unknown location {err}")
    if "tau" not in values:
        problems.append("tau is required")
    cfg = None
    if not problems:
        cfg = ExperimentConfig(
            tau=values["tau"],
            trials=values.get("trials", 10000),
            seed=values.get("seed"),
            tau_ancilla=values.get("tau_ancilla"),
            level=values.get("level", 1),
            n=values.get("n", 3),
            rounds=values.get("rounds", 1),
            epochs=values.get("epochs", 3),
            mode=values.get("mode", "tracking"),
            fault_locations=locations,
            workers=values.get("workers", 1),
        )
        problems = config_violations(cfg)
        if problems:
            cfg = None
    return cfg, problems


def _manifest(values: Dict, outputs: List[str]) -> Dict:
    echo = {}
    for key, value in sorted(values.items()):
        echo[key] = sorted(v.value for v in value) if isinstance(value, frozenset) else value
    return {
        "tool": "ftsim",
        "version": __version__,
        "seed": values.get("seed"),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "config": echo,
        "outputs": outputs,
    }


def _csv_text(header: List[str], rows: List[List]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buffer.getvalue()


def _run_memory(values: Dict):
    cfg, problems = validate_config(values)
    if problems:
        return None, problems
    result = memory_experiment(cfg)
    document = {"config": cfg.echo(), "result": result.to_dict()}
    row = [cfg.tau, cfg.level, result.trials, result.failures,
           result.logical_failure_rate, result.ci95[0], result.ci95[1],
           result.total_cost]
    return (document, SWEEP_HEADER, [row]), []


def _run_sweep(values: Dict):
    grid = values.get("tau_grid", _parse_float_list(_DEFAULT_TAU_GRID))
    levels = values.get("levels", _parse_int_list(_DEFAULT_LEVELS))
    base_values = dict(values)
    base_values.setdefault("tau", grid[0] if grid else 0.0)
    cfg, problems = validate_config(base_values)
    if problems:
        return None, problems
    sweep = threshold_sweep(grid, levels, cfg)
    rows = [[r.tau, r.level, r.trials, r.failures, r.rate, r.ci_low, r.ci_high,
             r.total_cost] for r in sweep.rows]
    document = {
        "config": {**cfg.echo(), "tau_grid": list(grid), "levels": list(levels)},
        "rows": [dict(zip(SWEEP_HEADER, row)) for row in rows],
        "pseudo_thresholds": list(sweep.pseudo_thresholds),
        "ci_method": sweep.ci_method,
    }
    return (document, SWEEP_HEADER, rows), []


def _run_cost(values: Dict):
    problems = []
    trials = values.get("trials", 1000)
    if trials < 1:
        problems.append("trials must be >= 1")
    injection = FaultInjection(
        control_bit=tuple(values.get("inject_control_bit", (0,))),
        target_bit=tuple(values.get("inject_target_bit", ())),
        control_phase=tuple(values.get("inject_control_phase", ())),
        target_phase=tuple(values.get("inject_target_phase", ())),
        source_bit_probability=values.get("source_bit_probability", 0.0),
        live_tau=values.get("live_tau", 0.0),
    )
    if not 0.0 <= injection.source_bit_probability <= 1.0:
        problems.append("source_bit_probability out of [0,1]")
    if not 0.0 <= injection.live_tau <= 1.0:
        problems.append("live_tau out of [0,1]")
    if problems:
        return None, problems
    result = cost_comparison(injection, trials, values["seed"],
                             n=values.get("n", 3),
                             fanout_source=values.get("fanout_source", 0),
                             apply_e=values.get("apply_e", True))
    rows = [[t, *entry] for t, entry in enumerate(result.per_trial)]
    document = {
        "config": {k: list(v) if isinstance(v, tuple) else v
                   for k, v in vars(injection).items()},
        "result": {
            "trials": result.trials,
            "cost_fanout": result.cost_fanout,
            "cost_transversal": result.cost_transversal,
            "mean_cost_fanout": result.mean_cost_fanout,
            "mean_cost_transversal": result.mean_cost_transversal,
            "faulty_targets_fanout": result.faulty_targets_fanout,
            "faulty_targets_transversal": result.faulty_targets_transversal,
            "dominance_violations": result.dominance_violations,
        },
    }
    return (document, COST_HEADER, rows), []


def _run_oracle(values: Dict):
    problems = []
    if "tau" not in values:
        problems.append("tau is required")
    if problems:
        return None, problems
    scenario = OracleScenario(
        tau=values["tau"],
        tau_ancilla=values.get("tau_ancilla", 0.0),
        level=values.get("level", 1),
        n=values.get("n", 3),
        rounds=values.get("rounds", 1),
        epochs=values.get("epochs", 1),
        mode=values.get("mode", "tracking"),
        fault_location=values.get("oracle_location",
                                  FaultLocation.BEFORE_TERMINATE.value),
        ancilla_faults=values.get("ancilla_faults", False),
    )
    result = exhaustive_oracle(scenario)
    document = {"config": vars(scenario), "result": result.to_dict()}
    header = ["exact_rate", "site_count", "pattern_count", "failing_patterns"]
    rows = [[result.exact_rate, result.site_count, result.pattern_count,
             result.failing_patterns]]
    return (document, header, rows), []


_SUBCOMMANDS = {
    "memory": (_run_memory, "json"),
    "sweep": (_run_sweep, "csv"),
    "cost": (_run_cost, "csv"),
    "oracle": (_run_oracle, "json"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftsim",
        description="Seeded fault-injection experiments on redundant processes.")
    parser.add_argument("subcommand", choices=sorted(_SUBCOMMANDS))
    parser.add_argument("--config", type=Path, help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="master seed (required)")
    parser.add_argument("--tau", type=float, help="per-opportunity fault probability")
    parser.add_argument("--level", type=int, choices=(0, 1, 2), help="encoding level")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials")
    parser.add_argument("--epochs", type=int, help="syndrome extractions per detection round")
    parser.add_argument("--mode", choices=("tracking", "direct"), help="correction mode")
    parser.add_argument("--out", type=Path, help="output file (stdout when omitted)")
    parser.add_argument("--format", choices=("csv", "json"), dest="fmt",
                        help="output format (default depends on subcommand)")
    return parser


def _write_output(payload: str, out: Optional[Path]) -> List[str]:
    if out is None:
        sys.stdout.write(payload)
        return []
    out.write_text(payload, encoding="utf-8")
    return [str(out)]


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    values: Dict = {}
    if args.config is not None:
        try:
            file_values, problems = read_config_file(args.config)
        except OSError as err:
            print(f"i/o error: cannot read config: {err}", file=sys.stderr)
            return EXIT_IO
        if problems:
            for problem in problems:
                print(f"config error: {problem}", file=sys.stderr)
            return EXIT_CONFIG
        values.update(file_values)

    for key in ("seed", "tau", "level", "trials", "epochs", "mode"):
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag

    if values.get("seed") is None:
        print("config error: seed is required", file=sys.stderr)
        return EXIT_CONFIG

    runner, default_format = _SUBCOMMANDS[args.subcommand]
    try:
        produced, problems = runner(values)
    except ConfigurationError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    if problems:
        for problem in problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG

    document, header, rows = produced
    fmt = args.fmt or values.get("format") or default_format
    out: Optional[Path] = args.out
    try:
        if fmt == "csv":
            written = _write_output(_csv_text(header, rows), out)
            if out is not None:
                manifest_path = Path(str(out) + ".manifest.json")
                manifest = _manifest(values, written)
                manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                         encoding="utf-8")
        else:
            document = dict(document)
            document["manifest"] = _manifest(values, [str(out)] if out else [])
            _write_output(json.dumps(document, indent=2, sort_keys=True) + "\n", out)
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
