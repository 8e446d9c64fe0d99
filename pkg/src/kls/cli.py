"""Command-line front end: scenario selection, JSON config parsing, and
bit-stable CSV/JSON trace emission."""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time as _time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .core import from_ns, to_ns
from .metrics import (
    instantaneous_frequency,
    position_error_series,
    reference_frequency,
    start_time_error,
)
from .node import DivergenceError
from .sim import HostSpec, ScenarioTrace, SimConfig, default_coupling_gain, run_scenario, scenario_preset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3

CSV_FILES = (
    "pulses.csv",
    "frequency.csv",
    "start_time_error.csv",
    "position_error.csv",
    "delays.csv",
)
OUTPUT_FILES = CSV_FILES + ("manifest.json",)

OUT_DIR_ENV = "KLS_OUT_DIR"


class ConfigError(ValueError):
    """Invalid configuration file, flag combination, or scenario name."""


_HOST_KEYS = {"duration_ns", "start_ns", "position_m"}
_TOP_KEYS = {
    "hosts", "sampling_hz", "gamma", "coupling_gain_hz", "sampling_factor",
    "pulses", "vector_cadence", "seed", "quantize_tx",
}


def config_from_dict(doc: dict) -> SimConfig:
    """Build a SimConfig from the JSON schema (times in nanoseconds)."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key: {unknown[0]!r}")
    if "hosts" not in doc or not isinstance(doc["hosts"], list):
        raise ConfigError("config requires a 'hosts' list")
    hosts = []
    for i, entry in enumerate(doc["hosts"]):
        if not isinstance(entry, dict):
            raise ConfigError(f"hosts[{i}] must be an object")
        unknown = sorted(set(entry) - _HOST_KEYS)
        if unknown:
            raise ConfigError(f"hosts[{i}]: unknown key: {unknown[0]!r}")
        try:
            duration = from_ns(float(entry["duration_ns"]))
            start = from_ns(float(entry["start_ns"]))
            position = tuple(float(x) for x in entry["position_m"])
        except KeyError as exc:
            raise ConfigError(f"hosts[{i}]: missing key: {exc.args[0]!r}") from None
        except (TypeError, ValueError):
            raise ConfigError(f"hosts[{i}]: non-numeric field") from None
        if len(position) != 3:
            raise ConfigError(f"hosts[{i}]: position_m must have three entries")
        hosts.append(HostSpec(duration, start, position))
    host_tuple = tuple(hosts)

    sampling = doc.get("sampling_hz", "inf")
    try:
        sampling_hz = math.inf if sampling == "inf" else float(sampling)
    except (TypeError, ValueError):
        raise ConfigError("sampling_hz must be a number or \"inf\"") from None
    coupling = doc.get("coupling_gain_hz")
    if coupling is None and host_tuple:
        coupling = default_coupling_gain(host_tuple)

    try:
        config = SimConfig(
            hosts=host_tuple,
            coupling_gain_hz=float(coupling),
            sampling_hz=sampling_hz,
            gamma=float(doc.get("gamma", 0.0)),
            sampling_factor=int(doc.get("sampling_factor", 8)),
            pulse_budget=int(doc.get("pulses", 2000)),
            vector_cadence=int(doc.get("vector_cadence", 1)),
            rng_seed=int(doc.get("seed", 0)),
            quantize_tx=bool(doc.get("quantize_tx", False)),
        )
        config.validate()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return config


def parse_config(path) -> SimConfig:
    """Load a JSON scenario configuration file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    return config_from_dict(doc)


def config_to_dict(config: SimConfig) -> dict:
    """Inverse of config_from_dict; round-trips bitwise through JSON."""
    return {
        "hosts": [
            {
                "duration_ns": to_ns(spec.initial_duration),
                "start_ns": to_ns(spec.initial_start),
                "position_m": list(spec.position),
            }
            for spec in config.hosts
        ],
        "sampling_hz": "inf" if math.isinf(config.sampling_hz) else config.sampling_hz,
        "gamma": config.gamma,
        "coupling_gain_hz": config.coupling_gain_hz,
        "sampling_factor": config.sampling_factor,
        "pulses": config.pulse_budget,
        "vector_cadence": config.vector_cadence,
        "seed": config.rng_seed,
        "quantize_tx": config.quantize_tx,
    }


def _write_csv(path: Path, header, rows) -> None:
    # LF endings and str() floats: Python's shortest round-trip repr keeps
    # the files lossless and byte-stable across runs.
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def write_outputs(trace: ScenarioTrace, out_dir, *, f_ref: float, runtime_s: float) -> list[Path]:
    """Emit the five CSV series and the JSON run manifest for one trace."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = len(trace.hosts)

    rows = []
    for q, records in enumerate(trace.hosts):
        for i in range(records.starts.size):
            rows.append((q, i, float(records.starts[i]), float(records.durations[i])))
    _write_csv(out_dir / "pulses.csv", ("host", "index", "start_s", "duration_s"), rows)

    rows = []
    for q in range(n):
        times, freq, err = instantaneous_frequency(trace, q, f_ref=f_ref)
        rows.extend(
            (q, float(t), float(f), float(e)) for t, f, e in zip(times, freq, err))
    _write_csv(out_dir / "frequency.csv", ("host", "time_s", "freq_hz", "freq_err_hz"), rows)

    rows = []
    for q in range(n):
        times, err = start_time_error(trace, q)
        rows.extend((q, float(t), float(e)) for t, e in zip(times, err))
    _write_csv(out_dir / "start_time_error.csv", ("host", "time_s", "error_s"), rows)

    rows = []
    for q in range(n):
        times, err = position_error_series(trace, q)
        rows.extend((q, float(t), float(e)) for t, e in zip(times, err))
    _write_csv(out_dir / "position_error.csv", ("host", "time_s", "error"), rows)

    rows = []
    for q, records in enumerate(trace.hosts):
        final = records.delay_estimates[-1]
        for row in range(n):
            for col in range(n):
                rows.append((q, row, col, float(final[row, col])))
    _write_csv(out_dir / "delays.csv", ("host", "row", "col", "delay_s"), rows)

    manifest = {
        "version": __version__,
        "config": config_to_dict(trace.config),
        "f_ref_hz": f_ref,
        "outputs": list(CSV_FILES),
        "runtime_s": runtime_s,
    }
    with open(out_dir / "manifest.json", "w", newline="") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")

    return [out_dir / name for name in OUTPUT_FILES]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kls",
        description="Simulate pulse-coupled frequency/phase synchronization "
                    "with anchor-free relative localization.",
    )
    parser.add_argument("--scenario", choices=("A", "B", "C"),
                        help="built-in scenario preset")
    parser.add_argument("--config", metavar="PATH",
                        help="JSON scenario description (times in ns); "
                             "exclusive with --scenario")
    parser.add_argument("--out", metavar="DIR",
                        help=f"output directory (default: ${OUT_DIR_ENV} or ./runs, "
                             "plus the scenario label)")
    parser.add_argument("--pulses", type=int, help="pulses to simulate per host")
    parser.add_argument("--seed", type=int, help="RNG seed for receiver grid offsets")
    parser.add_argument("--coupling-gain-hz", type=float, help="Kuramoto coupling gain K")
    parser.add_argument("--gamma", type=float, help="drift compensation factor")
    parser.add_argument("--fs-hz", metavar="HZ", help='sampling rate in Hz, or "inf"')
    parser.add_argument("--sampling-factor", type=int, help="phase sampling factor S")
    parser.add_argument("--vector-cadence", type=int,
                        help="broadcast the phase vector on every k-th pulse")
    parser.add_argument("--f-ref-hz", type=float,
                        help="reference for frequency.csv (default: host 0 anchor)")
    parser.add_argument("--quantize-tx", action="store_true",
                        help="also snap transmit instants to the sample grid "
                             "(freezes per-pair quantization error; see README)")
    return parser


def _resolve_config(args) -> SimConfig:
    if args.scenario and args.config:
        raise ConfigError("give either --scenario or --config, not both")
    if args.scenario:
        config = scenario_preset(args.scenario)
    elif args.config:
        config = parse_config(args.config)
    else:
        raise ConfigError("one of --scenario or --config is required")

    overrides = {}
    if args.pulses is not None:
        overrides["pulse_budget"] = args.pulses
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    if args.coupling_gain_hz is not None:
        overrides["coupling_gain_hz"] = args.coupling_gain_hz
    if args.gamma is not None:
        overrides["gamma"] = args.gamma
    if args.fs_hz is not None:
        try:
            overrides["sampling_hz"] = math.inf if args.fs_hz.lower() == "inf" else float(args.fs_hz)
        except ValueError:
            raise ConfigError(f"--fs-hz: expected a number or 'inf', got {args.fs_hz!r}") from None
    if args.sampling_factor is not None:
        overrides["sampling_factor"] = args.sampling_factor
    if args.vector_cadence is not None:
        overrides["vector_cadence"] = args.vector_cadence
    if args.quantize_tx:
        overrides["quantize_tx"] = True
    if overrides:
        config = replace(config, **overrides)
        try:
            config.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return config


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse has printed the usage text already
        return int(exc.code or 0)

    try:
        config = _resolve_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG

    label = args.scenario or (Path(args.config).stem if args.config else "run")
    if args.out:
        out_dir = Path(args.out)
    else:
        out_dir = Path(os.environ.get(OUT_DIR_ENV, "runs")) / label

    started = _time.perf_counter()
    try:
        trace = run_scenario(config)
    except DivergenceError as exc:
        print(f"error: scenario diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    runtime = _time.perf_counter() - started

    f_ref = args.f_ref_hz if args.f_ref_hz is not None else reference_frequency(trace)
    write_outputs(trace, out_dir, f_ref=f_ref, runtime_s=runtime)
    print(f"wrote {', '.join(OUTPUT_FILES)} to {out_dir}")
    return EXIT_OK


def console_entry() -> None:
    sys.exit(main())
