"""Command-line driver: one subcommand per experiment plus ``sweep``.

Output starts with a single header line carrying the timestamp; everything
after it depends only on the configuration, so repeated runs and different
worker counts give byte-identical data sections.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from importlib import resources
from importlib.metadata import PackageNotFoundError, version

import jsonschema
import numpy as np
import yaml

from .adiabatic import Schedule, propagate, semiclassical_limit_experiment
from .errors import VacuumBerryError
from .hamiltonians import SingleModeParams, TwoModeParams, phase_shifted_jc_family
from .holonomy import (
    analytic_phase_semiclassical,
    analytic_phase_single_mode,
    analytic_phase_two_mode,
    cap_solid_angle,
    fock_rotation_phase,
    mixed_state_phase,
    phase_distance,
    semiclassical_loop_phase,
    single_mode_loop_phase,
    two_mode_loop_phase,
    wrap_phase,
)
from .loops import phi_circle
from .spectral import DressedLabel, dressed_state

KINDS = ("semiclassical", "single-mode", "two-mode", "mixed", "adiabatic",
         "semiclassical-limit")
COLUMNS = ("kind", "delta", "lambda", "nu", "alpha", "beta", "theta", "n", "nprime", "sign",
           "nodes", "cutoff_a", "cutoff_b", "duration", "method", "wrapped", "unwrapped",
           "winding", "visibility", "analytic", "abs_error", "min_gap", "fidelity", "drift",
           "leakage", "wall_ms")
ENV_WORKERS = "VACUUM_BERRY_WORKERS"
EXIT_CONFIG, EXIT_PHYSICS, EXIT_IO = 2, 3, 4

DEFAULTS = {
    "semiclassical": {"lambda": 1.0, "sign": -1, "nodes": 2000},
    "single-mode": {"delta": 0.0, "lambda": 1.0, "nu": 1.0, "nodes": 2000},
    "two-mode": {"lambda": 1.0, "nu": 1.0, "nodes": 4000},
    "mixed": {"n": 0, "nprime": 0},
    "adiabatic": {"delta": 0.0, "lambda": 1.0, "nu": 1.0, "steps_per_time": 200.0,
                  "ramp": "smooth"},
    "semiclassical-limit": {"beta": 0.0, "lambda": 1.0, "nu": 1.0, "duration": 6400.0,
                            "steps_per_time": 2.0, "ramp": "smooth"},
}


class ConfigError(Exception):
    pass


def _schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("config_schema.json").read_text())


def _version() -> str:
    try:
        return version("vacuum-berry")
    except PackageNotFoundError:
        return "unknown"


# --- configuration -------------------------------------------------------------

def _validate(cfg: dict, what: str) -> None:
    try:
        jsonschema.validate(cfg, _schema())
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{what}: {loc}: {exc.message}") from None


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return cfg


def _axis_values(name: str, axis) -> list:
    if isinstance(axis, dict):
        return [float(x) for x in np.linspace(axis["start"], axis["stop"], axis["count"])]
    if not axis:
        raise ConfigError(f"grid axis {name!r} is empty")
    return list(axis)


def expand_points(cfg: dict) -> list[dict]:
    """Concrete per-point configs in row-major grid order (first axis slowest)."""
    if cfg["kind"] != "sweep":
        return [cfg]
    base = {k: v for k, v in cfg.items() if k not in ("kind", "experiment", "grid")}
    names = list(cfg["grid"])
    values = [_axis_values(k, cfg["grid"][k]) for k in names]
    points = []
    for combo in itertools.product(*values):
        point = {"kind": cfg["experiment"], **base, **dict(zip(names, combo))}
        _validate(point, f"grid point {dict(zip(names, combo))}")
        points.append(point)
    return points


def _sign(value) -> int:
    return {"+": 1, "-": -1}.get(value, value)


# --- experiments -----------------------------------------------------------------

def _label(cfg, with_nprime=False) -> DressedLabel:
    return DressedLabel(cfg["n"], _sign(cfg["sign"]), cfg["nprime"] if with_nprime else None)


def _phase_fields(res) -> dict:
    return {"method": res.method, "wrapped": res.wrapped, "unwrapped": res.unwrapped,
            "winding": res.winding, "visibility": res.visibility}


def _run_semiclassical(cfg, seed):
    sign = _sign(cfg["sign"])
    res = semiclassical_loop_phase(cfg["delta"], cfg["lambda"], cfg["alpha"], sign,
                                   cfg["nodes"])
    analytic = -sign * analytic_phase_semiclassical(cfg["delta"], cfg["lambda"], cfg["alpha"])
    return {**_phase_fields(res), "analytic": analytic,
            "abs_error": phase_distance(res.wrapped, analytic),
            "min_gap": res.extras["min_gap"]}


def _single_params(cfg) -> SingleModeParams:
    return SingleModeParams.from_detuning(cfg["delta"], cfg["lambda"], cfg["nu"])


def _run_single_mode(cfg, seed):
    label = _label(cfg)
    cfg.setdefault("cutoff_a", label.n + 8)
    res = single_mode_loop_phase(_single_params(cfg), label, cfg["cutoff_a"], cfg["nodes"],
                                 gauge_seed=seed)
    analytic = analytic_phase_single_mode(cfg["delta"], cfg["lambda"], label.n, label.sign)
    return {**_phase_fields(res), "analytic": analytic,
            "abs_error": abs(res.unwrapped - analytic), "min_gap": res.extras["min_gap"]}


def _run_two_mode(cfg, seed):
    label = _label(cfg, with_nprime=True)
    need = max(8, label.n + label.nprime + 2)
    cfg.setdefault("cutoff_a", need)
    cfg.setdefault("cutoff_b", need)
    params = TwoModeParams(cfg["nu"], cfg["lambda"], cfg["theta"])
    res = two_mode_loop_phase(params, label, cfg["cutoff_a"], cfg["cutoff_b"], cfg["nodes"],
                              gauge_seed=seed)
    analytic = analytic_phase_two_mode(cap_solid_angle(cfg["theta"]), label.n, label.nprime)
    return {**_phase_fields(res), "analytic": analytic,
            "abs_error": abs(res.unwrapped - analytic), "min_gap": res.extras.get("min_gap")}


def _run_mixed(cfg, seed):
    omega = cap_solid_angle(cfg["theta"])
    n, m = cfg["n"], cfg["nprime"]
    res = mixed_state_phase([0.5, 0.5], [fock_rotation_phase(n, m, omega),
                                         fock_rotation_phase(n + 1, m, omega)])
    analytic = analytic_phase_two_mode(omega, n, m)
    return {**_phase_fields(res), "analytic": analytic,
            "abs_error": phase_distance(res.wrapped, analytic)}


def _run_adiabatic(cfg, seed):
    label = _label(cfg)
    cfg.setdefault("cutoff_a", label.n + 8)
    params = _single_params(cfg)
    seed_state = dressed_state(label, params, cfg["cutoff_a"])
    space = seed_state.space
    sector = np.flatnonzero(space.excitations() == label.n + 1)
    family = phase_shifted_jc_family(params, cfg["cutoff_a"], sector)
    phi0 = seed_state.amplitudes[sector]
    n_a = np.array([space.label(i)[1] for i in sector])
    schedule = Schedule(phi_circle(64), cfg["duration"], cfg["steps_per_time"], cfg["ramp"])
    res = propagate(family, schedule, phi0, frame=lambda phi: np.exp(-1j * phi * n_a) * phi0)
    analytic = analytic_phase_single_mode(cfg["delta"], cfg["lambda"], label.n, label.sign)
    wrapped = wrap_phase(res.geometric)
    return {"method": "evolution", "wrapped": wrapped, "unwrapped": res.geometric,
            "winding": int(round((res.geometric - wrapped) / (2 * math.pi))), "visibility": 1.0,
            "analytic": analytic, "abs_error": abs(res.geometric - analytic),
            "fidelity": res.fidelity, "drift": res.drift}


def _run_semiclassical_limit(cfg, seed):
    rep = semiclassical_limit_experiment(
        cfg["alpha"], cfg["beta"], cfg["theta"], cfg.get("cutoff_a"), cfg.get("cutoff_b"),
        cfg["duration"], cfg["steps_per_time"], cfg["nu"], cfg["lambda"], cfg["ramp"])
    phase = rep.field_phase_a
    analytic = rep.omega / 2
    return {"method": "evolution", "wrapped": phase, "unwrapped": phase, "winding": 0,
            "visibility": 1.0, "analytic": analytic,
            "abs_error": phase_distance(phase, analytic) if math.isfinite(phase) else None,
            "fidelity": rep.fidelity, "drift": rep.drift, "leakage": rep.leakage}


RUNNERS = {
    "semiclassical": _run_semiclassical,
    "single-mode": _run_single_mode,
    "two-mode": _run_two_mode,
    "mixed": _run_mixed,
    "adiabatic": _run_adiabatic,
    "semiclassical-limit": _run_semiclassical_limit,
}


def evaluate(point: dict, seed: int | None = None, timing: bool = False) -> dict:
    """One record for one fully specified point; module errors propagate."""
    cfg = {**DEFAULTS[point["kind"]], **point}
    t0 = time.perf_counter()
    fields = RUNNERS[cfg["kind"]](cfg, seed)
    wall = (time.perf_counter() - t0) * 1e3 if timing else None
    record = {c: cfg.get(c) for c in COLUMNS}
    if record["sign"] is not None:
        record["sign"] = _sign(record["sign"])
    record.update(fields)
    record["wall_ms"] = wall
    return record


def _evaluate_safe(job):
    point, seed, timing = job
    try:
        return evaluate(point, seed, timing), None
    except VacuumBerryError as exc:
        record = {c: point.get(c) for c in COLUMNS}
        record["method"] = "error"
        return record, f"{type(exc).__name__}: {exc}"


# --- output ------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_value(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else format(v, ".17g")
    return value


def render(records: list[dict], fmt: str) -> str:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if fmt == "jsonl":
        lines = [json.dumps({"generator": "vacuum-berry", "version": _version(),
                             "generated": stamp})]
        lines += [json.dumps({c: _json_value(r.get(c)) for c in COLUMNS}) for r in records]
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    buf.write(f"# vacuum-berry {_version()} generated {stamp}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in records:
        writer.writerow([_fmt(r.get(c)) for c in COLUMNS])
    return buf.getvalue()


def data_section(text: str) -> str:
    """Everything after the header line."""
    return text.split("\n", 1)[1]


# --- argument handling ---------------------------------------------------------------

OVERRIDES = (
    ("delta", float), ("lambda", float), ("nu", float), ("alpha", float), ("beta", float),
    ("theta", float), ("n", int), ("nprime", int), ("sign", str), ("nodes", int),
    ("cutoff_a", int), ("cutoff_b", int), ("duration", float), ("steps_per_time", float),
    ("ramp", str),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vacuum-berry",
        description="Geometric phases of a qubit coupled to quantized field modes.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("schema", help="print the JSON schema of config files")
    for kind in (*KINDS, "sweep"):
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "jsonl"))
        p.add_argument("--workers", type=int, help=f"worker processes (env {ENV_WORKERS})")
        p.add_argument("--fail-fast", action="store_true",
                       help="stop a sweep at the first failing point")
        p.add_argument("--seed", type=int,
                       help="randomly rephase every loop node before forming wrapped phases")
        p.add_argument("--timing", action="store_true",
                       help="fill the wall_ms column (makes output run-dependent)")
        if kind == "sweep":
            p.add_argument("--experiment", choices=KINDS)
        for name, _ in OVERRIDES:
            p.add_argument("--" + name.replace("_", "-"), dest=name, type=str, default=None)
    return parser


def _coerce(name: str, text: str, kind):
    if name == "sign":
        if text in ("+", "-"):
            return text
        kind = int
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"--{name.replace('_', '-')}: cannot read {text!r}") from None


def resolve_config(args) -> dict:
    cfg = load_config(args.config)
    if "kind" in cfg and cfg["kind"] != args.command:
        raise ConfigError(f"config kind {cfg['kind']!r} does not match subcommand "
                          f"{args.command!r}")
    cfg["kind"] = args.command
    if getattr(args, "experiment", None):
        cfg["experiment"] = args.experiment
    for name, kind in OVERRIDES:
        text = getattr(args, name)
        if text is not None:
            cfg[name] = _coerce(name, text, kind)
            if isinstance(cfg.get("grid"), dict):
                cfg["grid"].pop(name, None)
    if args.out is not None:
        cfg["out"] = args.out
    if args.format is not None:
        cfg["format"] = args.format
    _validate(cfg, "config")
    return cfg


def resolve_workers(flag: int | None) -> int:
    if flag is not None:
        workers = flag
    else:
        env = os.environ.get(ENV_WORKERS)
        try:
            workers = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"{ENV_WORKERS}={env!r} is not an integer") from None
    if workers < 1:
        raise ConfigError("worker count must be >= 1")
    return workers


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "schema":
        print(json.dumps(_schema(), indent=2))
        return 0
    try:
        cfg = resolve_config(args)
        points = expand_points(cfg)
        workers = resolve_workers(args.workers)
    except ConfigError as exc:
        print(f"vacuum-berry: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    seeds = [None if args.seed is None else args.seed + i for i in range(len(points))]
    jobs = [(p, s, args.timing) for p, s in zip(points, seeds)]
    records, failures = [], []
    if workers > 1 and len(jobs) > 1 and not args.fail_fast:
        with ProcessPoolExecutor(min(workers, len(jobs))) as pool:
            outcomes = list(pool.map(_evaluate_safe, jobs))
    else:
        outcomes = []
        for job in jobs:
            outcomes.append(_evaluate_safe(job))
            if args.fail_fast and outcomes[-1][1] is not None:
                break
    for i, (record, error) in enumerate(outcomes):
        if error is not None:
            failures.append(error)
            print(f"vacuum-berry: point {i}: {error}", file=sys.stderr)
            if cfg["kind"] != "sweep":
                return EXIT_PHYSICS
        records.append(record)

    text = render(records, cfg.get("format", "csv"))
    out = cfg.get("out")
    try:
        if out is None:
            sys.stdout.write(text)
        else:
            with open(out, "w", newline="") as fh:
                fh.write(text)
    except OSError as exc:
        print(f"vacuum-berry: cannot write {out}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    return EXIT_PHYSICS if failures else 0


def main() -> None:
    sys.exit(run())
