"""Command line: validate, run, sweep and schedule.

Exit codes: 0 clean, 1 constraint violation (run) or infeasible schedule
(schedule), 2 configuration or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from . import des
from .andl import OVERRIDE_KEYS, AndlError, Infeasible, format_schedule, generate_tt_schedule, load
from .andl.validate import parse_time
from .results import writers
from .results.constraints import ConstraintFileError, load_constraints
from .simulation import Simulation

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2

MAX_REPORTED = 10
SWEEP_COLUMNS = ["value", "seed", "stream", "class", "max_latency_ps", "jitter_ps"]


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    scenario: str
    duration: Optional[int] = None
    seed: Optional[int] = None
    overrides: dict = field(default_factory=dict)
    constraints: Optional[str] = None
    out: Optional[str] = None
    formats: tuple = ("csv",)
    pcap: bool = False
    replicas: int = 1

    def __post_init__(self):
        if self.duration is not None and self.duration <= 0:
            raise ConfigError("duration must be positive")
        if self.replicas < 1:
            raise ConfigError("replicas must be at least 1")


def builtin_scenarios() -> dict[str, Path]:
    root = resources.files("ivnsim") / "scenarios"
    return {Path(p.name).stem: Path(str(p)) for p in root.iterdir() if p.name.endswith(".andl")}


def resolve_scenario(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    builtin = builtin_scenarios().get(name)
    if builtin is not None:
        return builtin
    raise ConfigError(f"{name}: no such file or bundled scenario")


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r} is not of the form key=value")
        out[key.strip()] = value.strip()
    return out


def _load(cfg: RunConfig):
    return load(resolve_scenario(cfg.scenario), cfg.overrides)


def simulate_config(cfg: RunConfig, seed: Optional[int] = None):
    """Run one configuration and return the result (raises on config errors)."""
    model = _load(cfg)
    rules = load_constraints(cfg.constraints) if cfg.constraints else None
    sim = Simulation(model, seed=seed if seed is not None else cfg.seed, duration=cfg.duration,
                     constraints=rules, capture=cfg.pcap)
    return sim.run()


def write_outputs(result, cfg: RunConfig, stem: str = "stats") -> list[Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fmt in cfg.formats:
        text = result.csv() if fmt == "csv" else result.json()
        path = out / f"{stem}.{fmt}"
        path.write_text(text, encoding="utf-8")
        written.append(path)
    if cfg.pcap:
        written.append(writers.write_pcap(result.pcap, out / f"{stem}.pcap"))
    if result.violations:
        path = out / f"{stem}.violations.txt"
        path.write_text("".join(v.describe() + "\n" for v in result.violations), encoding="utf-8")
        written.append(path)
    return written


# -- commands ---------------------------------------------------------------


def cmd_validate(args) -> int:
    model = load(resolve_scenario(args.scenario), parse_overrides(args.override))
    print(f"{model.name}: {len(model.devices)} devices, {len(model.segments)} segments, "
          f"{len(model.messages)} messages")
    return EXIT_OK


def _config(args) -> RunConfig:
    return RunConfig(
        scenario=args.scenario,
        duration=parse_time(args.until) if args.until else None,
        seed=args.seed,
        overrides=parse_overrides(args.override),
        constraints=args.constraints,
        out=args.out,
        formats=tuple(args.format or ["csv"]),
        pcap=args.pcap,
        replicas=getattr(args, "replicas", 1),
    )


def cmd_run(args) -> int:
    cfg = _config(args)
    result = simulate_config(cfg)
    if cfg.out:
        for path in write_outputs(result, cfg):
            print(f"wrote {path}")
    else:
        for fmt in cfg.formats:
            sys.stdout.write(result.csv() if fmt == "csv" else result.json())
    for v in result.violations[:MAX_REPORTED]:
        print(v.describe(), file=sys.stderr)
    if len(result.violations) > MAX_REPORTED:
        print(f"... {len(result.violations)} violations in total", file=sys.stderr)
    if result.stop is not None:
        print(f"stopped at {result.summary.final_time} ps by rule #{result.stop.rule}", file=sys.stderr)
    return EXIT_VIOLATION if result.violations else EXIT_OK


def _sweep_one(job: tuple) -> tuple:
    """Worker: one isolated run; returns (value, seed, rows, exit code, message)."""
    cfg, param, value, seed = job
    cfg = RunConfig(**{**cfg.__dict__, "overrides": {**cfg.overrides, param: value}})
    try:
        result = simulate_config(cfg, seed)
    except (AndlError, ConfigError, ConstraintFileError, OSError, ValueError) as exc:
        return value, seed, [], EXIT_CONFIG, str(exc)
    rows = []
    for key in sorted(result.collector.streams):
        s = result.collector.streams[key]
        if s.cls == "be" or not s.count:
            continue
        rows.append([value, result.seed, key, s.cls, s.max, s.jitter])
    code = EXIT_VIOLATION if result.violations else EXIT_OK
    return value, result.seed, rows, code, ""


def sweep(cfg: RunConfig, param: str, values: list[str], jobs: int = 1) -> tuple[int, str]:
    """Run every (value, replica) and merge into one table in a fixed order."""
    if param not in OVERRIDE_KEYS:
        raise ConfigError(f"unknown sweep parameter {param!r}; expected one of {', '.join(OVERRIDE_KEYS)}")
    base_seed = cfg.seed if cfg.seed is not None else _load(cfg).seed or 0
    work = [(cfg, param, v, base_seed + r) for v in values for r in range(cfg.replicas)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            done = list(pool.map(_sweep_one, work))
    else:
        done = [_sweep_one(w) for w in work]
    for value, seed, _, code, message in done:
        if code == EXIT_CONFIG:
            raise ConfigError(f"{param}={value} seed {seed}: {message}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for _, _, rows, _, _ in done:
        w.writerows(rows)
    code = max(code for _, _, _, code, _ in done)
    return code, buf.getvalue()


def cmd_sweep(args) -> int:
    cfg = _config(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values is empty")
    code, table = sweep(cfg, args.param, values, args.jobs)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "sweep.csv"
        path.write_text(table, encoding="utf-8")
        print(f"wrote {path}")
    else:
        sys.stdout.write(table)
    return code


def cmd_schedule(args) -> int:
    model = load(resolve_scenario(args.scenario), parse_overrides(args.override))
    try:
        result = generate_tt_schedule(model)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    sys.stdout.write(format_schedule(result))
    return EXIT_OK


def cmd_scenarios(args) -> int:
    for name, path in sorted(builtin_scenarios().items()):
        print(f"{name}\t{path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ivnsim", description="In-vehicle network simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario(sp):
        sp.add_argument("scenario", help="description file or bundled scenario name")
        sp.add_argument("--override", action="append", metavar="K=V",
                        help="override a model setting (repeatable)")

    def run_flags(sp):
        scenario(sp)
        sp.add_argument("--until", help="simulated duration, e.g. 100ms")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--constraints", help="constraint XML file")
        sp.add_argument("--out", help="output directory (default: stdout)")
        sp.add_argument("--format", action="append", choices=["csv", "json"],
                        help="statistics format (repeatable, default csv)")
        sp.add_argument("--pcap", action="store_true", help="also write a packet capture")

    sp = sub.add_parser("validate", help="parse and check a description")
    scenario(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("run", help="simulate one configuration")
    run_flags(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="simulate once per parameter value")
    run_flags(sp)
    sp.add_argument("--param", required=True, help="override key to vary")
    sp.add_argument("--values", required=True, help="comma separated values")
    sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    sp.add_argument("--replicas", type=int, default=1, help="seeds per value (seed, seed+1, ...)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("schedule", help="print the generated TT schedule")
    scenario(sp)
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("scenarios", help="list bundled scenarios")
    sp.set_defaults(func=cmd_scenarios)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AndlError, ConfigError, ConstraintFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: file not found", file=sys.stderr)
        return EXIT_CONFIG
    except des.DispatchError as exc:
        print(f"error: simulation failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
