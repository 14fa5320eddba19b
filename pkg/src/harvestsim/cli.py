"""Command-line front end.

Subcommands: ``simulate``, ``equilibria``, ``yield-curve``, ``bifurcation``
and ``reproduce``.  A run is described either by a registered scenario name
or by inline ``key=value`` assignments; the same keys may be placed one per
line (``key = value``) in a file passed with ``--config``.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, TextIO

import numpy as np

from harvestsim import analysis
from harvestsim.integrator import IntegrationConfig, Trajectory, integrate
from harvestsim.model import (
    Constant,
    ModelParams,
    Proportional,
    ProportionalThreshold,
    RestrictedProportional,
    Rotational,
    Seasonal,
)
from harvestsim.scenarios import Scenario, apply_overrides, find_by_tag, get_scenario, run_scenario
from harvestsim.schedules import Sinusoid, SinePulse, SquareWave

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "parse_config_text",
    "format_config",
    "scenario_from_inline",
    "emit_trajectory",
    "load_trajectory_csv",
    "reproduce",
    "main",
]

SUBCOMMANDS = ("simulate", "equilibria", "yield-curve", "bifurcation", "reproduce")
FORMATS = ("csv", "json-lines")
STRATEGIES = ("constant", "proportional", "restricted", "threshold", "seasonal", "rotational")
SCHEDULES = ("sine_pulse", "square", "sinusoid")
COLUMNS = ("t", "N", "dNdt", "lambda", "E", "Y")


class ConfigError(ValueError):
    pass


def _rng(lo=None, hi=None, lo_open=False, hi_open=False):
    def check(v):
        if lo is not None and (v < lo or (lo_open and v == lo)):
            return False
        if hi is not None and (v > hi or (hi_open and v == hi)):
            return False
        return True

    left = "(" if lo_open else "["
    right = ")" if hi_open else "]"
    desc = f"{left}{'-inf' if lo is None else lo}, {'inf' if hi is None else hi}{right}"
    return check, desc


# key -> (type, range check or allowed values)
MODEL_KEYS: dict[str, tuple[type, Any]] = {
    "r": (float, _rng(0)),
    "K": (float, _rng(0, lo_open=True)),
    "q": (float, _rng(0)),
    "alpha": (float, _rng(0)),
    "beta": (float, _rng(0)),
    "strategy": (str, STRATEGIES),
    "lambda": (float, _rng(0, 1)),
    "E_const": (float, _rng(0)),
    "Y_limit": (float, _rng(0)),
    "N_thre": (float, _rng(0)),
    "harvest_below": (bool, None),
    "schedule": (str, SCHEDULES),
    "t_start": (float, _rng(0, 1, hi_open=True)),
    "H": (float, _rng(0, lo_open=True)),
    "peak": (float, _rng(0, 1)),
    "b": (float, _rng(0)),
    "level": (float, _rng(0, 1)),
    "open_years": (int, _rng(1)),
    "closed_years": (int, _rng(0)),
    "N0": (float, _rng(0)),
}

RUN_KEYS: dict[str, tuple[type, Any]] = {
    "subcommand": (str, SUBCOMMANDS),
    "scenario": (str, None),
    "dt": (float, _rng(0, lo_open=True)),
    "t_end": (float, _rng(0, lo_open=True)),
    "event_tolerance": (float, _rng(0, lo_open=True)),
    "output": (str, None),
    "format": (str, FORMATS),
    "member": (int, _rng(0)),
    "control": (str, None),
    "grid_min": (float, None),
    "grid_max": (float, None),
    "grid_step": (float, _rng(0, lo_open=True)),
}


@dataclass
class RunConfig:
    subcommand: str
    scenario: str | None = None
    inline: dict[str, Any] = field(default_factory=dict)
    dt: float | None = None
    t_end: float | None = None
    event_tolerance: float | None = None
    output: str | None = None
    format: str = "csv"
    member: int | None = None
    control: str = "lambda_q_alpha"
    grid_min: float | None = None
    grid_max: float | None = None
    grid_step: float | None = None


def _convert(key: str, raw: str, where: str) -> Any:
    entry = MODEL_KEYS.get(key) or RUN_KEYS.get(key)
    if entry is None:
        raise ConfigError(f"{where}: unknown key {key!r}")
    typ, rule = entry
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            value = low in ("true", "1", "yes")
        elif typ is int:
            value = int(raw)
        elif typ is float:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError(raw)
        else:
            value = raw
    except ValueError:
        raise ConfigError(f"{where}: {key} expects {typ.__name__}, got {raw!r}") from None
    if isinstance(rule, tuple) and rule and callable(rule[0]):
        check, desc = rule
        if not check(value):
            raise ConfigError(f"{where}: {key} = {raw} is out of range {desc}")
    elif isinstance(rule, tuple) and value not in rule:
        raise ConfigError(f"{where}: {key} must be one of {', '.join(rule)}, got {raw!r}")
    return value


def _assign(cfg_fields: dict, inline: dict, key: str, value: Any) -> None:
    if key in MODEL_KEYS:
        inline[key] = value
    else:
        cfg_fields[key] = value


def parse_config_text(
    text: str, source: str = "<config>", subcommand: str | None = None, validate: bool = True
) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    ``subcommand`` is used when the text does not set one.
    """
    fields_: dict[str, Any] = {}
    inline: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        _assign(fields_, inline, key, _convert(key, raw, f"{source}:{lineno}"))
    if "subcommand" not in fields_ and subcommand is not None:
        fields_["subcommand"] = subcommand
    if "subcommand" not in fields_:
        raise ConfigError(f"{source}: missing required key 'subcommand'")
    cfg = RunConfig(inline=inline, **fields_)
    if validate:
        _validate(cfg, source)
    return cfg


def format_config(cfg: RunConfig) -> str:
    """Inverse of :func:`parse_config_text`."""

    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = [f"subcommand = {cfg.subcommand}"]
    for key in RUN_KEYS:
        if key == "subcommand":
            continue
        v = getattr(cfg, key)
        if v is None or (key == "format" and v == "csv") or (key == "control" and v == "lambda_q_alpha"):
            continue
        lines.append(f"{key} = {fmt(v)}")
    for key in MODEL_KEYS:
        if key in cfg.inline:
            lines.append(f"{key} = {fmt(cfg.inline[key])}")
    return "\n".join(lines) + "\n"


def _validate(cfg: RunConfig, source: str) -> None:
    if cfg.subcommand == "reproduce":
        if cfg.scenario is None:
            raise ConfigError(f"{source}: reproduce needs a figure tag or scenario name")
        return
    if cfg.subcommand == "yield-curve":
        if cfg.scenario is None and not cfg.inline:
            raise ConfigError(f"{source}: give either a scenario or inline parameters r and K")
        if cfg.scenario is not None and cfg.inline:
            raise ConfigError(f"{source}: give either a scenario or inline parameters, not both")
        if cfg.scenario is None:
            for key in ("r", "K"):
                if key not in cfg.inline:
                    raise ConfigError(f"{source}: missing required key {key!r}")
        return
    if (cfg.scenario is None) == (not cfg.inline):
        raise ConfigError(f"{source}: give exactly one of a scenario name or inline parameters")
    if cfg.inline:
        try:
            scenario_from_inline(cfg.inline)
        except ConfigError as exc:
            raise ConfigError(f"{source}: {exc}") from None
    if cfg.subcommand == "bifurcation":
        for key in ("grid_min", "grid_max", "grid_step"):
            if getattr(cfg, key) is None:
                raise ConfigError(f"{source}: bifurcation needs {key!r}")
        if cfg.grid_max < cfg.grid_min:
            raise ConfigError(f"{source}: grid_max must be >= grid_min")


def _require(inline: dict, *keys: str) -> None:
    for key in keys:
        if key not in inline:
            raise ConfigError(f"missing required key {key!r}")


def scenario_from_inline(inline: dict[str, Any], horizon: float = 100.0) -> Scenario:
    """Build an unnamed scenario from inline key/value pairs."""
    _require(inline, "r", "K", "q", "strategy")
    params = ModelParams(
        r=inline["r"], K=inline["K"], q=inline["q"], alpha=inline.get("alpha", 1.0), beta=inline.get("beta", 0.0)
    )
    kind = inline["strategy"]
    if kind == "constant":
        _require(inline, "E_const")
        strategy = Constant(inline["E_const"])
    elif kind == "proportional":
        _require(inline, "lambda")
        strategy = Proportional(inline["lambda"])
    elif kind == "restricted":
        _require(inline, "lambda", "Y_limit")
        strategy = RestrictedProportional(inline["lambda"], inline["Y_limit"])
    elif kind == "threshold":
        _require(inline, "lambda", "N_thre")
        strategy = ProportionalThreshold(inline["lambda"], inline["N_thre"], inline.get("harvest_below", False))
    else:
        _require(inline, "schedule")
        sched_kind = inline["schedule"]
        try:
            if sched_kind == "sine_pulse":
                sched = SinePulse(inline.get("t_start", 0.25), inline.get("H", 0.25), inline.get("peak", 0.5))
            elif sched_kind == "square":
                sched = SquareWave(inline.get("H", 0.25), inline.get("b", 0.25), inline.get("level", 0.5))
            else:
                sched = Sinusoid()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if kind == "seasonal":
            strategy = Seasonal(sched)
        else:
            strategy = Rotational(sched, inline.get("open_years", 1), inline.get("closed_years", 2))
    N0 = inline.get("N0", 0.5 * params.K)
    return Scenario("inline", params, strategy, N0=N0, horizon=horizon)


def parse_config(argv: Iterable[str] | None = None) -> RunConfig:
    """Parse command-line flags (plus an optional ``--config`` file) into a RunConfig."""
    args = _parser().parse_args(list(argv) if argv is not None else None)
    if args.config:
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        # flags may complete the file, so validation waits until they are merged
        base = parse_config_text(text, str(path), args.subcommand, validate=False)
    else:
        base = RunConfig(subcommand=args.subcommand)
    base.subcommand = args.subcommand

    if args.subcommand == "reproduce":
        base.scenario = args.tag
        base.output = args.output or base.output
        _validate(base, "command line")
        return base

    for i, token in enumerate(args.assignments, 1):
        if "=" not in token:
            raise ConfigError(f"argument {i} {token!r}: expected key=value")
        key, raw = token.split("=", 1)
        key = key.strip()
        if key not in MODEL_KEYS:
            raise ConfigError(f"argument {i} {token!r}: unknown key {key!r}")
        base.inline[key] = _convert(key, raw, f"argument {i}")
    flag_map = {
        "scenario": args.scenario, "dt": args.dt, "t_end": args.t_end, "event_tolerance": args.event_tolerance,
        "output": args.output, "format": args.format, "member": args.member, "control": getattr(args, "control", None),
    }
    for key, value in flag_map.items():
        if value is not None:
            setattr(base, key, _convert(key, str(value), f"--{key.replace('_', '-')}"))
    grid = getattr(args, "grid", None)
    if grid is not None:
        base.grid_min, base.grid_max, base.grid_step = grid
        _convert("grid_step", str(base.grid_step), "--grid")
    _validate(base, "command line")
    return base


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harvestsim", description="Fishery harvesting strategies under density-dependent effort.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("assignments", nargs="*", metavar="KEY=VALUE", help="inline model parameters")
        p.add_argument("--scenario", help="registered scenario name")
        p.add_argument("--config", help="file of 'key = value' lines")
        p.add_argument("--member", type=int, help="sweep member index of the scenario")
        p.add_argument("--dt", type=float)
        p.add_argument("--t-end", dest="t_end", type=float)
        p.add_argument("--event-tolerance", dest="event_tolerance", type=float)
        p.add_argument("-o", "--output", help="output path (default: stdout)")
        p.add_argument("--format", choices=FORMATS)
        return p

    common(sub.add_parser("simulate", help="integrate one run and write its trajectory"))
    common(sub.add_parser("equilibria", help="analytic fixed points and their stability"))
    yc = common(sub.add_parser("yield-curve", help="sustainable yield against lambda*q*alpha"))
    yc.add_argument("--grid-step", dest="grid_step_flag", type=float, default=None)
    bif = common(sub.add_parser("bifurcation", help="long-run attractor across a control grid"))
    bif.add_argument("--control", help="lambda_q_alpha (default) or a parameter name")
    bif.add_argument("--grid", nargs=3, type=float, metavar=("MIN", "MAX", "STEP"))
    rep = sub.add_parser("reproduce", help="run a figure scenario and check its expected outcome")
    rep.add_argument("tag")
    rep.add_argument("--config", help=argparse.SUPPRESS)
    rep.add_argument("-o", "--output", help="output directory (default: current)")
    return parser


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_trajectory(trajectory: Trajectory, fmt: str = "csv", destination: str | Path | TextIO | None = None) -> None:
    """Write samples as CSV (``t,N,dNdt,lambda,E,Y``) or JSON lines; events follow the samples."""
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    cols = (trajectory.t, trajectory.N, trajectory.dNdt, trajectory.lam, trajectory.E, trajectory.Y)
    rows = zip(*(c.tolist() for c in cols))
    buf = io.StringIO()
    if fmt == "csv":
        buf.write(",".join(COLUMNS) + "\n")
        for row in rows:
            buf.write(",".join(map(_fmt, row)) + "\n")
        for t, kind in trajectory.events:
            buf.write(f"#event,{_fmt(t)},{kind}\n")
    else:
        for row in rows:
            rec = {k: (None if math.isnan(v) else v) for k, v in zip(COLUMNS, row)}
            buf.write(json.dumps(rec) + "\n")
        for t, kind in trajectory.events:
            buf.write(json.dumps({"event": kind, "t": float(t)}) + "\n")
    _write(buf.getvalue(), destination)


def _write(text: str, destination) -> None:
    if destination is None:
        sys.stdout.write(text)
    elif hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text)


def load_trajectory_csv(source: str | Path) -> Trajectory:
    """Read back a CSV written by :func:`emit_trajectory`."""
    rows, events = [], []
    lines = Path(source).read_text().splitlines()
    if not lines or lines[0] != ",".join(COLUMNS):
        raise ValueError(f"{source}: missing header {','.join(COLUMNS)}")
    for line in lines[1:]:
        if line.startswith("#event,"):
            _, t, kind = line.split(",", 2)
            events.append((float(t), kind))
        elif line and not line.startswith("#"):
            rows.append([float(v) for v in line.split(",")])
    arr = np.asarray(rows, dtype=float).reshape(-1, len(COLUMNS))
    return Trajectory(*(arr[:, i].copy() for i in range(len(COLUMNS))), events=events,
                      negative_effort_count=int(np.sum(arr[:, 4] < 0)))


def _resolve(cfg: RunConfig):
    """(params, strategy, N0, IntegrationConfig) for simulate/equilibria/bifurcation."""
    if cfg.scenario is not None:
        sc = get_scenario(cfg.scenario)
        members = sc.members()
        idx = cfg.member or 0
        if idx >= len(members):
            raise ConfigError(f"scenario {sc.name} has {len(members)} members, got --member {idx}")
        params, strategy, N0 = apply_overrides(sc.params, sc.strategy, sc.N0, members[idx])
        dt, t_end = sc.dt, sc.horizon
    else:
        sc = scenario_from_inline(cfg.inline)
        params, strategy, N0 = sc.params, sc.strategy, sc.N0
        dt, t_end = 1e-3, sc.horizon
    config = IntegrationConfig(
        dt=cfg.dt or dt, t_end=cfg.t_end or t_end, event_tolerance=cfg.event_tolerance or 1e-10
    )
    return params, strategy, N0, config


def _cmd_simulate(cfg: RunConfig) -> int:
    params, strategy, N0, config = _resolve(cfg)
    traj = integrate(params, strategy, N0, config)
    emit_trajectory(traj, cfg.format, cfg.output)
    return 0


def _report_json(rep: analysis.EquilibriumReport) -> dict:
    return {
        "points": [{"N": p.N, "stability": p.stability, "derivation": p.derivation} for p in rep.points],
        "feasible": rep.feasible,
        **{k: v for k, v in rep.extras.items()},
    }


def _cmd_equilibria(cfg: RunConfig) -> int:
    params, strategy, N0, _ = _resolve(cfg)
    if isinstance(strategy, Proportional):
        rep = analysis.equilibria_proportional(params, strategy.lam)
    elif isinstance(strategy, ProportionalThreshold):
        rep = analysis.equilibria_threshold(params, strategy.lam, strategy.N_thre)
    elif isinstance(strategy, RestrictedProportional):
        rep = analysis.equilibria_restricted(params, strategy.Y_limit, N0)
    elif isinstance(strategy, Constant):
        # r N (1 - N/K) = q E_const has the same roots as the capped regime
        rep = analysis.equilibria_restricted(params, params.q * strategy.E_const, N0)
    else:
        print(f"no analytic equilibria for {strategy.kind} harvesting", file=sys.stderr)
        return 2
    _write(json.dumps({"strategy": strategy.kind, **_report_json(rep)}, indent=2) + "\n", cfg.output)
    return 0


def _cmd_yield_curve(cfg: RunConfig, grid_step: float | None) -> int:
    if cfg.scenario is not None:
        params = get_scenario(cfg.scenario).params
    else:
        params = ModelParams(r=cfg.inline["r"], K=cfg.inline["K"], q=cfg.inline.get("q", 1.0))
    step = grid_step or cfg.grid_step or 1e-3
    n = int(math.floor(params.r / step + 1e-9))
    grid = np.arange(n + 1) * step
    curve = analysis.sustainable_yield_curve(params, grid)
    buf = io.StringIO()
    buf.write("lambda_q_alpha,yield\n")
    for x, y in zip(curve.axis.tolist(), curve.yields.tolist()):
        buf.write(f"{_fmt(x)},{_fmt(y)}\n")
    buf.write(f"#argmax,{_fmt(curve.argmax)}\n#max_yield,{_fmt(curve.max_yield)}\n")
    _write(buf.getvalue(), cfg.output)
    return 0 if abs(curve.argmax - params.r / 2) <= step / 2 + 1e-12 else 1


def _cmd_bifurcation(cfg: RunConfig) -> int:
    params, strategy, N0, _ = _resolve(cfg)
    n = int(math.floor((cfg.grid_max - cfg.grid_min) / cfg.grid_step + 1e-9))
    grid = [round(cfg.grid_min + i * cfg.grid_step, 12) for i in range(n + 1)]
    config = IntegrationConfig(dt=cfg.dt or 0.05, t_end=cfg.t_end or 1000.0, event_tolerance=cfg.event_tolerance or 1e-10)
    points = analysis.bifurcation_scan(params, strategy, grid, N0, config, control=cfg.control)
    buf = io.StringIO()
    buf.write("control,final_N,extinct,extinction_event,period,error\n")
    for p in points:
        period = "" if p.period is None else _fmt(p.period)
        buf.write(f"{_fmt(p.control)},{_fmt(p.final_N)},{int(p.extinct)},{int(p.extinction_event)},{period},{p.error or ''}\n")
    boundary = analysis.extinction_boundary(points)
    if boundary is not None:
        buf.write(f"#boundary,{_fmt(boundary[0])},{_fmt(boundary[1])}\n")
    _write(buf.getvalue(), cfg.output)
    return 0 if all(p.error is None for p in points) else 1


def reproduce(tag: str, output_dir: str | Path = ".", stream: TextIO | None = None) -> int:
    """Run a figure scenario, write its trajectories and report, return the exit status."""
    stream = stream or sys.stdout
    try:
        sc = find_by_tag(tag)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = run_scenario(sc)
    stem = sc.figure_tag or sc.name
    if len(result.runs) == 1:
        emit_trajectory(result.runs[0][1], "csv", out / f"{stem}.csv")
    else:
        for i, (_, traj) in enumerate(result.runs):
            emit_trajectory(traj, "csv", out / f"{stem}_{i}.csv")
    (out / f"{stem}.report.json").write_text(json.dumps(result.report, indent=2, default=_json_default) + "\n")
    for msg in result.messages:
        print(msg, file=stream)
    print(f"{sc.name}: {'ok' if result.passed else 'FAILED'}", file=stream)
    return 0 if result.passed else 1


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float) and math.isinf(o):
        return None
    raise TypeError(type(o).__name__)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO if "-v" in argv or "--verbose" in argv else logging.WARNING)
    argv = [a for a in argv if a not in ("-v", "--verbose")]
    try:
        cfg = parse_config(argv)
        if cfg.subcommand == "reproduce":
            return reproduce(cfg.scenario, cfg.output or ".")
        if cfg.subcommand == "simulate":
            return _cmd_simulate(cfg)
        if cfg.subcommand == "equilibria":
            return _cmd_equilibria(cfg)
        if cfg.subcommand == "yield-curve":
            return _cmd_yield_curve(cfg, None)
        return _cmd_bifurcation(cfg)
    except (ConfigError, KeyError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        # reader closed early (e.g. piped into head): not an error
        sys.stderr.close()
        return 0
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
