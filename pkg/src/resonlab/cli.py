"""Command-line front end: flat key=value configs, five commands, reports.

Config files hold one ``key=value`` pair per line with ``#`` comments.
Reports are written atomically (temp file, then rename) as CSV with a
header row or as a JSON array of flat objects; counting reports carry
the fixed column order (tag, d, R, mu_star, exact_count, bound_value,
ratio).  Exit codes: 0 success, 1 config error, 2 engine error, 3 I/O
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import counting, flow, multilinear
from .counting import CountingLemma, CountQuery
from .errors import ConfigError, ResonlabError
from .flow import FlowParams, Splitting
from .lattice import SpectralField
from .multilinear import EstimateSpec, EstimateTag

OUTPUT_DIR_ENV = "RESONLAB_OUTPUT_DIR"

_COMMANDS = ("count", "scan", "estimate", "extremize", "evolve")

_COMMON_KEYS = {"command", "seed", "output", "format", "threads", "eta"}

_COMMAND_KEYS = {
    "count": {"lemma", "d", "mu_star", "R", "R1", "R2", "R3",
              "n_star", "n_sub", "ball_center", "C"},
    "scan": {"lemma", "d", "R_grid", "samples", "mu_mode", "C"},
    "estimate": {"tag", "d", "k", "s", "s1", "s2", "r", "sigma", "q", "mu",
                 "fields", "N", "box_radius", "support_size"},
    "extremize": {"tag", "d", "k", "s", "q", "box_grid", "iterations",
                  "support_size"},
    "evolve": {"d", "k", "lambda_re", "lambda_im", "box_radius", "splitting",
               "T", "dt", "s", "init", "amplitude", "snapshot_stride"},
}


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    fmt: str = "csv"
    output: str | None = None
    threads: int = 1
    eta: float = 0.25
    options: dict = field(default_factory=dict)


def _cast(key: str, raw: str, line: int):
    try:
        if key in ("d", "k", "mu_star", "q", "mu", "N", "box_radius",
                   "support_size", "iterations", "samples", "seed", "threads",
                   "snapshot_stride"):
            return int(raw)
        if key in ("R", "R1", "R2", "R3", "C", "eta", "s", "s1", "s2", "sigma",
                   "lambda_re", "lambda_im", "T", "dt", "amplitude"):
            return float(raw)
        if key == "r":
            return math.inf if raw in ("inf", "Inf", "INF") else float(raw)
        if key in ("n_star", "n_sub", "ball_center"):
            return tuple(int(p) for p in raw.split(",") if p != "")
        if key == "R_grid":
            return tuple(float(p) for p in raw.split(",") if p != "")
        if key == "box_grid":
            return tuple(int(p) for p in raw.split(",") if p != "")
        if key == "lemma":
            return CountingLemma(raw)
        if key == "tag":
            return EstimateTag(raw)
        if key == "splitting":
            return Splitting(raw)
        return raw
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}", line) from exc


def parse_config(text: str) -> RunConfig:
    """Parse and validate a flat key=value configuration."""
    pairs: dict[str, tuple[object, int]] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected key=value, got {body!r}", line_no)
        key, raw = (part.strip() for part in body.split("=", 1))
        if key in pairs:
            raise ConfigError(f"duplicate key {key}", line_no)
        pairs[key] = (raw, line_no)

    if "command" not in pairs:
        raise ConfigError("missing required key: command")
    command_raw, command_line = pairs["command"]
    if command_raw not in _COMMANDS:
        raise ConfigError(f"unknown command {command_raw!r}", command_line)
    allowed = _COMMON_KEYS | _COMMAND_KEYS[command_raw]
    for key, (_, line_no) in pairs.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} for command "
                              f"{command_raw}", line_no)

    values = {key: _cast(key, raw, line_no)
              for key, (raw, line_no) in pairs.items()}
    lines = {key: line_no for key, (_, line_no) in pairs.items()}

    config = RunConfig(command=command_raw)
    config.seed = int(values.get("seed", 0))
    if config.seed < 0:
        raise ConfigError("seed must be nonnegative", lines.get("seed"))
    config.fmt = values.get("format", "csv")
    if config.fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format {config.fmt!r}", lines.get("format"))
    config.output = values.get("output")
    config.threads = int(values.get("threads", 1))
    if config.threads < 1:
        raise ConfigError("threads must be at least 1", lines.get("threads"))
    config.eta = float(values.get("eta", 0.25))
    if config.eta < 0:
        raise ConfigError("eta must be nonnegative", lines.get("eta"))
    config.options = {key: val for key, val in values.items()
                      if key not in _COMMON_KEYS}

    _validate_command(config, lines)
    return config


def _require(config: RunConfig, lines, *keys):
    for key in keys:
        if key not in config.options:
            raise ConfigError(f"{config.command} requires key {key}")


def _validate_command(config: RunConfig, lines):
    opts = config.options
    if config.command == "count":
        _require(config, lines, "lemma", "d", "mu_star")
        _fill_count_defaults(opts)
        _build_count_query(config)  # raises ResonlabError on bad geometry
    elif config.command == "scan":
        _require(config, lines, "lemma", "d", "R_grid")
        if opts.get("mu_mode", "mixed") not in ("mixed", "huge"):
            raise ConfigError(f"unknown mu_mode {opts['mu_mode']!r}",
                              lines.get("mu_mode"))
        if not opts["R_grid"]:
            raise ConfigError("R_grid is empty", lines.get("R_grid"))
    elif config.command in ("estimate", "extremize"):
        _require(config, lines, "tag", "d", "k", "s")
        try:
            spec = EstimateSpec.derive(opts["tag"], opts["d"], opts["k"],
                                       opts["s"], q=opts.get("q"),
                                       mu=opts.get("mu"))
        except ResonlabError as exc:
            raise ConfigError(str(exc)) from exc
        for name in ("s1", "s2", "r", "sigma"):
            if name in opts:
                want = getattr(spec, name)
                got = opts[name]
                same = (math.isinf(want) and math.isinf(got)) \
                    or abs(got - want) <= 1e-9
                if not same:
                    raise ConfigError(
                        f"{name} = {got} inconsistent with derived {want}",
                        lines.get(name))
        if config.command == "estimate":
            source = opts.get("fields", "delta")
            if source not in ("delta", "counterexample", "random"):
                raise ConfigError(f"unknown fields source {source!r}",
                                  lines.get("fields"))
            if source == "counterexample" and "N" not in opts:
                raise ConfigError("counterexample fields need N")
            if source == "random" and "box_radius" not in opts:
                raise ConfigError("random fields need box_radius")
        else:
            if not opts.get("box_grid"):
                raise ConfigError("extremize requires a nonempty box_grid",
                                  lines.get("box_grid"))
    elif config.command == "evolve":
        _require(config, lines, "d", "k", "box_radius", "T", "dt")
        if opts.get("dt", 1.0) <= 0:
            raise ConfigError("dt must be positive", lines.get("dt"))
        if opts.get("T", 0.0) < 0:
            raise ConfigError("T must be nonnegative", lines.get("T"))
        if opts.get("init", "gaussian") not in ("gaussian", "delta", "random"):
            raise ConfigError(f"unknown init {opts.get('init')!r}",
                              lines.get("init"))


def _fill_count_defaults(opts: dict):
    d = opts["d"]
    opts.setdefault("n_star", (0,) * d)
    opts.setdefault("n_sub", (0,) * d)
    opts.setdefault("ball_center", opts["n_star"])
    opts.setdefault("C", 1.0)


def _build_count_query(config: RunConfig) -> CountQuery:
    opts = config.options
    return CountQuery(lemma=opts["lemma"], d=opts["d"],
                      n_star=opts.get("n_star"), n_sub=opts.get("n_sub"),
                      mu_star=opts.get("mu_star"), R=opts.get("R"),
                      R1=opts.get("R1"), R2=opts.get("R2"),
                      R3=opts.get("R3"), ball_center=opts.get("ball_center"))


def _count_row(report: counting.CountReport) -> dict:
    q = report.query
    radius = q.R if q.R is not None else max(x for x in (q.R1, q.R2, q.R3)
                                             if x is not None)
    return {"tag": q.lemma.value, "d": q.d, "R": radius,
            "mu_star": q.mu_star, "exact_count": report.exact_count,
            "bound_value": report.bound_value, "ratio": report.ratio}


def _estimate_fields(config: RunConfig, spec: EstimateSpec):
    opts = config.options
    source = opts.get("fields", "delta")
    if source == "delta":
        return [SpectralField.delta(spec.d) for _ in range(spec.arity)], spec
    if source == "counterexample":
        family = multilinear.counterexample_family(opts["N"])
        if spec.d != 2 or spec.k != 1:
            raise ConfigError("counterexample fields require d=2, k=1")
        if spec.q is None or spec.mu is None:
            spec = EstimateSpec.derive(spec.tag, spec.d, spec.k, spec.s,
                                       q=spec.q if spec.q is not None
                                       else family.q,
                                       mu=spec.mu if spec.mu is not None
                                       else family.mu)
        return list(family.fields), spec
    rng = np.random.default_rng(config.seed)
    radius = opts["box_radius"]
    support = opts.get("support_size", 24)
    fields = []
    import itertools
    points = list(itertools.product(range(-radius, radius + 1),
                                    repeat=spec.d))
    for _ in range(spec.arity):
        m = min(len(points), support)
        chosen = rng.choice(len(points), size=m, replace=False)
        amps = rng.uniform(0.5, 1.5, size=m)
        fields.append(SpectralField(
            spec.d, radius,
            {points[int(i)]: float(a) for i, a in zip(chosen, amps)}))
    return fields, spec


def _run_count(config: RunConfig) -> tuple[list[dict], list[str]]:
    report = counting.count_constrained(_build_count_query(config),
                                        eta=config.eta,
                                        C=config.options.get("C", 1.0))
    return [_count_row(report)], []


def _run_scan(config: RunConfig) -> tuple[list[dict], list[str]]:
    opts = config.options
    result = counting.scan_worst_case(
        opts["lemma"], opts["d"], opts["R_grid"],
        sample_budget=opts.get("samples", 200), seed=config.seed,
        eta=config.eta, C=opts.get("C", 1.0),
        mu_mode=opts.get("mu_mode", "mixed"))
    rows = [_count_row(r) for r in result.reports]
    notes = [f"fitted slope: {_fmt(result.slope)}"]
    return rows, notes


def _run_estimate(config: RunConfig) -> tuple[list[dict], list[str]]:
    opts = config.options
    spec = EstimateSpec.derive(opts["tag"], opts["d"], opts["k"], opts["s"],
                               q=opts.get("q"), mu=opts.get("mu"))
    fields, spec = _estimate_fields(config, spec)
    ratio = multilinear.estimate_ratio(spec, fields)
    row = {"tag": spec.tag.value, "d": spec.d, "k": spec.k, "s": spec.s,
           "s1": spec.s1, "s2": spec.s2, "r": spec.r, "sigma": spec.sigma,
           "q": spec.q, "mu": spec.mu, "ratio": ratio}
    return [row], []


def _run_extremize(config: RunConfig) -> tuple[list[dict], list[str]]:
    opts = config.options
    spec = EstimateSpec.derive(opts["tag"], opts["d"], opts["k"], opts["s"],
                               q=opts.get("q"))
    rows = []
    ratios = []
    boxes = opts["box_grid"]
    for box in boxes:
        best, _ = multilinear.extremizer_search(
            spec, box, opts.get("iterations", 200), seed=config.seed,
            support_size=opts.get("support_size", 24))
        ratios.append(best)
        rows.append({"tag": spec.tag.value, "d": spec.d, "k": spec.k,
                     "s": spec.s, "box_radius": box,
                     "iterations": opts.get("iterations", 200),
                     "best_ratio": best})
    notes = []
    if len(boxes) >= 2:
        slope = counting.fit_loglog_slope(list(boxes), ratios)
        notes.append(f"fitted slope: {_fmt(slope)}")
    return rows, notes


def _initial_state(config: RunConfig, params: FlowParams) -> SpectralField:
    opts = config.options
    amp = opts.get("amplitude", 1.0)
    init = opts.get("init", "gaussian")
    if init == "delta":
        return SpectralField.delta(params.d, amp=amp)
    import itertools
    points = list(itertools.product(
        range(-params.box_radius, params.box_radius + 1), repeat=params.d))
    if init == "gaussian":
        amps = {p: amp * math.exp(-sum(c * c for c in p) / 2.0)
                for p in points}
        return SpectralField(params.d, params.box_radius, amps)
    rng = np.random.default_rng(config.seed)
    values = rng.normal(size=(len(points), 2))
    amps = {p: amp * complex(a, b) for p, (a, b) in zip(points, values)}
    return SpectralField(params.d, params.box_radius, amps)


def _run_evolve(config: RunConfig) -> tuple[list[dict], list[str]]:
    opts = config.options
    params = FlowParams(d=opts["d"], k=opts["k"],
                        lam=complex(opts.get("lambda_re", 1.0),
                                    opts.get("lambda_im", 0.0)),
                        box_radius=opts["box_radius"],
                        splitting=opts.get("splitting", Splitting.FULL))
    omega0 = _initial_state(config, params)
    traj = flow.evolve(omega0, opts["T"], opts["dt"], params,
                       snapshot_stride=opts.get("snapshot_stride", 1))
    return flow.trajectory_records(traj, opts.get("s", 1.0)), []


_RUNNERS = {"count": _run_count, "scan": _run_scan, "estimate": _run_estimate,
            "extremize": _run_extremize, "evolve": _run_evolve}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def emit_report(records: list[dict], fmt: str, path: str):
    """Write records atomically as CSV (RFC-4180) or a JSON array."""
    if fmt not in ("csv", "json"):
        raise ConfigError(f"unknown format {fmt!r}")
    keys: list[str] = []
    for record in records:
        for key in record:
            if key not in keys:
                keys.append(key)
        if list(record) != keys[:len(record)]:
            raise ConfigError("records do not share a column order")
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\r\n")
        writer.writerow(keys)
        for record in records:
            writer.writerow([_fmt(record.get(key)) for key in keys])
        payload = buffer.getvalue()
    else:
        payload = json.dumps(records, indent=1)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(dir=directory,
                                    prefix=os.path.basename(path) + ".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(payload)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def _default_output(config: RunConfig) -> str:
    name = f"{config.command}_report.{config.fmt}"
    return os.path.join(os.environ.get(OUTPUT_DIR_ENV, os.getcwd()), name)


def run(config: RunConfig) -> int:
    """Dispatch a validated config; returns the process exit code."""
    try:
        records, notes = _RUNNERS[config.command](config)
    except ResonlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        path = config.output or _default_output(config)
        emit_report(records, config.fmt, path)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    for note in notes:
        print(note)
    print(f"wrote {len(records)} record(s) to {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="resonlab",
        description="counting, estimate, extremizer, and flow experiments")
    parser.add_argument("command", nargs="?", choices=_COMMANDS,
                        help="must match the config's command when given")
    parser.add_argument("--config", required=True, help="key=value file")
    parser.add_argument("--output", help="report path")
    parser.add_argument("--format", choices=("csv", "json"), dest="fmt")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int)
    try:
        args = parser.parse_args(argv)
    except argparse.ArgumentError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        with open(args.config, "r", encoding="utf-8") as handle:
            text = handle.read()
        config = parse_config(text)
        if args.command and args.command != config.command:
            raise ConfigError(f"command-line command {args.command!r} differs "
                              f"from config command {config.command!r}")
        if args.output:
            config.output = args.output
        if args.fmt:
            config.fmt = args.fmt
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be nonnegative")
            config.seed = args.seed
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("threads must be at least 1")
            config.threads = args.threads
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        return run(config)
    except Exception as exc:  # no crash may escape as a traceback
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
