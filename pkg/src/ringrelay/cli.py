"""Command-line front end.

One JSON config document drives everything; `--set key=value` overrides
individual keys (values are parsed as JSON, falling back to raw strings).
Outputs are plain CSV and JSON, deterministic byte for byte for a fixed
config: floats are emitted with `repr`, JSON keys are sorted, CSV rows
end with a newline.

Exit codes: 0 success, 1 a validation-style check failed, 2 the config
was unusable.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import closed_form, estimators, exact, validation
from .continuous import ContinuousState, simulate_continuous
from .discrete import DiscreteState, simulate_discrete
from .errors import ConfigError, RelayError
from .model import ContinuousConfig, DiscreteConfig, SeedSpec

EXACT_SIZE_LIMIT = 1000


# ----------------------------------------------------------------------
# config plumbing


def _load_config(args) -> dict:
    cfg: dict = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except OSError as err:
            raise ConfigError(f"cannot read config: {err}") from err
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}") from err
        if not isinstance(cfg, dict):
            raise ConfigError("config root must be a JSON object")
    for item in getattr(args, "overrides", None) or []:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        cfg[key.strip()] = value
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    cfg.setdefault("seed", validation.DEFAULT_SEED)
    return cfg


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"missing config key: {key!r}")
    return cfg[key]


def _model_kind(cfg: dict) -> str:
    kind = _require(cfg, "model")
    if kind not in ("discrete", "continuous"):
        raise ConfigError(f"model must be 'discrete' or 'continuous', got {kind!r}")
    return kind


def _int_key(cfg: dict, key: str, default=None):
    value = cfg.get(key, default)
    if value is None:
        raise ConfigError(f"missing config key: {key!r}")
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    return int(value)


def _build_discrete(cfg: dict) -> DiscreteConfig:
    return DiscreteConfig(
        n_sites=_int_key(cfg, "N"),
        flip_prob=float(_require(cfg, "epsilon")),
        n_walkers=_int_key(cfg, "m", 2),
    )


def _build_continuous(cfg: dict) -> ContinuousConfig:
    return ContinuousConfig(
        circumference=float(_require(cfg, "N")),
        speed=float(cfg.get("v", 1.0)),
        switch_rate=float(cfg.get("r", 1.0)),
        n_walkers=_int_key(cfg, "m", 2),
    )


def _build_initial(cfg: dict, kind: str):
    spec = cfg.get("initial", "uniform-random")
    if isinstance(spec, str):
        return spec
    if not isinstance(spec, dict):
        raise ConfigError("initial must be a mode string or a state object")
    try:
        positions = spec["positions"]
        directions = spec["directions"]
        carrier = int(spec["carrier"])
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"bad initial state: {err}") from err
    if kind == "discrete":
        return DiscreteState(
            np.asarray(positions, dtype=np.int64),
            np.asarray(directions, dtype=np.int64),
            carrier,
        )
    return ContinuousState(
        np.asarray(positions, dtype=float),
        np.asarray(directions, dtype=np.int64),
        carrier,
    )


# ----------------------------------------------------------------------
# serialization helpers


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def _dump_json(payload, out: Path | None) -> None:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def _num(x) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _write_csv(rows, header, out: Path | None) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def _try_estimate(fn, report):
    try:
        est = fn(report)
    except RelayError:
        return None
    return {
        "point": float(est.point),
        "stderr": float(est.stderr),
        "n_batches": est.n_batches,
    }


def _report_payload(report) -> dict:
    payload = {
        "params": report.params,
        "seeds": report.seeds,
        "total_time": float(report.total_time),
        "burn_in": float(report.burn_in),
        "totals": {
            "displacement": float(report.displacement_sum),
            "jumps": float(report.jump_count),
            "clockwise_time": float(report.clockwise_time),
        },
        "speed": _try_estimate(estimators.speed_estimate, report),
        "cost": _try_estimate(estimators.cost_estimate, report),
        "direction_occupation": _try_estimate(
            estimators.direction_estimate, report
        ),
        "cycles": None,
    }
    if report.cycle_lengths is not None and report.n_cycles >= 1:
        lengths = report.cycle_lengths
        cycles = {
            "count": int(report.n_cycles),
            "mean_length": float(lengths.mean()),
            "jump_fraction": float(report.cycle_jumps.mean()),
        }
        try:
            summary = estimators.excursion_classifier(report)
        except RelayError:
            summary = None
        if summary is not None:
            cycles["wrap_fraction"] = float(summary.wrap_fraction)
            cycles["max_displacement_dev"] = float(summary.max_deviation)
        payload["cycles"] = cycles
    return payload


# ----------------------------------------------------------------------
# replica orchestration


def _run_one(job):
    kind, config, length, seed, initial, sample_every, trace_every = job
    if kind == "discrete":
        return simulate_discrete(
            config,
            length,
            seed,
            initial,
            sample_every=sample_every,
            trace_every=trace_every,
        )
    return simulate_continuous(
        config,
        length,
        seed,
        initial,
        sample_every=sample_every,
        trace_every=trace_every,
    )


def _run_replicas(jobs, threads: int):
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(job) for job in jobs]


# ----------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    kind = _model_kind(cfg)
    replicas = _int_key(cfg, "replicas", 1)
    if replicas < 1:
        raise ConfigError("replicas must be >= 1")
    seed = _int_key(cfg, "seed")
    sample_every = cfg.get("sample_every")
    trace_every = cfg.get("trace_every")
    if kind == "discrete":
        config = _build_discrete(cfg)
        length = _int_key(cfg, "steps", 100_000)
    else:
        config = _build_continuous(cfg)
        length = float(cfg.get("horizon", 10_000.0))
    initial = _build_initial(cfg, kind)
    jobs = [
        (kind, config, length, SeedSpec(seed, k), initial, sample_every, trace_every)
        for k in range(replicas)
    ]
    reports = _run_replicas(jobs, args.threads)
    merged = estimators.merge(reports) if len(reports) > 1 else reports[0]

    out_dir = args.out or cfg.get("out")
    if out_dir is None:
        _dump_json(_report_payload(merged), None)
        return 0
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, report in enumerate(reports):
        _dump_json(_report_payload(report), out_dir / f"replica_{k:03d}.json")
        if report.trace_times is not None:
            time_col = "step" if kind == "discrete" else "time"
            rows = [
                (_num(t), repr(float(s)), repr(float(c)))
                for t, s, c in zip(
                    report.trace_times, report.trace_speed, report.trace_cost
                )
            ]
            _write_csv(
                rows,
                [time_col, "running_speed", "running_cost"],
                out_dir / f"trace_{k:03d}.csv",
            )
    _dump_json(_report_payload(merged), out_dir / "report.json")
    return 0


def cmd_exact(args) -> int:
    cfg = _load_config(args)
    cfg.setdefault("model", "discrete")
    if _model_kind(cfg) != "discrete":
        raise ConfigError("exact computation is defined for the discrete model")
    if _int_key(cfg, "m", 2) != 2:
        raise ConfigError("exact computation needs exactly two walkers")
    n = _int_key(cfg, "N")
    if n > EXACT_SIZE_LIMIT:
        raise ConfigError(f"size limit exceeded: N={n} > {EXACT_SIZE_LIMIT}")
    eps = float(_require(cfg, "epsilon"))
    metrics = exact.exact_metrics(n, eps)
    sol = exact.solve_trace_bvp(n, eps)
    oracle = exact.hitting_prob_oracle(n, eps)
    s_closed = closed_form.speed_discrete(n, eps)
    c_closed = closed_form.cost_discrete(n, eps)
    a_closed = 2.0 * s_closed
    payload = {
        "N": n,
        "epsilon": eps,
        "exact_speed": metrics.speed,
        "exact_cost": metrics.cost,
        "bvp_A": sol.crossing_prob,
        "oracle_A": oracle,
        "closed_speed": s_closed,
        "closed_cost": c_closed,
        "closed_A": a_closed,
        "n_states": metrics.n_states,
        "stationary_residual": metrics.residual,
        "bvp_residual": exact.bvp_residual(sol),
        "deviations": {
            "speed_exact_vs_formula": abs(metrics.speed - s_closed),
            "cost_exact_vs_formula": abs(metrics.cost - c_closed),
            "A_bvp_vs_oracle": abs(sol.crossing_prob - oracle),
            "A_bvp_vs_formula": abs(sol.crossing_prob - a_closed),
            "speed_exact_vs_half_A": abs(metrics.speed - sol.crossing_prob / 2),
        },
    }
    _dump_json(payload, args.out)
    return 0


def cmd_bvp(args) -> int:
    cfg = _load_config(args)
    n = _int_key(cfg, "N")
    eps = float(_require(cfg, "epsilon"))
    sol = exact.solve_trace_bvp(n, eps)
    payload = {
        "N": n,
        "epsilon": eps,
        "A": sol.crossing_prob,
        "closed_A": 2.0 * closed_form.speed_discrete(n, eps),
        "oracle_A": exact.hitting_prob_oracle(n, eps),
        "residual": exact.bvp_residual(sol),
        "f": list(sol.f),
        "g": list(sol.g),
    }
    _dump_json(payload, args.out)
    return 0


def _sweep_grid(cfg: dict, kind: str):
    grid = cfg.get("grid")
    if not isinstance(grid, dict):
        raise ConfigError("sweep needs a 'grid' object in the config")
    sizes = grid.get("N")
    var_key = "epsilon" if kind == "discrete" else "r"
    values = grid.get(var_key)
    if not sizes or not values:
        raise ConfigError(f"grid must list 'N' and '{var_key}' values")
    return list(sizes), var_key, list(values)


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    kind = _model_kind(cfg)
    sizes, var_key, values = _sweep_grid(cfg, kind)
    replicas = _int_key(cfg, "replicas", 1)
    seed = _int_key(cfg, "seed")
    threads = args.threads

    if kind == "discrete":
        length = _int_key(cfg, "steps", 100_000)
        header = [
            "N", "epsilon", "s_formula", "c_formula",
            "s_exact", "c_exact", "s_mc", "c_mc",
            "s_mc_stderr", "c_mc_stderr",
        ]
    else:
        length = float(cfg.get("horizon", 10_000.0))
        header = [
            "N", "r", "s_formula", "c_formula",
            "s_mc", "c_mc", "s_mc_stderr", "c_mc_stderr",
        ]
    v = float(cfg.get("v", 1.0))
    m = _int_key(cfg, "m", 2)

    rows = []
    point = 0
    for n in sizes:
        for value in values:
            if kind == "discrete":
                config = DiscreteConfig(int(n), float(value), m)
                s_f = closed_form.speed_discrete(int(n), float(value))
                c_f = closed_form.cost_discrete(int(n), float(value))
                if int(n) > EXACT_SIZE_LIMIT:
                    raise ConfigError(
                        f"size limit exceeded: N={n} > {EXACT_SIZE_LIMIT}"
                    )
                metrics = exact.exact_metrics(int(n), float(value))
                fixed = [_num(s_f), _num(c_f), _num(metrics.speed), _num(metrics.cost)]
            else:
                config = ContinuousConfig(float(n), v, float(value), m)
                s_f = closed_form.speed_continuous(float(n), v, float(value))
                c_f = closed_form.cost_continuous(float(n), v, float(value))
                fixed = [_num(s_f), _num(c_f)]
            jobs = [
                (kind, config, length, SeedSpec(seed, point * replicas + k),
                 "uniform-random", None, None)
                for k in range(replicas)
            ]
            reports = _run_replicas(jobs, threads)
            merged = estimators.merge(reports) if len(reports) > 1 else reports[0]
            s = estimators.speed_estimate(merged)
            c = estimators.cost_estimate(merged)
            rows.append(
                [_num(n), _num(value), *fixed,
                 _num(s.point), _num(c.point), _num(s.stderr), _num(c.stderr)]
            )
            point += 1
    _write_csv(rows, header, args.out)
    return 0


def cmd_validate(args) -> int:
    cfg = _load_config(args)
    seed = _int_key(cfg, "seed")
    results = validation.run_all(
        seed, args.threads, emit=lambda line: print(line, file=sys.stderr, flush=True)
    )
    payload = {
        "seed": seed,
        "passed": all(r.passed for r in results),
        "checks": [r.to_dict() for r in results],
    }
    _dump_json(payload, args.out)
    return 0 if payload["passed"] else 1


def cmd_generator_check(args) -> int:
    cfg = _load_config(args)
    seed = _int_key(cfg, "seed")
    ctx = validation.AcceptanceContext(seed, args.threads)
    result = validation.check_generator(ctx)
    _dump_json(result.to_dict(), args.out)
    return 0 if result.passed else 1


# ----------------------------------------------------------------------
# entry point

_COMMANDS = {
    "simulate": (cmd_simulate, "run replicated simulations, write reports"),
    "exact": (cmd_exact, "exact two-walker stationary metrics and deviations"),
    "sweep": (cmd_sweep, "grid of formula/exact/Monte Carlo values as CSV"),
    "validate": (cmd_validate, "run the full acceptance checklist"),
    "bvp": (cmd_bvp, "solve the wrap-probability boundary value problem"),
    "generator-check": (cmd_generator_check, "spot-check the generator identities"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringrelay",
        description="Message relay on a ring: simulation and exact verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (func, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--threads", type=int, default=1, help="worker processes")
        p.add_argument("--out", type=Path, help="output file (or directory)")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VAL",
            help="override a config key; value parsed as JSON when possible",
        )
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RelayError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
