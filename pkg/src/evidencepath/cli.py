"""Command-line entry point.

Subcommands::

    evidencepath run --config run.json
    evidencepath ladders --kind sigmoid --n 100 --alpha 5
    evidencepath truth --benchmark radiocarbon --orders 4 6

A run config is a JSON object. Core keys: ``benchmark``, ``method``,
``n_iter``, ``K``, ``alpha``, ``ladder``, ``direction``, ``seed``,
``repeats``, ``output_dir``. Optional keys: ``orders`` (radiocarbon),
``data`` (CSV path), ``beta``, ``n_obs``, ``data_seed``, ``variant``,
``noise_sd`` (simulated benchmarks), ``trace`` (write trace files) and
``burn_in``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .benchmarks import (REFERENCE_TABLE_VERSION, REFERENCE_VALUES, BenchmarkSpec, build_pair,
                         eval_metrics, reference_truth, resolved_settings, run_repeats)
from .core import Method
from .estimators import RunConfig
from .ladders import LadderConfig, LadderKind, power_law_ladder, sigmoid_ladder

logger = logging.getLogger(__name__)

MAX_TRACE_ROWS = 100_000
RUNNABLE_METHODS = (Method.NETI_DIFF.value, Method.TI_STANDARD.value, Method.TI_OPTIMAL.value)

DEFAULTS = {
    "benchmark": None,
    "method": "neti-diff",
    "n_iter": 64_000,
    "K": 20,
    "alpha": 5.0,
    "ladder": None,
    "direction": "forward",
    "seed": 0,
    "repeats": 5,
    "output_dir": "results",
    "orders": [1, 2],
    "data": None,
    "beta": 1.0,
    "n_obs": 100,
    "data_seed": 0,
    "variant": "wildtype",
    "noise_sd": 0.05,
    "trace": False,
    "burn_in": None,
}


class ConfigError(ValueError):
    pass


def resolve_config(raw: dict) -> dict:
    """Fill defaults and validate a run config."""
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config key(s) {', '.join(unknown)}; allowed keys: {', '.join(DEFAULTS)}")
    cfg = dict(DEFAULTS)
    cfg.update(raw)
    if cfg["benchmark"] is None:
        raise ConfigError("config must name a benchmark")
    if cfg["method"] not in RUNNABLE_METHODS:
        raise ConfigError(f"unknown method {cfg['method']!r}; choose from {', '.join(RUNNABLE_METHODS)}")
    method = Method(cfg["method"])
    if cfg["ladder"] is None:
        cfg["ladder"] = "sigmoid" if method is Method.NETI_DIFF else "power"
    if method is Method.TI_OPTIMAL:
        cfg["ladder"] = "optimal"
    if cfg["burn_in"] is None:
        cfg["burn_in"] = 1000 if method is Method.NETI_DIFF else 0.2
    if cfg["direction"] not in ("forward", "reversed"):
        raise ConfigError("direction must be 'forward' or 'reversed'")
    for key in ("n_iter", "K", "repeats", "seed"):
        if not isinstance(cfg[key], int) or cfg[key] < 0:
            raise ConfigError(f"{key} must be a non-negative integer")
    if cfg["repeats"] < 1:
        raise ConfigError("repeats must be at least 1")
    if method is not Method.NETI_DIFF and cfg["n_iter"] // max(cfg["K"], 1) < 10:
        raise ConfigError(f"n_iter/K = {cfg['n_iter'] // max(cfg['K'], 1)} is below the minimum "
                          f"of 10 steps per rung")
    cfg["method"] = method.value
    cfg["orders"] = list(cfg["orders"])
    return cfg


def _run_config(cfg: dict) -> RunConfig:
    method = Method(cfg["method"])
    count = 2 if method is Method.NETI_DIFF else cfg["K"]
    lcfg = LadderConfig(LadderKind(cfg["ladder"]), count, float(cfg["alpha"]))
    kw = dict(method=method, n_iter=cfg["n_iter"], ladder=lcfg, seed=cfg["seed"], repeats=cfg["repeats"])
    if method is Method.NETI_DIFF:
        kw["burn_in_steps"] = int(cfg["burn_in"])
    else:
        kw["burn_in_fraction"] = float(cfg["burn_in"])
    return RunConfig(**kw)


def _spec(cfg: dict) -> BenchmarkSpec:
    return BenchmarkSpec(cfg["benchmark"], tuple(cfg["orders"]), cfg["data"], float(cfg["beta"]),
                         int(cfg["n_obs"]), int(cfg["data_seed"]), cfg["variant"], float(cfg["noise_sd"]))


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_trace(path: Path, trace) -> None:
    trace = trace.downsample(MAX_TRACE_ROWS)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "tau", "phi"])
        for s, t, p in zip(trace.step, trace.tau, trace.phi):
            w.writerow([int(s), _fmt(t), _fmt(p)])


def run_command(config_path: str) -> int:
    """Execute a run config and write summary.csv, report.json and optional traces."""
    with open(config_path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = resolve_config(raw)
    spec = _spec(cfg)
    rc = _run_config(cfg)
    reversed_dir = cfg["direction"] == "reversed"
    if cfg["trace"] and rc.method is not Method.NETI_DIFF:
        raise ConfigError("traces are only produced by neti-diff runs")
    pair = build_pair(spec)
    results = run_repeats(spec, rc, reversed_dir, keep_traces=bool(cfg["trace"]), pair=pair)

    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["repeat", "method", "estimate", "variance", "wall_ms", "seed"])
        for r, (est, _) in enumerate(results):
            w.writerow([r, est.method.value, _fmt(est.estimate), _fmt(est.variance),
                        f"{est.wall_ms:.1f}", est.seed])
    if cfg["trace"]:
        for r, (_, trace) in enumerate(results):
            _write_trace(out / ("trace.csv" if r == 0 else f"trace_{r}.csv"), trace)

    truth = reference_truth(spec)
    if truth is not None and reversed_dir:
        truth = -truth
    estimates = [e.estimate for e, _ in results]
    metrics = eval_metrics(estimates, truth, [e.wall_ms for e, _ in results], require_variance=False)
    m1, m2 = spec.labels()
    if reversed_dir:
        m1, m2 = m2, m1
    report = {
        "config": cfg,
        "run": {"method": rc.method.value, "n_iter": rc.n_iter, "ladder": asdict(rc.ladder),
                "burn_in_steps": rc.burn_in_steps, "burn_in_fraction": rc.burn_in_fraction,
                "pilot_fraction": rc.pilot_fraction, "streams": list(range(rc.repeats))},
        "settings": resolved_settings(spec),
        "sign_convention": f"estimate = log p(D | {m2}) - log p(D | {m1})",
        "truth": truth,
        "reference_table_version": REFERENCE_TABLE_VERSION,
        "metrics": {"mean": metrics.mean, "variance": metrics.variance,
                    "mean_abs_error": metrics.mean_abs_error},
        "flags": sorted({f for e, _ in results for f in e.flags}),
    }
    report["run"]["ladder"]["kind"] = rc.ladder.kind.value
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=_json_default)
    print(f"{spec.name} {rc.method.value}: mean {metrics.mean:.4f}"
          + (f", variance {metrics.variance:.4g}" if metrics.variance is not None else "")
          + (f", mean abs error {metrics.mean_abs_error:.4f}" if metrics.mean_abs_error is not None else ""))
    return 0


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def ladders_command(kind: str, n: int, alpha: float) -> int:
    taus = sigmoid_ladder(n, alpha) if kind == "sigmoid" else power_law_ladder(n, alpha)
    for t in taus:
        print(repr(float(t)))
    return 0


def truth_command(benchmark: str, orders: Sequence[int], data: Optional[str]) -> int:
    spec = BenchmarkSpec(benchmark, tuple(orders) if orders else (1, 2), data)
    if benchmark in ("radiata", "radiocarbon"):
        value = build_pair(spec).log_bayes_factor()
        print(repr(value))
        if benchmark in REFERENCE_VALUES:
            print(f"reference table: {REFERENCE_VALUES[benchmark][0]}", file=sys.stderr)
        return 0
    if benchmark in REFERENCE_VALUES:
        print(repr(REFERENCE_VALUES[benchmark][0]))
        return 0
    print(f"no ground truth available for {benchmark}", file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evidencepath", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a benchmark from a JSON config")
    p.add_argument("--config", required=True)
    p = sub.add_parser("ladders", help="print an inverse-temperature ladder")
    p.add_argument("--kind", choices=("sigmoid", "power"), default="sigmoid")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, default=5.0)
    p = sub.add_parser("truth", help="print the exact log Bayes factor where available")
    p.add_argument("--benchmark", required=True)
    p.add_argument("--orders", type=int, nargs=2)
    p.add_argument("--data")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return run_command(args.config)
        if args.command == "ladders":
            return ladders_command(args.kind, args.n, args.alpha)
        return truth_command(args.benchmark, args.orders, args.data)
    except (ConfigError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
