"""Command-line entry point.

Subcommands:
  run          one federated run, one CSV of per-round results
  sweep        one run per axis value plus a final-metrics summary CSV
  theory-check numerical verification of the calibration optimality result
  gen-data     emit the synthetic shards in the line-oriented text format

Exit codes: 0 success, 1 assertion failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import seeding
from .config import FederationConfig, load_config
from .data import build_federation_data, write_shards
from .errors import ConfigError
from .federation import SWEEP_AXES, run_federation, sweep
from .metrics import METRIC_NAMES
from .reporting import export_csv, export_sweep_summary
from .theory import ClientRiskProfile, empirical_profile_sweep, theorem_gap

log = logging.getLogger("fedqual")

_INT_AXES = {"q", "top_k", "pool_size"}


def _load(args) -> FederationConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    return cfg


def _final_summary(run) -> str:
    if not run.reports:
        return "no rounds executed"
    metrics = run.reports[-1].metrics
    parts = [f"{name}={value:.6f}" for name, value in zip(METRIC_NAMES, metrics.values())]
    return " ".join(parts)


def _cmd_run(args) -> int:
    cfg = _load(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    run = run_federation(cfg, workers=args.workers)
    out_path = out_dir / "run.csv"
    export_csv(run.reports, out_path, num_clients=cfg.data.num_clients)
    print(f"{cfg.algorithm}: {len(run.reports)} rounds -> {out_path}")
    print(f"final: {_final_summary(run)}")
    return 0


def _parse_values(raw: str, axis: str) -> list:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ConfigError("sweep values list is empty")
    try:
        if axis in _INT_AXES:
            return [int(p) for p in parts]
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"bad sweep value in {raw!r}: {exc}") from exc


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    if args.axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {args.axis!r}; expected one of {SWEEP_AXES}")
    values = _parse_values(args.values, args.axis)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = sweep(cfg, args.axis, values, workers=args.workers)
    summary_rows = []
    for value, run in results:
        clients = cfg.data.num_clients if args.axis != "pool_size" else int(value)
        path = out_dir / f"{args.axis}_{value:g}.csv"
        export_csv(run.reports, path, num_clients=clients)
        final = run.reports[-1].metrics if run.reports else None
        if final is None:
            raise ConfigError("sweep requires at least one round")
        summary_rows.append((value, final))
        print(f"{args.axis}={value:g}: kl={final.kl:.6f} -> {path}")
    summary_path = out_dir / f"{args.axis}_summary.csv"
    export_sweep_summary(summary_rows, summary_path)
    print(f"summary -> {summary_path}")
    return 0


def _cmd_theory_check(args) -> int:
    if args.profiles:
        payload = json.loads(Path(args.profiles).read_text(encoding="utf-8"))
        profiles = [ClientRiskProfile(float(s2), float(d2)) for s2, d2 in payload]
    else:
        rng = seeding.stream(seeding.TAG_THEORY, args.seed)
        draws = rng.uniform(0.01, 10.0, size=(args.clients, 2))
        profiles = [ClientRiskProfile(float(s2), float(d2)) for s2, d2 in draws]
    result = theorem_gap(profiles)
    print(f"profiles: {len(profiles)} clients")
    print(f"j_adapt = {result.j_adapt:.12g}")
    print(f"j_uni   = {result.j_uni:.12g}")
    print(f"gap     = {result.gap:.12g}")
    sweep_rng = seeding.stream(seeding.TAG_THEORY, args.seed, 1)
    report = empirical_profile_sweep(args.clients, sweep_rng, trials=args.trials)
    print(report.summary())
    if result.gap < 0:
        print("FAIL: negative gap on the supplied profile set", file=sys.stderr)
        return 1
    if not report.ok:
        for violation in report.violations[:10]:
            print(f"FAIL: {violation}", file=sys.stderr)
        return 1
    return 0


def _cmd_gen_data(args) -> int:
    cfg = _load(args)
    data = build_federation_data(cfg.data, cfg.eval_fraction, cfg.master_seed)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_shards(data.shards, out_path)
    total = sum(s.sample_count for s in data.shards)
    print(f"{len(data.shards)} shards, {total} examples -> {out_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedqual", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--verbose", action="store_true", help="per-round log output")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one federated experiment")
    run_p.add_argument("--config", required=True, help="JSON run configuration")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--seed", type=int, default=None, help="override master_seed")
    run_p.add_argument("--workers", type=int, default=1, help="client training threads")
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="run once per value of one knob")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--axis", required=True, help=f"one of {', '.join(SWEEP_AXES)}")
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.add_argument("--out", required=True)
    sweep_p.add_argument("--seed", type=int, default=None)
    sweep_p.add_argument("--workers", type=int, default=1)
    sweep_p.set_defaults(func=_cmd_sweep)

    theory_p = sub.add_parser("theory-check", help="verify the calibration optimality result")
    theory_p.add_argument("--clients", type=int, default=8)
    theory_p.add_argument("--seed", type=int, default=0)
    theory_p.add_argument("--trials", type=int, default=1000)
    theory_p.add_argument("--profiles", default=None,
                          help="JSON file with [[sigma2, delta2], ...] instead of random draws")
    theory_p.set_defaults(func=_cmd_theory_check)

    gen_p = sub.add_parser("gen-data", help="emit synthetic shards as text")
    gen_p.add_argument("--config", required=True)
    gen_p.add_argument("--out", required=True, help="output file path")
    gen_p.add_argument("--seed", type=int, default=None)
    gen_p.set_defaults(func=_cmd_gen_data)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
