"""Benchmark command line: run / list / describe."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np
import yaml

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, run_experiment
from .report import write_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcinfer", description="Monte Carlo inference benchmarks"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a configured experiment")
    run_p.add_argument("--experiment", help="experiment id")
    run_p.add_argument("--sampler", help="sampler id")
    run_p.add_argument("--config", help="YAML config file (flags override it)")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--replicates", type=int, default=None)
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--no-figures", action="store_true",
                       help="skip figure rendering")

    sub.add_parser("list", help="list available experiments")

    desc_p = sub.add_parser("describe", help="describe one experiment")
    desc_p.add_argument("experiment")
    return parser


def _load_config(args) -> ExperimentConfig:
    raw = {}
    if args.config:
        with open(args.config) as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a mapping")
    params = dict(raw.get("params", {}))
    merged = {
        "experiment": args.experiment or raw.get("experiment"),
        "sampler": args.sampler or raw.get("sampler"),
        "replicates": args.replicates
        if args.replicates is not None
        else raw.get("replicates", 50),
        "seed": args.seed if args.seed is not None else raw.get("seed", 1),
        "out": args.out or raw.get("out"),
    }
    if not merged["experiment"] or not merged["sampler"]:
        raise ConfigError("both --experiment and --sampler are required")
    return ExperimentConfig(params=params, **merged)


def _cmd_run(args) -> int:
    try:
        config = _load_config(args)
    except (ConfigError, OSError, yaml.YAMLError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_experiment(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    scalars = {
        k: float(v) for k, v in result.items() if np.isscalar(v) and not isinstance(v, str)
    }
    print(json.dumps({"experiment": config.experiment, "sampler": config.sampler,
                      **scalars}, indent=2))
    if config.out:
        manifest = write_report(result, config.out, figures=not args.no_figures)
        print(f"report written to {config.out}", file=sys.stderr)
        for kind, path in manifest.items():
            print(f"  {kind}: {path}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list":
        for name, spec in EXPERIMENTS.items():
            print(f"{name}: samplers = {', '.join(spec['samplers'])}")
        return EXIT_OK
    if args.command == "describe":
        if args.experiment not in EXPERIMENTS:
            print(f"unknown experiment {args.experiment!r}", file=sys.stderr)
            return EXIT_CONFIG
        spec = EXPERIMENTS[args.experiment]
        print(f"{args.experiment}: {spec['describe']}")
        print(f"samplers: {', '.join(spec['samplers'])}")
        return EXIT_OK
    return _cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
