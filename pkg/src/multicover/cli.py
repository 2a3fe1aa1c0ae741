"""Command-line interface: run experiments, verify oracles, re-render plots, sweep seeds."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiment import (
    ConfigError,
    ExperimentConfig,
    RunArtifacts,
    default_firefighting_config,
    emit_plots,
    run_experiment,
)


def _load_config(args) -> ExperimentConfig:
    if args.config is not None:
        doc = json.loads(Path(args.config).read_text())
    else:
        doc = default_firefighting_config()
    if getattr(args, "algo", None):
        doc.setdefault("algorithm", {})
        doc["algorithm"]["name"] = args.algo
    if getattr(args, "seed", None) is not None:
        doc["seeds"] = [args.seed]
    if getattr(args, "seeds", None):
        doc["seeds"] = list(args.seeds)
    if getattr(args, "out", None):
        doc["output_dir"] = args.out
    return ExperimentConfig.from_dict(doc)


def _cmd_run(args) -> int:
    config = _load_config(args)
    artifacts = run_experiment(config)
    print(f"wrote {len(artifacts.trace_csvs)} trace(s) under {artifacts.out_dir}")
    print(f"summary: {artifacts.summary_json}")
    return 0


def _cmd_sweep(args) -> int:
    return _cmd_run(args)


def _cmd_verify(args) -> int:
    del args
    from .verify import run_verification

    results = run_verification()
    failed = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += not ok
    return 2 if failed else 0


def _cmd_plot(args) -> int:
    artifacts = RunArtifacts(Path(args.out))
    figures = emit_plots(artifacts)
    print(f"rendered {len(figures)} figure(s) under {artifacts.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multicover",
        description="Multi-robot multitask coverage experiments on graph environments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("--config", metavar="PATH", help="JSON config (default: stock scenario)")
    run_p.add_argument("--seed", type=int, metavar="N", help="run a single seed")
    run_p.add_argument("--out", metavar="DIR", help="output directory override")
    run_p.add_argument("--algo", choices=["dsmlc", "rmlc", "fmc"], help="algorithm override")
    run_p.set_defaults(fn=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="run a range of seeds")
    sweep_p.add_argument("--config", metavar="PATH")
    sweep_p.add_argument("--seeds", type=int, nargs="+", metavar="N", required=True)
    sweep_p.add_argument("--out", metavar="DIR")
    sweep_p.add_argument("--algo", choices=["dsmlc", "rmlc", "fmc"])
    sweep_p.set_defaults(fn=_cmd_sweep)

    verify_p = sub.add_parser("verify", help="run bound checks and brute-force oracle suites")
    verify_p.set_defaults(fn=_cmd_verify)

    plot_p = sub.add_parser("plot", help="re-render figures from an existing run directory")
    plot_p.add_argument("--out", metavar="DIR", required=True)
    plot_p.set_defaults(fn=_cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except (OSError, RuntimeError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
