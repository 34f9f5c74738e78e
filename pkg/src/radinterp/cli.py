"""Command line entry point: ``radinterp run <experiment_id> ...``.

Exit codes: 0 when the experiment passes its bounds, 1 when a bound is
violated, 2 for configuration or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, emit_report, run_experiment

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radinterp", description="Certify Rademacher-sum norm equivalences numerically.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment and write its report")
    run.add_argument("experiment_id", choices=sorted(EXPERIMENTS))
    run.add_argument("--config", help="JSON config file; its experiment_id must match")
    run.add_argument("--out", required=True, help="report path")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--seed", type=int, help="overrides the config seed")
    sub.add_parser("list", help="list experiment ids")
    return parser


def load_config(experiment_id: str, path: str | None, seed: int | None) -> ExperimentConfig:
    data: dict = {"experiment_id": experiment_id}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"{path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "must be a JSON object")
        data.setdefault("experiment_id", experiment_id)
        if data["experiment_id"] != experiment_id:
            raise ConfigError("experiment_id", f"config says {data['experiment_id']!r}, command line says {experiment_id!r}")
    if seed is not None:
        data = {**data, "seed": seed}
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        print("\n".join(sorted(EXPERIMENTS)))
        return EXIT_PASS
    try:
        cfg = load_config(args.experiment_id, args.config, args.seed)
        report = run_experiment(cfg)
        emit_report(report, args.format, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{report.experiment_id}: {verdict} ratio_min={report.ratio_min:.6g} ratio_max={report.ratio_max:.6g} rows={len(report.rows)} -> {args.out}")
    for note in report.notes:
        print(f"  note: {note}")
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
