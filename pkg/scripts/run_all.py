"""Run every config in ``configs/`` and write CSV and JSON reports.

    python3 scripts/run_all.py [--out reports]
"""

import argparse
import json
import time
from pathlib import Path

from radinterp.experiments import ExperimentConfig, emit_report, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--configs", default=str(ROOT / "configs"))
    ap.add_argument("--out", default=str(ROOT / "reports"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failed = 0
    for path in sorted(Path(args.configs).glob("*.json")):
        cfg = ExperimentConfig.from_dict(json.loads(path.read_text()))
        start = time.perf_counter()
        report = run_experiment(cfg)
        emit_report(report, "csv", out / f"{path.stem}.csv")
        emit_report(report, "json", out / f"{path.stem}.json")
        failed += not report.passed
        print(
            f"{path.stem:16s} {'PASS' if report.passed else 'FAIL'}  "
            f"ratio in [{report.ratio_min:.4g}, {report.ratio_max:.4g}]  "
            f"{time.perf_counter() - start:6.2f}s"
        )
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
