"""Run the three batch configs over a seed range and compare granularity.

    python scripts/granularity_experiment.py --seeds 1..100 --json report.json
"""
import argparse
import sys
import time
from pathlib import Path

from trustsim.chain import compare_models
from trustsim.cli import parse_seed_range
from trustsim.config import parse_config
from trustsim.engine import run_scenario

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=parse_seed_range, default=parse_seed_range("1..100"))
    p.add_argument("--json", help="write the report as JSON to this file")
    args = p.parse_args(argv)

    t0 = time.perf_counter()
    groups = []
    for k in ("4", "6", "11"):
        cfg = parse_config(CONFIGS / f"batch_{k}state.json")
        groups.append((cfg.model.kind.value, [run_scenario(cfg.with_seed(s)) for s in args.seeds]))
    report = compare_models(groups)
    print(report.table())
    print(f"{sum(len(rs) for _, rs in groups)} runs in {time.perf_counter() - t0:.1f}s")
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n")
    return 0 if report.ordering_holds else 1


if __name__ == "__main__":
    sys.exit(main())
