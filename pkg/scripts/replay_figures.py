"""Replay every scripted figure config and write its CSV/SVG outputs.

    python scripts/replay_figures.py --out figures
"""
import argparse
from pathlib import Path

from trustsim.config import parse_config
from trustsim.engine import run_scenario
from trustsim.output import write_result_dir
from trustsim.trust import fmt_trust

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="figures")
    args = p.parse_args(argv)
    for path in sorted(CONFIGS.glob("fig*.json")):
        cfg = parse_config(path)
        result = run_scenario(cfg)
        write_result_dir(result, Path(args.out) / path.stem)
        finals = "  ".join(f"{v} {fmt_trust(t.final)} {t.final_state}"
                           for v, t in result.trajectories.items()
                           if v in (cfg.sender, *cfg.reporters))
        print(f"{path.stem:<6} {cfg.model.kind.value:<12} {finals}")


if __name__ == "__main__":
    main()
