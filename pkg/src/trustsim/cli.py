"""Command-line front end.

    trustsim run CONFIG [--seed N] [--out DIR]
    trustsim replay CONFIG [--out DIR]
    trustsim batch CONFIG --seeds A..B [--out DIR] [--jobs N]
    trustsim analyze RESULT_DIR [--json]
    trustsim compare DIR4 DIR6 DIR11 [--json FILE]

Output defaults to $TRUSTSIM_OUT, else ./trustsim-out. Exit status: 0 ok,
1 I/O or syntax error, 2 validation error or mismatched inputs.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .chain import (compare_models, empirical_transition_matrix, granularity_metrics,
                    result_transitions, stationary_distribution)
from .config import ScenarioConfig, parse_config
from .engine import run_scenario, summarize
from .errors import ConfigSyntaxError, InvalidConfig, MismatchedConfigs, NoConvergence
from .output import load_results, write_result_dir
from .trust import fmt_trust

EXIT_OK, EXIT_IO, EXIT_INVALID = 0, 1, 2


def _out_root(arg) -> Path:
    return Path(arg or os.environ.get("TRUSTSIM_OUT") or "trustsim-out")


def parse_seed_range(text: str) -> range:
    a, sep, b = text.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}")
    lo, hi = int(a), int(b)
    if hi < lo:
        raise argparse.ArgumentTypeError("empty seed range")
    return range(lo, hi + 1)


def _print_summary(summary: dict, out=sys.stdout) -> None:
    print(f"model {summary['model']}  seed {summary['seed']}  "
          f"announcements {summary['announcements']}  disputes {summary['disputes']}  "
          f"lost {summary['lost_adjustments']}", file=out)
    o = summary["outcomes"]
    print("outcomes: " + ", ".join(f"{k} {v}" for k, v in o.items()), file=out)
    for v, s in summary["vehicles"].items():
        if s["transitions"] or s["initial_trust"] != s["final_trust"]:
            print(f"  {v:<5} {fmt_trust(s['initial_trust'])} -> {fmt_trust(s['final_trust'])} "
                  f"{s['final_state']:<13} transitions {s['transitions']}", file=out)


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    result = run_scenario(cfg)
    out = _out_root(args.out) / Path(args.config).stem
    write_result_dir(result, out, svg_vehicles=args.svg_vehicles)
    _print_summary(summarize(result))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_replay(args) -> int:
    cfg = parse_config(args.config)
    if not cfg.script:
        raise InvalidConfig([("script", "replay needs a config with a script")])
    args.seed = None
    return cmd_run(args)


def _batch_one(cfg: ScenarioConfig, seed: int, out: Path, svg_vehicles) -> dict:
    result = run_scenario(cfg.with_seed(seed))
    write_result_dir(result, out / f"seed_{seed:04d}", svg_vehicles=svg_vehicles)
    return summarize(result)


def cmd_batch(args) -> int:
    cfg = parse_config(args.config)
    out = _out_root(args.out) / Path(args.config).stem
    seeds = list(args.seeds)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            summaries = list(pool.map(_batch_one, [cfg] * len(seeds), seeds,
                                      [out] * len(seeds), [args.svg_vehicles] * len(seeds)))
    else:
        summaries = [_batch_one(cfg, s, out, args.svg_vehicles) for s in seeds]
    totals = [s["total_transitions"] for s in summaries]
    print(f"{len(seeds)} runs of {cfg.model.kind.value}: mean transitions "
          f"{sum(totals) / len(totals):.3f}")
    print(f"wrote {out}")
    return EXIT_OK


def analyze(results) -> dict:
    models = {r.model.kind.value for r in results}
    if len(models) != 1:
        raise MismatchedConfigs(f"results mix models: {', '.join(sorted(models))}")
    model = results[0].model
    tm = empirical_transition_matrix(result_transitions(results), model)
    try:
        pi = [float(p) for p in stationary_distribution(tm)]
    except NoConvergence:
        pi = None
    runs = []
    for r in results:
        m = granularity_metrics(r)
        runs.append({
            "seed": r.seed,
            "transitions": sum(vm.transitions for vm in m.values()),
            "vehicles": {v: {"distinct_states": vm.distinct_states,
                             "transitions": vm.transitions,
                             "mean_dwell": vm.mean_dwell}
                         for v, vm in m.items() if vm.transitions},
        })
    return {
        "model": model.kind.value,
        "runs": len(results),
        "states": list(tm.states),
        "counts": tm.counts.tolist(),
        "probabilities": tm.probabilities.tolist(),
        "stationary": pi,
        "per_run": runs,
    }


def cmd_analyze(args) -> int:
    results = load_results(args.result_dir)
    if not results:
        print(f"no result.json under {args.result_dir}", file=sys.stderr)
        return EXIT_IO
    report = analyze(results)
    if args.json:
        print(json.dumps(report, indent=2))
        return EXIT_OK
    states = report["states"]
    print(f"{report['model']}: {report['runs']} run(s), "
          f"{sum(map(sum, report['counts']))} transitions")
    w = max(len(s) for s in states) + 2
    print(" " * w + "".join(f"{s[:8]:>9}" for s in states))
    for s, row in zip(states, report["counts"]):
        print(f"{s:<{w}}" + "".join(f"{c:>9}" for c in row))
    if report["stationary"] is None:
        print("stationary distribution: power iteration did not converge")
    else:
        print("stationary distribution:")
        for s, p in zip(states, report["stationary"]):
            print(f"  {s:<{w}}{p:.4f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    groups = []
    for d in args.dirs:
        results = load_results(d)
        if not results:
            print(f"no result.json under {d}", file=sys.stderr)
            return EXIT_IO
        kinds = {r.model.kind.value for r in results}
        if len(kinds) != 1:
            raise MismatchedConfigs(f"{d} mixes models: {', '.join(sorted(kinds))}")
        groups.append((kinds.pop(), results))
    report = compare_models(groups)
    print(report.table())
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trustsim", description="VANET driver-trust simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--out", help="output directory (default $TRUSTSIM_OUT or ./trustsim-out)")
        sp.add_argument("--svg-vehicles", choices=["focal", "all"], default="focal",
                        help="which vehicles to draw in trajectories.svg")

    sp = sub.add_parser("run", help="run one scenario")
    sp.add_argument("config")
    sp.add_argument("--seed", type=int)
    add_common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("replay", help="replay a scripted scenario")
    sp.add_argument("config")
    add_common(sp)
    sp.set_defaults(func=cmd_replay)

    sp = sub.add_parser("batch", help="run a scenario over a range of seeds")
    sp.add_argument("config")
    sp.add_argument("--seeds", type=parse_seed_range, required=True, help="inclusive range A..B")
    sp.add_argument("--jobs", type=int, default=1)
    add_common(sp)
    sp.set_defaults(func=cmd_batch)

    sp = sub.add_parser("analyze", help="transition matrix and granularity metrics")
    sp.add_argument("result_dir")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("compare", help="compare batches of the 4-, 6- and 11-state models")
    sp.add_argument("dirs", nargs=3, metavar="DIR")
    sp.add_argument("--json", help="also write the report as JSON to this file")
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "svg_vehicles", None) == "focal":
        args.svg_vehicles = None
    try:
        return args.func(args)
    except (InvalidConfig, MismatchedConfigs) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ConfigSyntaxError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
