"""Command line front end.

    curvelab <experiment-name> [--config <path>] [--out <dir>] [--seed <u64>]
             [--threads <n>] [--tag <tag>] [--check]
    curvelab list

Exit codes: 0 success, 2 configuration error, 3 guard failure with --check.
The environment variable CURVELAB_THREADS overrides --threads.
"""

from __future__ import annotations

import argparse
import os
import sys

from .experiments import (
    EXPERIMENTS,
    ConfigError,
    check_guard,
    config_from_file,
    default_config,
    run_experiment,
    write_outputs,
)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="curvelab", description="variable-curve operator laboratory")
    ap.add_argument("experiment", help="experiment name, or 'list' to enumerate")
    ap.add_argument("--config", help="flat key = value config file")
    ap.add_argument("--out", help="output directory root (default 'out')")
    ap.add_argument("--seed", type=int, help="64-bit master seed")
    ap.add_argument("--threads", type=int, help="worker threads (CURVELAB_THREADS overrides)")
    ap.add_argument("--tag", help="fixed output subdirectory name (default: UTC timestamp)")
    ap.add_argument("--check", action="store_true", help="exit 3 if the experiment's acceptance guard fails")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.experiment == "list":
        for name in EXPERIMENTS:
            print(name)
        return 0
    threads = args.threads
    env_threads = os.environ.get("CURVELAB_THREADS")
    if env_threads:
        try:
            threads = int(env_threads)
        except ValueError:
            print(f"error: CURVELAB_THREADS={env_threads!r} is not an integer", file=sys.stderr)
            return 2
    overrides = {
        "out": args.out,
        "seed": args.seed,
        "threads": threads,
        "tag": args.tag,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    try:
        if args.config:
            config = config_from_file(args.config, experiment=args.experiment, **overrides)
        else:
            config = default_config(args.experiment, **overrides)
        result = run_experiment(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = write_outputs(result, config)
    ok, msg = check_guard(result)
    print(f"{config.experiment}: {len(result.rows)} rows -> {out_dir}")
    if result.fit is not None:
        print(f"  fit: slope {result.fit.slope:.4f}, R^2 {result.fit.r_squared:.4f}")
    print(f"  guard: {'PASS' if ok else 'FAIL'} ({msg})")
    if args.check and not ok:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
