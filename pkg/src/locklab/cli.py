"""Command line front end for the contention benchmark.

Emits one CSV row per (algo, threads) cell. Defaults are sized for a
desk run; --full-protocol switches to the long protocol (10 s subruns,
7 per repeat, 3 repeats) regardless of --duration/--subruns/--repeats.
"""

from __future__ import annotations

import argparse
import sys

from .bench import BenchConfig, run_cell, write_csv
from .monitor import MonitorAlgo

__all__ = ["main", "build_parser"]


def _algo_list(text: str) -> list[str]:
    names = [part.strip() for part in text.split(",") if part.strip()]
    valid = {a.value for a in MonitorAlgo}
    for name in names:
        if name not in valid:
            raise argparse.ArgumentTypeError(
                f"unknown algorithm {name!r}; choose from {', '.join(sorted(valid))}"
            )
    if not names:
        raise argparse.ArgumentTypeError("empty algorithm list")
    return names


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("thread counts must be positive integers")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mutexbench",
        description="Measure monitor throughput, fairness, and exclusion integrity.",
    )
    parser.add_argument("--algo", type=_algo_list, default=["HashChains"],
                        help="comma-separated algorithm names")
    parser.add_argument("--threads", type=_int_list, default=[1],
                        help="comma-separated thread counts")
    parser.add_argument("--locks", type=int, default=1, help="number of objects")
    parser.add_argument("--acquire", type=int, default=1,
                        help="locks acquired per iteration, address order")
    parser.add_argument("--csl", type=int, default=5,
                        help="shared generator steps inside the critical section")
    parser.add_argument("--ncsl", type=int, default=0,
                        help="mean non-critical work; each gap is uniform on [0, 2*ncsl)")
    parser.add_argument("--duration", type=float, default=2.0, help="seconds per subrun")
    parser.add_argument("--subruns", type=int, default=3, help="subruns per repeat")
    parser.add_argument("--repeats", type=int, default=1, help="repeats per cell")
    parser.add_argument("--seed", type=int, default=0xBE5EED, help="base seed")
    parser.add_argument("--latency", action="store_true",
                        help="also measure single-thread enter/exit latency per cell")
    parser.add_argument("--full-protocol", action="store_true",
                        help="10 s subruns, 7 subruns, 3 repeats")
    parser.add_argument("--out", default="-", help="output CSV path, - for stdout")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    duration, subruns, repeats = args.duration, args.subruns, args.repeats
    if args.full_protocol:
        duration, subruns, repeats = 10.0, 7, 3
    rows = []
    for algo in args.algo:
        for threads in args.threads:
            base = BenchConfig(
                algo=algo,
                threads=threads,
                locks=args.locks,
                acquire=args.acquire,
                csl=args.csl,
                ncsl=args.ncsl,
                duration=duration,
                seed=args.seed,
            )
            rows.append(run_cell(base, subruns=subruns, repeats=repeats, latency=args.latency))
    if args.out == "-":
        write_csv(rows, sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            write_csv(rows, fh)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
