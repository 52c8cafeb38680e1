"""Parallel speedup grid and per-worker load balance.

Every cell's estimate is checked against the sequential run before its timing
is written.

    python3 scripts/speedup.py --synthetic 250,250,45000 -k 10000 --batches 1000,10000 --workers 1,2,4
"""

import argparse
import csv
import sys

from bflystream.harness import ExperimentConfig, SpeedupRow, load_stream, speedup_report, write_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--synthetic", default="250,250,45000")
    ap.add_argument("--alpha", type=float, default=0.2)
    ap.add_argument("--stream-seed", type=int, default=2)
    ap.add_argument("-k", "--budget", type=int, default=10_000)
    ap.add_argument("--batches", default="1000,10000")
    ap.add_argument("--workers", default="1,2,4")
    ap.add_argument("--backend", choices=["serial", "process"], default="process")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--out", help="speedup CSV (stdout if omitted)")
    ap.add_argument("--load-report", help="per-worker comparison CSV")
    args = ap.parse_args()

    cfg = ExperimentConfig(synthetic=tuple(int(x) for x in args.synthetic.split(",")), alpha=args.alpha,
                           stream_seed=args.stream_seed, budget=args.budget)
    events = load_stream(cfg)
    rows, loads = speedup_report(
        events, args.budget,
        [int(x) for x in args.batches.split(",")],
        [int(x) for x in args.workers.split(",")],
        backend=args.backend, repeats=args.repeats,
    )
    write_rows(rows, args.out or sys.stdout, SpeedupRow)
    if args.load_report:
        with open(args.load_report, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["M", "p", "worker", "comparisons", "max_over_min"])
            for (M, p), tallies in sorted(loads.items()):
                ratio = max(tallies) / max(min(tallies), 1)
                for i, c in enumerate(tallies):
                    w.writerow([M, p, i, c, f"{ratio:.4f}"])


if __name__ == "__main__":
    main()
