"""Mean relative error of the sequential estimator across sample budgets.

    python3 scripts/accuracy_sweep.py --synthetic 500,500,50000 --alpha 0.2 \
        --budgets 500,1000,2000,4000 --seeds 10 --out accuracy.csv
"""

import argparse
import csv
import statistics
import sys

from bflystream.harness import ExperimentConfig, load_stream, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--input")
    ap.add_argument("--format", default="tsv")
    ap.add_argument("--synthetic", default="500,500,50000")
    ap.add_argument("--alpha", type=float, default=0.2)
    ap.add_argument("--stream-seed", type=int, default=5)
    ap.add_argument("--budgets", default="500,1000,2000,4000")
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--out")
    args = ap.parse_args()

    source = dict(input=args.input, format=args.format) if args.input else dict(
        synthetic=tuple(int(x) for x in args.synthetic.split(",")))
    budgets = [int(x) for x in args.budgets.split(",")]
    events = None
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["k", "checkpoint", "mean_relative_error", "stdev_relative_error", "seeds"])
    for k in budgets:
        cfg = ExperimentConfig(mode="abacus", budget=k, alpha=args.alpha, stream_seed=args.stream_seed,
                               seeds=list(range(args.seeds)), timing_repeats=1, **source)
        if events is None:
            events = load_stream(cfg)
        rows = run_experiment(cfg, events)
        for cp in cfg.checkpoints:
            errs = [r.relative_error for r in rows if r.checkpoint == cp and r.relative_error is not None]
            if errs:
                sd = statistics.stdev(errs) if len(errs) > 1 else 0.0
                w.writerow([k, cp, statistics.fmean(errs), sd, len(errs)])
        fh.flush()
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
