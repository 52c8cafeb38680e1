"""Sequential wall time on growing prefixes of one stream, with a linear fit.

    python3 scripts/scalability.py --synthetic 2000,2000,166667 --alpha 0.2 -k 1000
"""

import argparse
import statistics
import time

from bflystream.estimator import run_abacus
from bflystream.harness import ExperimentConfig, load_stream


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--synthetic", default="2000,2000,166667")
    ap.add_argument("--alpha", type=float, default=0.2)
    ap.add_argument("--stream-seed", type=int, default=2)
    ap.add_argument("-k", "--budget", type=int, default=1000)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    cfg = ExperimentConfig(synthetic=tuple(int(x) for x in args.synthetic.split(",")), alpha=args.alpha,
                           stream_seed=args.stream_seed, budget=args.budget)
    events = load_stream(cfg)
    xs, ys = [], []
    print("events,seconds,events_per_second")
    for frac in (0.2, 0.4, 0.6, 0.8, 1.0):
        prefix = events[: round(frac * len(events))]
        times = []
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            run_abacus(prefix, args.budget, 0, validate=False)
            times.append(time.perf_counter() - t0)
        t = statistics.median(times)
        xs.append(len(prefix))
        ys.append(t)
        print(f"{len(prefix)},{t:.4f},{len(prefix) / t:.0f}", flush=True)
    fit = statistics.linear_regression(xs, ys)
    print(f"# slope {fit.slope * 1e6:.3f} us/event, R^2 {statistics.correlation(xs, ys) ** 2:.4f}")


if __name__ == "__main__":
    main()
