"""Command-line entry point (``bflystream`` / ``python -m bflystream``)."""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from .errors import BflyError
from .estimator import run_abacus_traced
from .harness import ExperimentConfig, load_stream, run_experiment, write_rows
from .parallel import ParAbacus, load_report


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bflystream", description=__doc__)
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="edge list file")
    src.add_argument("--synthetic", metavar="L,R,E", type=_ints,
                     help="generate a uniform bipartite graph with L left, R right vertices and E edges")
    ap.add_argument("--format", choices=["tsv", "konect", "native"], default="tsv")
    ap.add_argument("--keep-self-loops", action="store_true",
                    help="keep lines whose two ids are equal (they name different vertices)")
    ap.add_argument("--mode", choices=["abacus", "parabacus", "exact"], default="abacus")
    ap.add_argument("--budget", "-k", type=int, default=1000, metavar="K")
    ap.add_argument("--batch", "-M", type=int, metavar="M")
    ap.add_argument("--workers", "-p", type=int, metavar="P")
    ap.add_argument("--backend", choices=["serial", "process"], default="process",
                    help="how parabacus runs worker ranges")
    ap.add_argument("--alpha", type=float, default=0.0, help="deletion ratio for insertion-only inputs")
    ap.add_argument("--stream-seed", type=int, default=0)
    ap.add_argument("--seed", type=_ints, default=[0], metavar="N[,N...]")
    ap.add_argument("--checkpoints", type=_floats, metavar="F[,F...]",
                    default=[i / 10 for i in range(1, 11)])
    ap.add_argument("--repeats", type=int, default=3, help="timing repetitions (median reported)")
    ap.add_argument("--no-exact", action="store_true", help="skip the exact reference counts")
    ap.add_argument("--exact-arithmetic", action="store_true", help="accumulate with rationals")
    ap.add_argument("--trace", metavar="PATH", help="abacus: per-event trace CSV for the first seed")
    ap.add_argument("--load-report", metavar="PATH", help="parabacus: per-worker comparison CSV for the first seed")
    ap.add_argument("--out", metavar="PATH", help="metrics CSV (stdout if omitted)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = ExperimentConfig(
            input=args.input,
            format=args.format,
            keep_self_loops=args.keep_self_loops,
            synthetic=tuple(args.synthetic) if args.synthetic else None,
            mode=args.mode,
            budget=args.budget,
            batch=args.batch,
            workers=args.workers,
            backend=args.backend,
            alpha=args.alpha,
            seeds=args.seed,
            stream_seed=args.stream_seed,
            checkpoints=args.checkpoints,
            with_exact=not args.no_exact,
            timing_repeats=args.repeats,
            exact_arithmetic=args.exact_arithmetic,
            out=args.out,
        )
        events = load_stream(cfg)
        rows = run_experiment(cfg, events)
        if args.out:
            write_rows(rows, args.out)
        else:
            write_rows(rows, sys.stdout)

        if args.trace and cfg.mode == "abacus":
            runner = run_abacus_traced(events, cfg.budget, cfg.seeds[0], exact=cfg.exact_arithmetic)
            with open(args.trace, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["index", "sign", "found", "increment", "estimate"])
                for t in runner.ledger.trace:
                    w.writerow([t.index, t.sign, t.found, t.increment, t.estimate])
        if args.load_report and cfg.mode == "parabacus":
            with ParAbacus(cfg.budget, cfg.batch, cfg.workers, cfg.seeds[0], backend=cfg.backend) as runner:
                runner.run(events)
            with open(args.load_report, "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["worker", "comparisons"])
                for i, c in enumerate(load_report(runner)):
                    w.writerow([i, c])
    except (BflyError, OSError) as exc:
        print(f"bflystream: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
