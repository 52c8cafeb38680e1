"""Experiment orchestration: accuracy sweeps, throughput, speedup, CSV output."""

from __future__ import annotations

import csv
import math
import os
import statistics
import time
from dataclasses import asdict, dataclass, field, fields
from typing import IO, Iterable, Optional, Sequence, Union

from .errors import ConfigError, EquivalenceViolation, UndefinedMetric
from .estimator import Abacus
from .oracle import exact_count_stream
from .parallel import ParAbacus
from .stream import (
    EdgeEvent,
    Format,
    generate_dynamic_stream,
    insertions,
    parse_edge_list,
    random_bipartite_edges,
    validate_stream,
)

MODES = ("abacus", "parabacus", "exact")


@dataclass
class ExperimentConfig:
    input: Optional[str] = None
    format: str = "tsv"
    keep_self_loops: bool = False
    # (n_left, n_right, n_edges) for a generated uniform bipartite input
    synthetic: Optional[tuple[int, int, int]] = None
    mode: str = "abacus"
    budget: int = 1000
    batch: Optional[int] = None
    workers: Optional[int] = None
    backend: str = "serial"
    alpha: float = 0.0
    seeds: list[int] = field(default_factory=lambda: [0])
    stream_seed: int = 0
    checkpoints: list[float] = field(default_factory=lambda: [i / 10 for i in range(1, 11)])
    with_exact: bool = True
    timing_repeats: int = 3
    exact_arithmetic: bool = False
    out: Optional[str] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if (self.input is None) == (self.synthetic is None):
            raise ConfigError("give exactly one of input or synthetic")
        if self.mode == "parabacus" and (self.batch is None or self.workers is None):
            raise ConfigError("parabacus mode needs batch size and worker count")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        if self.budget < 2:
            raise ConfigError("budget must be >= 2")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if any(not 0.0 < c <= 1.0 for c in self.checkpoints):
            raise ConfigError("checkpoints are stream fractions in (0, 1]")
        self.checkpoints = sorted(set(self.checkpoints))
        if self.timing_repeats < 1:
            raise ConfigError("timing_repeats must be >= 1")


@dataclass
class MetricsRow:
    seed: int
    checkpoint: float
    events: int
    estimate: float
    exact: Optional[int]
    relative_error: Optional[float]
    wall_time: float
    events_per_second: float
    peak_sample_edges: int


def relative_error(x: float, xhat: float) -> float:
    if x <= 0:
        raise UndefinedMetric(f"relative error needs a positive exact count, got {x}")
    return abs(x - xhat) / x


def load_stream(cfg: ExperimentConfig) -> list[EdgeEvent]:
    """Ingest or generate the insert stream, then add deletions if ``alpha > 0``.

    Parsing and generation happen here so that timings exclude them.
    """
    if cfg.synthetic is not None:
        n_left, n_right, n_edges = cfg.synthetic
        events = insertions(random_bipartite_edges(n_left, n_right, n_edges, cfg.stream_seed))
    else:
        fmt = Format(cfg.format)
        drop = False if cfg.keep_self_loops else None
        events = parse_edge_list(cfg.input, fmt, drop_self_loops=drop).events
    if cfg.alpha > 0:
        if any(not e.is_insert for e in events):
            raise ConfigError("alpha applies only to insertion-only inputs")
        events = generate_dynamic_stream(events, cfg.alpha, cfg.stream_seed)
    validate_stream(events)
    return events


def checkpoint_offsets(n_events: int, fractions: Sequence[float]) -> list[int]:
    return [max(1, math.ceil(f * n_events - 1e-9)) for f in fractions]


def _timed_run(cfg: ExperimentConfig, events: Sequence[EdgeEvent], seed: int, offsets: Sequence[int]):
    """One pass; returns per-checkpoint (estimate, cumulative seconds) and peak memory proxy."""
    marks: list[tuple[float, float]] = []
    targets = list(offsets)
    if cfg.mode == "abacus":
        runner = Abacus(cfg.budget, seed, exact=cfg.exact_arithmetic)
        t0 = time.perf_counter()
        ti = 0
        for i, e in enumerate(events, 1):
            runner.process(e)
            while ti < len(targets) and targets[ti] == i:
                marks.append((float(runner.estimate), time.perf_counter() - t0))
                ti += 1
        return marks, runner.peak_sample

    if cfg.mode == "parabacus":
        # a checkpoint must coincide with a batch boundary, so batches are cut there too
        with ParAbacus(cfg.budget, cfg.batch, cfg.workers, seed, exact=cfg.exact_arithmetic,
                       backend=cfg.backend) as runner:
            t0 = time.perf_counter()
            start = 0
            for target in targets:
                while start < target:
                    stop = min(start + cfg.batch, target)
                    runner.process_batch(events[start:stop])
                    start = stop
                marks.append((float(runner.estimate), time.perf_counter() - t0))
        return marks, runner.peak_sample + runner.peak_changes

    t0 = time.perf_counter()
    counts = exact_count_stream(events)
    elapsed = time.perf_counter() - t0
    for target in targets:
        marks.append((float(counts[target - 1]), elapsed * target / len(events)))
    return marks, 0


def run_experiment(cfg: ExperimentConfig, events: Optional[Sequence[EdgeEvent]] = None) -> list[MetricsRow]:
    """Run ``cfg`` over every seed and return rows sorted by (seed, checkpoint)."""
    if events is None:
        events = load_stream(cfg)
    n = len(events)
    offsets = checkpoint_offsets(n, cfg.checkpoints)
    exact_at: Optional[list[int]] = None
    if cfg.with_exact or cfg.mode == "exact":
        counts = exact_count_stream(events)
        exact_at = [counts[o - 1] for o in offsets]

    rows: list[MetricsRow] = []
    for seed in sorted(cfg.seeds):
        reps = [_timed_run(cfg, events, seed, offsets) for _ in range(cfg.timing_repeats)]
        marks, peak = reps[0]
        for other, _ in reps[1:]:
            if [m[0] for m in other] != [m[0] for m in marks]:
                raise EquivalenceViolation("repeated run with the same seed diverged")
        for ci, (frac, off) in enumerate(zip(cfg.checkpoints, offsets)):
            wall = statistics.median(r[0][ci][1] for r in reps)
            est = marks[ci][0]
            ex = exact_at[ci] if exact_at is not None else None
            err = relative_error(ex, est) if ex is not None and ex > 0 else None
            rows.append(MetricsRow(
                seed=seed,
                checkpoint=frac,
                events=off,
                estimate=est,
                exact=ex,
                relative_error=err,
                wall_time=wall,
                events_per_second=off / wall if wall > 0 else float("inf"),
                peak_sample_edges=peak,
            ))
    rows.sort(key=lambda r: (r.seed, r.checkpoint))
    return rows


@dataclass
class SpeedupRow:
    M: int
    p: int
    k: int
    abacus_time: float
    parabacus_time: float
    speedup: float


def _median_time(fn, repeats: int):
    times, result = [], None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), result


def speedup_report(
    events: Sequence[EdgeEvent],
    k: int,
    batch_sizes: Iterable[int],
    worker_counts: Iterable[int],
    seed: int = 0,
    *,
    backend: str = "process",
    repeats: int = 3,
) -> tuple[list[SpeedupRow], dict[tuple[int, int], list[int]]]:
    """Time the sequential run against every (M, p) cell.

    Every cell's estimate must equal the sequential one, otherwise
    EquivalenceViolation is raised before any row is returned. Also returns
    the per-worker comparison tallies of each cell.
    """
    def sequential():
        return Abacus(k, seed).run(events)

    t_seq, reference = _median_time(sequential, repeats)
    rows, loads = [], {}
    for M in batch_sizes:
        for p in worker_counts:
            def parallel():
                with ParAbacus(k, M, p, seed, backend=backend) as runner:
                    runner.run(events)
                return runner

            t_par, runner = _median_time(parallel, repeats)
            if runner.estimate != reference:
                raise EquivalenceViolation(
                    f"M={M} p={p}: parallel estimate {runner.estimate!r} != sequential {reference!r}"
                )
            loads[(M, p)] = list(runner.comparisons)
            rows.append(SpeedupRow(M, p, k, t_seq, t_par, t_seq / t_par))
    return rows, loads


def write_rows(rows: Sequence, dest: Union[str, os.PathLike, IO[str]], row_type=None) -> None:
    row_type = row_type or (type(rows[0]) if rows else MetricsRow)
    own = isinstance(dest, (str, os.PathLike))
    fh = open(dest, "w", encoding="utf-8", newline="") if own else dest
    try:
        w = csv.DictWriter(fh, fieldnames=[f.name for f in fields(row_type)], lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else v) for k, v in asdict(r).items()})
    finally:
        if own:
            fh.close()
