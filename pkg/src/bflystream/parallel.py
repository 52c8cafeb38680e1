"""Mini-batch estimator with versioned samples and parallel per-edge counting.

Per batch: (1) replay Random Pairing over the batch on the live sample,
recording each edge change with a version tag and the pre-event pairing
triplet; (2) count every batch edge against the sample version it would have
seen sequentially, split into contiguous worker ranges; (3) add the partial
counts to the running estimate in event order.

Version ``i`` is the sample after the first ``i`` batch events, so a change
made by batch event ``j`` (0-based) carries tag ``j + 1`` and event ``j``
counts against version ``j``.
"""

from __future__ import annotations

import math
import multiprocessing as mp
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .errors import ConfigError
from .estimator import Number, _increment_fast, _LiveTracker, count_instrumented
from .sample import (
    Deletion,
    Insertion,
    PairingState,
    SampleGraph,
    delete_from_sample,
    insert_to_sample,
)
from .stream import INSERT, EdgeEvent

ADD = 1
REMOVE = -1

Change = tuple[int, int, int, int]  # (tag, left, right, ADD | REMOVE)


class VersionedSample:
    """A sample graph plus tagged edge changes spanning one batch.

    ``anchor`` holds the sample at ``anchor_version`` (0 for the batch's
    starting sample, ``size`` for the consolidated one); any other version is
    an overlay that replays or reverts the per-vertex changes.
    """

    def __init__(self, anchor, anchor_version: int, size: int, changes: Sequence[Change], triplets):
        if anchor_version not in (0, size):
            raise ValueError("anchor must be the first or the consolidated version")
        self.anchor = anchor
        self.anchor_version = anchor_version
        self.size = size
        self.changes = list(changes)
        self.triplets = list(triplets)
        self.deltas_l: dict[int, list[tuple[int, int, int]]] = {}
        self.deltas_r: dict[int, list[tuple[int, int, int]]] = {}
        for tag, l, r, op in self.changes:
            self.deltas_l.setdefault(l, []).append((tag, r, op))
            self.deltas_r.setdefault(r, []).append((tag, l, op))

    def __len__(self):
        return self.size

    @property
    def added_edges(self) -> int:
        return sum(1 for c in self.changes if c[3] == ADD)

    def materialize(self, i: int) -> "VersionView":
        if not 0 <= i < self.size:
            raise IndexError(f"version {i} outside 0..{self.size - 1}")
        return VersionView(self, i)

    @property
    def base(self) -> "VersionView":
        return self.materialize(0)


class VersionView:
    """Read-only overlay of one sample version; neighbour lists come back sorted."""

    __slots__ = ("vs", "version", "_cache_l", "_cache_r")

    def __init__(self, vs: VersionedSample, version: int):
        self.vs = vs
        self.version = version
        self._cache_l: dict[int, Sequence[int]] = {}
        self._cache_r: dict[int, Sequence[int]] = {}

    def _resolve(self, base: Sequence[int], deltas) -> Sequence[int]:
        i = self.version
        if self.vs.anchor_version == 0:
            todo = [(nbr, op) for tag, nbr, op in deltas if tag <= i]
        else:
            todo = [(nbr, -op) for tag, nbr, op in reversed(deltas) if tag > i]
        if not todo:
            return base
        s = set(base)
        for nbr, op in todo:
            if op == ADD:
                s.add(nbr)
            else:
                s.discard(nbr)
        return sorted(s)

    def nbrs_left(self, l: int) -> Sequence[int]:
        d = self.vs.deltas_l.get(l)
        if d is None:
            return self.vs.anchor.nbrs_left(l)
        got = self._cache_l.get(l)
        if got is None:
            got = self._cache_l[l] = self._resolve(self.vs.anchor.nbrs_left(l), d)
        return got

    def nbrs_right(self, r: int) -> Sequence[int]:
        d = self.vs.deltas_r.get(r)
        if d is None:
            return self.vs.anchor.nbrs_right(r)
        got = self._cache_r.get(r)
        if got is None:
            got = self._cache_r[r] = self._resolve(self.vs.anchor.nbrs_right(r), d)
        return got

    def edge_set(self) -> set[tuple[int, int]]:
        out = set()
        lefts = set(self.vs.anchor.adj_l) | set(self.vs.deltas_l)
        for l in lefts:
            for r in self.nbrs_left(l):
                out.add((l, r))
        return out


def build_versions(batch: Sequence[EdgeEvent], state: PairingState, graph: SampleGraph):
    """Replay Random Pairing over ``batch``, recording changes and triplets.

    ``graph`` is updated in place and becomes the consolidated sample; the
    returned VersionedSample is anchored on it.
    """
    changes: list[Change] = []
    triplets: list[tuple[int, int, int]] = []
    for j, e in enumerate(batch):
        triplets.append(state.triplet())
        tag = j + 1
        edge = (e.left, e.right)
        if e.sign == INSERT:
            outcome, victim = insert_to_sample(state, graph, edge)
            if outcome is Insertion.REPLACED:
                changes.append((tag, victim[0], victim[1], REMOVE))
            if outcome is not Insertion.SKIPPED:
                changes.append((tag, edge[0], edge[1], ADD))
        elif delete_from_sample(state, graph, edge) is Deletion.REMOVED:
            changes.append((tag, edge[0], edge[1], REMOVE))
    vs = VersionedSample(graph, len(batch), len(batch), changes, triplets)
    return vs, state, graph


def worker_ranges(m: int, p: int) -> list[range]:
    """``p`` contiguous ranges of size ceil(m/p) covering ``0..m-1`` (trailing ones may be empty)."""
    if p < 1:
        raise ConfigError("need at least one worker")
    size = max(1, math.ceil(m / p)) if m else 0
    return [range(min(w * size, m), min((w + 1) * size, m)) for w in range(p)]


@dataclass
class PartialCounts:
    values: list[Number]
    found: list[int]
    comparisons: list[int]  # per worker


def _partials(batch, triplets, found: Sequence[int], budget: int, exact: bool) -> list[Number]:
    out: list[Number] = []
    zero: Number = Fraction(0) if exact else 0.0
    for e, (live, cb, cg), f in zip(batch, triplets, found):
        if f:
            out.append(f * _increment_fast(e.sign, live, cb, cg, budget, exact))
        else:
            out.append(zero)
    return out


def _count_range(vs: VersionedSample, batch, idx: range) -> tuple[list[int], int]:
    found = []
    cmps = 0
    for j in idx:
        e = batch[j]
        f, c = count_instrumented((e.left, e.right), vs.materialize(j))
        found.append(f)
        cmps += c
    return found, cmps


def parallel_count(
    batch: Sequence[EdgeEvent],
    vs: VersionedSample,
    p: int,
    budget: int,
    *,
    exact: bool = False,
    pool: Optional["WorkerPool"] = None,
) -> PartialCounts:
    """Count each batch edge against its version and scale by its triplet's increment.

    Without ``pool`` the worker ranges run one after another in this process;
    with one they run concurrently in the pool's processes.
    """
    ranges = worker_ranges(len(batch), p)
    if pool is None:
        found: list[int] = []
        tallies = []
        for idx in ranges:
            f, c = _count_range(vs, batch, idx)
            found.extend(f)
            tallies.append(c)
    else:
        found, tallies = pool.count(batch, vs, ranges)
    return PartialCounts(_partials(batch, vs.triplets, found, budget, exact), found, tallies)


def aggregate(prior: Number, partials: Iterable[Number]) -> Number:
    """Add partial counts to ``prior`` in ascending event order."""
    total = prior
    for x in partials:
        if x:
            total += x
    return total


# --- process pool -------------------------------------------------------------


def _apply(graph: SampleGraph, change: Change) -> None:
    _, l, r, op = change
    if op == ADD:
        graph.add((l, r))
    else:
        graph.remove((l, r))


def _worker_main(conn, edges):
    replica = SampleGraph(edges)
    while True:
        msg = conn.recv()
        if msg is None:
            break
        changes, items = msg
        # items ascend by version, so the replica walks through every version it
        # needs once; the same result as an overlay lookup without the per-vertex replay
        found = []
        cmps = 0
        ci = 0
        for j, l, r in items:
            while ci < len(changes) and changes[ci][0] <= j:
                _apply(replica, changes[ci])
                ci += 1
            f, c = count_instrumented((l, r), replica)
            found.append(f)
            cmps += c
        conn.send((found, cmps))
        for change in changes[ci:]:
            _apply(replica, change)


class WorkerPool:
    """``p`` forked processes, each holding a replica of the sample.

    Per batch every worker receives the tagged changes (at most two per event)
    plus its own event range, advances its replica to each version in the
    range as it counts, replies, and then rolls the replica forward to the
    consolidated sample. Nothing mutable is shared between processes.
    """

    def __init__(self, p: int, graph: SampleGraph):
        ctx = mp.get_context("fork")
        self.p = p
        self.conns = []
        self.procs = []
        edges = list(graph.edges)
        for _ in range(p):
            parent, child = ctx.Pipe()
            proc = ctx.Process(target=_worker_main, args=(child, edges), daemon=True)
            proc.start()
            child.close()
            self.conns.append(parent)
            self.procs.append(proc)

    def count(self, batch, vs: VersionedSample, ranges) -> tuple[list[int], list[int]]:
        for conn, idx in zip(self.conns, ranges):
            items = [(j, batch[j].left, batch[j].right) for j in idx]
            conn.send((vs.changes, items))
        found: list[int] = []
        tallies = []
        for conn in self.conns:
            f, c = conn.recv()
            found.extend(f)
            tallies.append(c)
        return found, tallies

    def close(self):
        for conn in self.conns:
            try:
                conn.send(None)
            except (BrokenPipeError, OSError):
                pass
        for proc in self.procs:
            proc.join(timeout=5)
            if proc.is_alive():
                proc.terminate()
        for conn in self.conns:
            conn.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# --- driver -------------------------------------------------------------------


@dataclass
class ParAbacus:
    budget: int
    batch_size: int
    workers: int = 1
    seed: int = 0
    exact: bool = False
    backend: str = "serial"
    state: PairingState = field(init=False)
    graph: SampleGraph = field(init=False)
    estimate: Number = field(init=False)
    batch_estimates: list[tuple[int, Number]] = field(init=False, default_factory=list)
    comparisons: list[int] = field(init=False)
    peak_sample: int = field(init=False, default=0)
    peak_changes: int = field(init=False, default=0)
    peak_added: int = field(init=False, default=0)
    events_processed: int = field(init=False, default=0)

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if self.workers < 1:
            raise ConfigError("worker count must be >= 1")
        if self.backend not in ("serial", "process"):
            raise ConfigError(f"unknown backend {self.backend!r}")
        self.state = PairingState.seeded(self.budget, self.seed)
        self.graph = SampleGraph()
        self.estimate = Fraction(0) if self.exact else 0.0
        self.comparisons = [0] * self.workers
        self._pool: Optional[WorkerPool] = None

    def __enter__(self):
        if self.backend == "process":
            self._pool = WorkerPool(self.workers, self.graph)
        return self

    def __exit__(self, *exc):
        if self._pool is not None:
            self._pool.close()
            self._pool = None

    def process_batch(self, batch: Sequence[EdgeEvent]) -> PartialCounts:
        if self.backend == "process" and self._pool is None:
            raise RuntimeError("process backend needs the driver used as a context manager")
        vs, _, _ = build_versions(batch, self.state, self.graph)
        self.peak_changes = max(self.peak_changes, len(vs.changes))
        self.peak_added = max(self.peak_added, vs.added_edges)
        if len(self.graph) > self.peak_sample:
            self.peak_sample = len(self.graph)
        parts = parallel_count(batch, vs, self.workers, self.budget, exact=self.exact, pool=self._pool)
        for w, c in enumerate(parts.comparisons):
            self.comparisons[w] += c
        self.estimate = aggregate(self.estimate, parts.values)
        self.events_processed += len(batch)
        self.batch_estimates.append((self.events_processed, self.estimate))
        return parts

    def run(self, events: Iterable[EdgeEvent], validate: bool = False,
            on_batch: Optional[Callable[["ParAbacus"], None]] = None) -> Number:
        tracker = _LiveTracker() if validate else None
        batch: list[EdgeEvent] = []
        for e in events:
            if tracker is not None:
                tracker.check(e)
            batch.append(e)
            if len(batch) == self.batch_size:
                self.process_batch(batch)
                if on_batch:
                    on_batch(self)
                batch = []
        if batch:
            self.process_batch(batch)
            if on_batch:
                on_batch(self)
        return self.estimate


def run_parabacus(
    events: Iterable[EdgeEvent],
    k: int,
    M: int,
    p: int,
    seed: int,
    *,
    exact: bool = False,
    backend: str = "serial",
    validate: bool = True,
):
    """Batch-parallel run; returns ``(estimate, state, graph)`` like ``run_abacus``."""
    with ParAbacus(k, M, p, seed, exact=exact, backend=backend) as runner:
        runner.run(events, validate=validate)
    return runner.estimate, runner.state, runner.graph


def load_report(run: ParAbacus) -> list[int]:
    """Per-worker intersection comparison tallies accumulated over a run."""
    return list(run.comparisons)


__all__ = [
    "VersionedSample",
    "VersionView",
    "build_versions",
    "parallel_count",
    "aggregate",
    "run_parabacus",
    "load_report",
    "ParAbacus",
    "PartialCounts",
    "WorkerPool",
    "worker_ranges",
]
