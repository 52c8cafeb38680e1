"""Sequential butterfly estimator over a Random Pairing sample."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

from .errors import DegenerateStream, StreamInvariantViolation
from .sample import (
    PairingState,
    SampleGraph,
    delete_from_sample,
    insert_to_sample,
    intersect_count,
)
from .stream import DELETE, INSERT, EdgeEvent

Number = Union[float, Fraction]


class Explore(enum.Enum):
    """Which endpoint's far side gets enumerated.

    ``VIA_V`` walks the sample neighbours of the left endpoint ``u`` and
    intersects each with ``N(v)``; ``VIA_U`` is the mirror image.
    """

    VIA_U = "u"
    VIA_V = "v"


@dataclass(frozen=True)
class DiscoveryInputs:
    live_edges: int
    c_bad: int
    c_good: int
    budget: int

    @property
    def total(self) -> int:
        return self.live_edges + self.c_bad + self.c_good

    @property
    def sample_size(self) -> int:
        return min(self.budget, self.total)


def discovery_probability(inp: DiscoveryInputs) -> Fraction:
    """Probability that three given live edges all sit in the sample."""
    t = inp.total
    if t < 3:
        raise DegenerateStream(f"discovery probability undefined for T={t} < 3")
    y = inp.sample_size
    if y == t:
        return Fraction(1)
    return Fraction(y * (y - 1) * (y - 2), t * (t - 1) * (t - 2))


def increment(sign: int, inp: DiscoveryInputs, exact: bool = True) -> Number:
    p = discovery_probability(inp)
    if p == 0:
        raise DegenerateStream("discovery probability is zero")
    if exact:
        return sign / p
    return sign * p.denominator / p.numerator


def _increment_fast(sign: int, live: int, c_bad: int, c_good: int, budget: int, exact: bool) -> Number:
    t = live + c_bad + c_good
    if t < 3:
        raise DegenerateStream(f"discovery probability undefined for T={t} < 3")
    y = budget if budget < t else t
    if y < 3:
        raise DegenerateStream("discovery probability is zero")
    num = t * (t - 1) * (t - 2)
    den = y * (y - 1) * (y - 2)
    if exact:
        return Fraction(sign * num, den)
    return sign * num / den


def _degree_sum(nbrs, deg_of, skip: int) -> int:
    total = 0
    for x in nbrs:
        if x != skip:
            total += len(deg_of(x))
    return total


def choose_side(edge: tuple[int, int], graph) -> Explore:
    u, v = edge
    nu = graph.nbrs_left(u)
    nv = graph.nbrs_right(v)
    su = _degree_sum(nu, graph.nbrs_right, v)
    sv = _degree_sum(nv, graph.nbrs_left, u)
    return Explore.VIA_V if su < sv else Explore.VIA_U


def count_with_side(edge: tuple[int, int], graph, side: Explore) -> tuple[int, int]:
    """Butterflies through ``edge`` using three sampled edges other than it.

    Returns ``(found, comparisons)``. If ``edge`` itself is sampled it is
    masked: the far endpoint is skipped during enumeration and removed from
    every intersection (it lies in all of them).
    """
    u, v = edge
    if side is Explore.VIA_V:
        walk, other, far_of, skip = graph.nbrs_left(u), graph.nbrs_right(v), graph.nbrs_right, v
    else:
        walk, other, far_of, skip = graph.nbrs_right(v), graph.nbrs_left(u), graph.nbrs_left, u
    if not walk or not other:
        return 0, 0
    masked = 0
    found = 0
    cmps = 0
    for w in walk:
        if w == skip:
            masked = 1
            continue
        f, c, _ = intersect_count(far_of(w), other)
        found += f
        cmps += c
    if masked:
        # the walking endpoint sits in every N(w) and, with edge sampled, in ``other`` too
        found -= len(walk) - 1
    return found, cmps


def count_butterflies_with_sample(edge: tuple[int, int], graph) -> int:
    return count_with_side(edge, graph, choose_side(edge, graph))[0]


def count_instrumented(edge: tuple[int, int], graph) -> tuple[int, int]:
    return count_with_side(edge, graph, choose_side(edge, graph))


@dataclass
class TraceRow:
    index: int
    sign: int
    found: int
    increment: Number
    estimate: Number


@dataclass
class EstimateLedger:
    exact: bool = False
    estimate: Number = 0.0
    events_processed: int = 0
    trace: Optional[list[TraceRow]] = None

    def __post_init__(self):
        if self.exact and not isinstance(self.estimate, Fraction):
            self.estimate = Fraction(self.estimate)

    @classmethod
    def traced(cls, exact: bool = False) -> "EstimateLedger":
        return cls(exact=exact, trace=[])

    def add(self, index: int, sign: int, found: int, inc: Number) -> None:
        if found:
            self.estimate += found * inc
        self.events_processed += 1
        if self.trace is not None:
            self.trace.append(TraceRow(index, sign, found, inc, self.estimate))


def process_event(event: EdgeEvent, state: PairingState, graph: SampleGraph, ledger: EstimateLedger) -> int:
    """Count against the current sample, then update the sample. Returns ``found``."""
    edge = (event.left, event.right)
    found, _ = count_instrumented(edge, graph)
    inc: Number = 0
    if found or ledger.trace is not None:
        try:
            inc = _increment_fast(event.sign, state.live_edges, state.c_bad, state.c_good, state.budget, ledger.exact)
        except DegenerateStream:
            if found:
                raise
    ledger.add(event.index, event.sign, found, inc)
    if event.sign == INSERT:
        insert_to_sample(state, graph, edge)
    else:
        delete_from_sample(state, graph, edge)
    return found


@dataclass
class Abacus:
    """Stateful driver: one sample, one pairing state, one ledger."""

    budget: int
    seed: int = 0
    exact: bool = False
    trace: bool = False
    state: PairingState = field(init=False)
    graph: SampleGraph = field(init=False)
    ledger: EstimateLedger = field(init=False)
    peak_sample: int = field(init=False, default=0)

    def __post_init__(self):
        self.state = PairingState.seeded(self.budget, self.seed)
        self.graph = SampleGraph()
        self.ledger = EstimateLedger(exact=self.exact, trace=[] if self.trace else None)

    @property
    def estimate(self) -> Number:
        return self.ledger.estimate

    def process(self, event: EdgeEvent) -> int:
        found = process_event(event, self.state, self.graph, self.ledger)
        if len(self.graph) > self.peak_sample:
            self.peak_sample = len(self.graph)
        return found

    def run(self, events: Iterable[EdgeEvent]) -> Number:
        for e in events:
            self.process(e)
        return self.ledger.estimate


class _LiveTracker:
    def __init__(self):
        self.live: set[tuple[int, int]] = set()

    def check(self, e: EdgeEvent) -> None:
        edge = (e.left, e.right)
        if e.sign == INSERT:
            if edge in self.live:
                raise StreamInvariantViolation(e.index, f"insert of live edge {edge} at index {e.index}")
            self.live.add(edge)
        elif e.sign == DELETE:
            if edge not in self.live:
                raise StreamInvariantViolation(e.index, f"delete of absent edge {edge} at index {e.index}")
            self.live.remove(edge)
        else:
            raise StreamInvariantViolation(e.index, f"bad sign at index {e.index}")


def run_abacus(
    events: Iterable[EdgeEvent],
    k: int,
    seed: int,
    *,
    exact: bool = False,
    trace: bool = False,
    validate: bool = True,
):
    """Fold the estimator over a stream.

    Returns ``(estimate, state, graph)``; use ``run_abacus_traced`` when the
    per-event ledger is needed. ``validate`` keeps a full live-edge set to reject invalid streams, which costs memory
    proportional to the graph rather than the budget.
    """
    runner = Abacus(k, seed, exact=exact, trace=trace)
    tracker = _LiveTracker() if validate else None
    for e in events:
        if tracker is not None:
            tracker.check(e)
        runner.process(e)
    return runner.ledger.estimate, runner.state, runner.graph


def run_abacus_traced(events: Iterable[EdgeEvent], k: int, seed: int, *, exact: bool = False) -> Abacus:
    runner = Abacus(k, seed, exact=exact, trace=True)
    tracker = _LiveTracker()
    for e in events:
        tracker.check(e)
        runner.process(e)
    return runner
