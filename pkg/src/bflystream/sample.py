"""Bounded uniform edge sample maintained with Random Pairing."""

from __future__ import annotations

import bisect
import csv
import enum
import io
import json
import os
import random
from dataclasses import dataclass, field
from typing import IO, Optional, Sequence, Union

from .errors import ConfigError
from .stream import Side, VertexId

_EMPTY: tuple = ()

# merge when sizes are within this ratio, gallop otherwise
GALLOP_RATIO = 8


class Insertion(enum.Enum):
    ADDED = "added"
    REPLACED = "replaced"
    SKIPPED = "skipped"


class Deletion(enum.Enum):
    REMOVED = "removed"
    NOT_IN_SAMPLE = "not_in_sample"


class SampleGraph:
    """Sampled edges as sorted per-vertex neighbour lists on both sides.

    A flat edge registry with a position index gives O(1) uniform eviction.
    Vertices whose last sampled edge goes away are dropped.
    """

    __slots__ = ("adj_l", "adj_r", "edges", "_pos")

    def __init__(self, edges: Sequence[tuple[int, int]] = ()):
        self.adj_l: dict[int, list[int]] = {}
        self.adj_r: dict[int, list[int]] = {}
        self.edges: list[tuple[int, int]] = []
        self._pos: dict[tuple[int, int], int] = {}
        for e in edges:
            self.add(e)

    def __len__(self):
        return len(self.edges)

    def __contains__(self, edge):
        return edge in self._pos

    def add(self, edge: tuple[int, int]) -> None:
        if edge in self._pos:
            raise ValueError(f"edge {edge} already sampled")
        l, r = edge
        self._pos[edge] = len(self.edges)
        self.edges.append(edge)
        bisect.insort(self.adj_l.setdefault(l, []), r)
        bisect.insort(self.adj_r.setdefault(r, []), l)

    def remove(self, edge: tuple[int, int]) -> None:
        i = self._pos.pop(edge)
        last = self.edges.pop()
        if i < len(self.edges):
            self.edges[i] = last
            self._pos[last] = i
        l, r = edge
        _drop(self.adj_l, l, r)
        _drop(self.adj_r, r, l)

    def nbrs_left(self, l: int) -> Sequence[int]:
        return self.adj_l.get(l, _EMPTY)

    def nbrs_right(self, r: int) -> Sequence[int]:
        return self.adj_r.get(r, _EMPTY)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(self._pos)

    def copy(self) -> "SampleGraph":
        g = SampleGraph()
        g.adj_l = {v: list(ns) for v, ns in self.adj_l.items()}
        g.adj_r = {v: list(ns) for v, ns in self.adj_r.items()}
        g.edges = list(self.edges)
        g._pos = dict(self._pos)
        return g

    def check(self) -> None:
        """Assert internal consistency (test helper)."""
        assert len(self._pos) == len(self.edges)
        n = 0
        for l, ns in self.adj_l.items():
            assert ns and ns == sorted(set(ns))
            for r in ns:
                assert (l, r) in self._pos
                n += 1
        assert n == len(self.edges)
        for r, ns in self.adj_r.items():
            assert ns and ns == sorted(set(ns))
            for l in ns:
                assert (l, r) in self._pos
        assert sum(len(ns) for ns in self.adj_r.values()) == n


def _drop(adj: dict[int, list[int]], v: int, nbr: int) -> None:
    ns = adj[v]
    del ns[bisect.bisect_left(ns, nbr)]
    if not ns:
        del adj[v]


@dataclass
class PairingState:
    budget: int
    live_edges: int = 0
    c_bad: int = 0
    c_good: int = 0
    rng: random.Random = field(default_factory=random.Random, repr=False, compare=False)

    def __post_init__(self):
        if self.budget < 2:
            raise ConfigError(f"budget must be >= 2, got {self.budget}")

    @classmethod
    def seeded(cls, budget: int, seed: int) -> "PairingState":
        return cls(budget=budget, rng=random.Random(seed))

    def triplet(self) -> tuple[int, int, int]:
        return (self.live_edges, self.c_bad, self.c_good)


def insert_to_sample(state: PairingState, graph: SampleGraph, edge: tuple[int, int]):
    """Random Pairing insertion. Returns ``(Insertion, evicted_edge_or_None)``."""
    state.live_edges += 1
    pending = state.c_bad + state.c_good
    rng = state.rng
    if pending == 0:
        if len(graph.edges) < state.budget:
            graph.add(edge)
            return Insertion.ADDED, None
        # |E| already counts this edge
        if rng.randrange(state.live_edges) < state.budget:
            victim = graph.edges[rng.randrange(len(graph.edges))]
            graph.remove(victim)
            graph.add(edge)
            return Insertion.REPLACED, victim
        return Insertion.SKIPPED, None
    if rng.randrange(pending) < state.c_bad:
        graph.add(edge)
        state.c_bad -= 1
        return Insertion.ADDED, None
    state.c_good -= 1
    return Insertion.SKIPPED, None


def delete_from_sample(state: PairingState, graph: SampleGraph, edge: tuple[int, int]) -> Deletion:
    state.live_edges -= 1
    if edge in graph:
        graph.remove(edge)
        state.c_bad += 1
        return Deletion.REMOVED
    state.c_good += 1
    return Deletion.NOT_IN_SAMPLE


def neighbors_in_sample(graph, v: VertexId) -> list[VertexId]:
    if v.side is Side.LEFT:
        return [VertexId(Side.RIGHT, r) for r in graph.nbrs_left(v.ordinal)]
    return [VertexId(Side.LEFT, l) for l in graph.nbrs_right(v.ordinal)]


def intersect(a: Sequence[int], b: Sequence[int]) -> list[int]:
    return intersect_count(a, b, collect=True)[2]


def intersect_count(a: Sequence[int], b: Sequence[int], collect: bool = False):
    """Intersect two sorted duplicate-free sequences.

    Returns ``(size, comparisons, items)``; ``items`` is only filled when
    ``collect`` is true. Linear merge for similar sizes, galloping (binary
    search of each small-side element in the shrinking tail of the large side)
    otherwise.
    """
    if len(a) > len(b):
        a, b = b, a
    na, nb = len(a), len(b)
    out: list[int] = []
    if na == 0:
        return 0, 0, out
    found = 0
    cmps = 0
    if nb > GALLOP_RATIO * na:
        lo = 0
        steps = max(nb.bit_length(), 1)
        for x in a:
            lo = bisect.bisect_left(b, x, lo)
            cmps += steps
            if lo == nb:
                break
            if b[lo] == x:
                found += 1
                if collect:
                    out.append(x)
                lo += 1
        return found, cmps, out
    i = j = 0
    x, y = a[0], b[0]
    while True:
        cmps += 1
        if x < y:
            i += 1
            if i == na:
                break
            x = a[i]
        elif y < x:
            j += 1
            if j == nb:
                break
            y = b[j]
        else:
            found += 1
            if collect:
                out.append(x)
            i += 1
            j += 1
            if i == na or j == nb:
                break
            x, y = a[i], b[j]
    return found, cmps, out


# --- checkpoints -------------------------------------------------------------


def dump_snapshot(state: PairingState, graph: SampleGraph, dest: Union[str, os.PathLike, IO[str]]) -> None:
    """Write ``(S, PairingState)`` as CSV with ``#``-prefixed header lines.

    Edges are written in registry order so that eviction indices survive a
    round trip; the RNG state is stored as JSON.
    """
    own = isinstance(dest, (str, os.PathLike))
    fh = open(dest, "w", encoding="utf-8", newline="") if own else dest
    try:
        fh.write(f"# budget={state.budget}\n")
        fh.write(f"# live_edges={state.live_edges}\n")
        fh.write(f"# c_bad={state.c_bad}\n")
        fh.write(f"# c_good={state.c_good}\n")
        fh.write(f"# rng={json.dumps(state.rng.getstate())}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["left", "right"])
        w.writerows(graph.edges)
    finally:
        if own:
            fh.close()


def load_snapshot(source: Union[str, os.PathLike, IO[str]]) -> tuple[PairingState, SampleGraph]:
    own = isinstance(source, (str, os.PathLike))
    fh = open(source, "r", encoding="utf-8", newline="") if own else source
    try:
        header: dict[str, str] = {}
        edges: list[tuple[int, int]] = []
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                key, _, value = line[2:].partition("=")
                header[key] = value
            elif line and line != "left,right":
                l, r = line.split(",")
                edges.append((int(l), int(r)))
    finally:
        if own:
            fh.close()
    rng = random.Random()
    if "rng" in header:
        version, internal, gauss = json.loads(header["rng"])
        rng.setstate((version, tuple(internal), gauss))
    state = PairingState(
        budget=int(header["budget"]),
        live_edges=int(header["live_edges"]),
        c_bad=int(header["c_bad"]),
        c_good=int(header["c_good"]),
        rng=rng,
    )
    return state, SampleGraph(edges)


def snapshot_text(state: PairingState, graph: SampleGraph) -> str:
    buf = io.StringIO()
    dump_snapshot(state, graph, buf)
    return buf.getvalue()


def replay_sample(events, budget: int, seed: int, graph: Optional[SampleGraph] = None):
    """Run only the sampler over a stream; returns ``(state, graph)``."""
    state = PairingState.seeded(budget, seed)
    graph = SampleGraph() if graph is None else graph
    for e in events:
        if e.sign > 0:
            insert_to_sample(state, graph, (e.left, e.right))
        else:
            delete_from_sample(state, graph, (e.left, e.right))
    return state, graph
