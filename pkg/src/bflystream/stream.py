"""Stream elements, edge-list ingestion and fully dynamic stream synthesis.

Edges are stored as ``(left, right)`` pairs of per-side integer ordinals. The
side of a vertex is implied by its position in the pair, so left 3 and right 3
are different vertices.
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import os
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, NamedTuple, Optional, Sequence, Union

from .errors import ConfigError, EmptyStream, StreamInvariantViolation

log = logging.getLogger(__name__)

INSERT = 1
DELETE = -1


class Side(enum.Enum):
    LEFT = "L"
    RIGHT = "R"


class VertexId(NamedTuple):
    side: Side
    ordinal: int

    def __str__(self):
        return f"{self.side.value}{self.ordinal}"


class Format(enum.Enum):
    TSV = "tsv"
    KONECT = "konect"
    NATIVE = "native"


@dataclass(frozen=True)
class EdgeEvent:
    left: int
    right: int
    sign: int
    index: int

    @property
    def edge(self) -> tuple[int, int]:
        return (self.left, self.right)

    @property
    def is_insert(self) -> bool:
        return self.sign == INSERT

    @property
    def left_vertex(self) -> VertexId:
        return VertexId(Side.LEFT, self.left)

    @property
    def right_vertex(self) -> VertexId:
        return VertexId(Side.RIGHT, self.right)


@dataclass
class ParsedStream:
    """Events read from a file plus per-reason counts of skipped lines."""

    events: list[EdgeEvent]
    skipped: Counter = field(default_factory=Counter)
    left_ids: dict[str, int] = field(default_factory=dict)
    right_ids: dict[str, int] = field(default_factory=dict)

    def __iter__(self) -> Iterator[EdgeEvent]:
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def __getitem__(self, i):
        return self.events[i]


Source = Union[str, os.PathLike, bytes, IO]


def _open_text(source: Source) -> IO[str]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8")


class _IdMap:
    def __init__(self, remap: bool):
        self.remap = remap
        self.table: dict[str, int] = {}

    def __call__(self, token: str) -> int:
        """Ordinal for ``token``; ValueError if it cannot be kept verbatim."""
        if not self.remap:
            value = int(token)
            if value < 0:
                raise ValueError(token)
            return value
        got = self.table.get(token)
        if got is None:
            got = self.table[token] = len(self.table)
        return got


def parse_edge_list(
    source: Source,
    fmt: Union[Format, str] = Format.TSV,
    *,
    remap: bool = False,
    drop_self_loops: Optional[bool] = None,
) -> ParsedStream:
    """Read an edge list into validated events.

    ``remap=False`` keeps non-negative integer ids as ordinals; ``remap=True``
    assigns dense per-side ordinals in first-seen order. Lines that are
    malformed, duplicate a live edge, delete an absent edge or (when
    ``drop_self_loops``) name the same raw id on both sides are skipped and
    counted in ``ParsedStream.skipped``. KONECT bipartite files number each
    side from 1 and native files already hold per-side ordinals, so equal ids
    there are distinct vertices; ``drop_self_loops`` defaults to true for
    plain TSV only.
    """
    fmt = Format(fmt)
    if drop_self_loops is None:
        drop_self_loops = fmt is Format.TSV
    left_map, right_map = _IdMap(remap), _IdMap(remap)
    live: set[tuple[int, int]] = set()
    events: list[EdgeEvent] = []
    skipped: Counter = Counter()

    fh = _open_text(source)
    try:
        rows = _rows(fh, fmt)
        for fields in rows:
            if fields is None:
                skipped["malformed"] += 1
                continue
            ltok, rtok, sign = fields
            if drop_self_loops and ltok == rtok:
                skipped["self_loop"] += 1
                continue
            try:
                edge = (left_map(ltok), right_map(rtok))
            except ValueError:
                # verbatim mode needs non-negative integer ids
                skipped["malformed"] += 1
                continue
            if sign == INSERT:
                if edge in live:
                    skipped["duplicate"] += 1
                    continue
                live.add(edge)
            else:
                if edge not in live:
                    skipped["delete_absent"] += 1
                    continue
                live.discard(edge)
            events.append(EdgeEvent(edge[0], edge[1], sign, len(events) + 1))
    finally:
        if isinstance(source, (str, os.PathLike)):
            fh.close()

    for reason, n in sorted(skipped.items()):
        log.warning("skipped %d %s line(s)", n, reason)
    if not events:
        raise EmptyStream("no parseable edges in input")
    return ParsedStream(events, skipped, left_map.table, right_map.table)


def _rows(fh: IO[str], fmt: Format) -> Iterator:
    if fmt is Format.NATIVE:
        reader = csv.reader(fh)
        for row in reader:
            if not row or row[0].strip() == "index":
                continue
            try:
                _, ltok, rtok, stok = (c.strip() for c in row)
                sign = int(stok)
            except ValueError:
                yield None
                continue
            yield (ltok, rtok, sign) if sign in (INSERT, DELETE) else None
        return

    for line in fh:
        line = line.strip()
        if not line:
            continue
        if line[0] == "%" or (fmt is Format.TSV and line[0] == "#"):
            continue
        parts = line.split()
        if len(parts) < 2:
            yield None
            continue
        sign = INSERT
        if fmt is Format.TSV and len(parts) >= 3:
            try:
                sign = int(float(parts[2]))
            except ValueError:
                yield None
                continue
            if sign not in (INSERT, DELETE):
                yield None
                continue
        # KONECT weight/timestamp columns are ignored
        yield parts[0], parts[1], sign


def write_events(events: Iterable[EdgeEvent], dest: Union[str, os.PathLike, IO[str]]) -> None:
    """Serialize events in the native ``index,left,right,sign`` CSV format."""
    own = isinstance(dest, (str, os.PathLike))
    fh = open(dest, "w", encoding="utf-8", newline="") if own else dest
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "left", "right", "sign"])
        for e in events:
            w.writerow([e.index, e.left, e.right, e.sign])
    finally:
        if own:
            fh.close()


def insertions(edges: Iterable[tuple[int, int]]) -> list[EdgeEvent]:
    return [EdgeEvent(l, r, INSERT, i) for i, (l, r) in enumerate(edges, 1)]


def generate_dynamic_stream(base: Sequence[EdgeEvent], alpha: float, seed: int) -> list[EdgeEvent]:
    """Add ``floor(alpha * len(base))`` deletions of distinct base edges.

    Each deletion lands in a uniformly drawn gap after its own insertion;
    deletions sharing a gap keep base order.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    n = len(base)
    if any(not e.is_insert for e in base):
        raise ConfigError("base stream must contain insertions only")
    rng = random.Random(seed)
    n_del = int(alpha * n)
    chosen = sorted(rng.sample(range(n), n_del))
    # gap g means "right after base[g - 1]"
    placed = sorted((rng.randint(i + 1, n), i) for i in chosen)

    out: list[EdgeEvent] = []
    j = 0
    for pos, e in enumerate(base):
        out.append(EdgeEvent(e.left, e.right, INSERT, len(out) + 1))
        while j < len(placed) and placed[j][0] == pos + 1:
            d = base[placed[j][1]]
            out.append(EdgeEvent(d.left, d.right, DELETE, len(out) + 1))
            j += 1
    return out


def validate_stream(events: Iterable[EdgeEvent]) -> None:
    """Raise StreamInvariantViolation at the first invalid event."""
    live: set[tuple[int, int]] = set()
    last = 0
    for pos, e in enumerate(events, 1):
        if e.index <= last:
            raise StreamInvariantViolation(pos, f"non-increasing index at position {pos}")
        last = e.index
        edge = (e.left, e.right)
        if e.sign == INSERT:
            if edge in live:
                raise StreamInvariantViolation(e.index, f"insert of live edge {edge} at index {e.index}")
            live.add(edge)
        elif e.sign == DELETE:
            if edge not in live:
                raise StreamInvariantViolation(e.index, f"delete of absent edge {edge} at index {e.index}")
            live.remove(edge)
        else:
            raise StreamInvariantViolation(e.index, f"bad sign {e.sign!r} at index {e.index}")


def live_edges_after(events: Iterable[EdgeEvent]) -> set[tuple[int, int]]:
    live: set[tuple[int, int]] = set()
    for e in events:
        if e.sign == INSERT:
            live.add((e.left, e.right))
        else:
            live.discard((e.left, e.right))
    return live


def random_bipartite_edges(n_left: int, n_right: int, n_edges: int, seed: int) -> list[tuple[int, int]]:
    """Uniform simple bipartite graph with ``n_edges`` edges in random arrival order."""
    if n_edges > n_left * n_right:
        raise ConfigError("more edges requested than vertex pairs available")
    rng = random.Random(seed)
    cells = rng.sample(range(n_left * n_right), n_edges)
    return [divmod(c, n_right) for c in cells]


def skewed_bipartite_edges(
    n_left: int, n_right: int, n_edges: int, seed: int, exponent: float = 0.7
) -> list[tuple[int, int]]:
    """Simple bipartite graph with Zipf-like endpoint weights (hubs on both sides)."""
    if n_edges > n_left * n_right // 2:
        raise ConfigError("skewed generator needs at most half of all vertex pairs")
    rng = random.Random(seed)
    wl = [1.0 / (i + 1) ** exponent for i in range(n_left)]
    wr = [1.0 / (i + 1) ** exponent for i in range(n_right)]
    seen: set[tuple[int, int]] = set()
    out: list[tuple[int, int]] = []
    while len(out) < n_edges:
        need = n_edges - len(out)
        ls = rng.choices(range(n_left), weights=wl, k=need)
        rs = rng.choices(range(n_right), weights=wr, k=need)
        for e in zip(ls, rs):
            if e not in seen:
                seen.add(e)
                out.append(e)
    return out
