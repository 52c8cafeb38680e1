"""Exact ground truth: butterfly counts, pair-overlap census, variance formula."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CensusOverflow, ConfigError, StreamInvariantViolation
from .stream import INSERT, EdgeEvent


class ExactGraph:
    """Full adjacency (as Python sets) of the live bipartite graph."""

    def __init__(self, edges: Iterable[tuple[int, int]] = ()):
        self.adj_l: dict[int, set[int]] = {}
        self.adj_r: dict[int, set[int]] = {}
        self.n_edges = 0
        for e in edges:
            self.add(e)

    def __contains__(self, edge):
        l, r = edge
        return r in self.adj_l.get(l, ())

    def add(self, edge: tuple[int, int]) -> None:
        l, r = edge
        ns = self.adj_l.setdefault(l, set())
        if r in ns:
            raise ValueError(f"edge {edge} already present")
        ns.add(r)
        self.adj_r.setdefault(r, set()).add(l)
        self.n_edges += 1

    def remove(self, edge: tuple[int, int]) -> None:
        l, r = edge
        self.adj_l[l].remove(r)
        self.adj_r[r].remove(l)
        if not self.adj_l[l]:
            del self.adj_l[l]
        if not self.adj_r[r]:
            del self.adj_r[r]
        self.n_edges -= 1

    def edges(self) -> list[tuple[int, int]]:
        return [(l, r) for l, ns in self.adj_l.items() for r in ns]

    def butterflies_through(self, edge: tuple[int, int]) -> int:
        """Butterflies containing ``edge`` in this graph plus ``edge``."""
        u, v = edge
        nu = self.adj_l.get(u, set())
        nv = self.adj_r.get(v, set())
        if len(nu) > len(nv):
            walk, other, far, skip, drop = nv, nu, self.adj_l, u, v
        else:
            walk, other, far, skip, drop = nu, nv, self.adj_r, v, u
        total = 0
        for w in walk:
            if w == skip:
                continue
            common = far[w] & other
            total += len(common) - (drop in common)
        return total

    def biadjacency(self):
        """CSR biadjacency matrix with dense row/column relabelling."""
        lefts = sorted(self.adj_l)
        rights = sorted(self.adj_r)
        li = {v: i for i, v in enumerate(lefts)}
        ri = {v: i for i, v in enumerate(rights)}
        rows, cols = [], []
        for l, ns in self.adj_l.items():
            for r in ns:
                rows.append(li[l])
                cols.append(ri[r])
        data = np.ones(len(rows), dtype=np.int64)
        a = sp.csr_matrix((data, (rows, cols)), shape=(len(lefts), len(rights)), dtype=np.int64)
        return a, lefts, rights


def _pair_counts(a) -> np.ndarray:
    """Common-neighbour counts of all unordered same-side row pairs (off-diagonal, upper)."""
    w = (a @ a.T).tocoo()
    mask = w.row < w.col
    return w.data[mask]


def exact_butterfly_count(g: ExactGraph) -> int:
    """Wedge accumulation: sum of C(common, 2) over same-side vertex pairs."""
    if g.n_edges == 0:
        return 0
    a, _, _ = g.biadjacency()
    # use the side with fewer wedges as pair endpoints' centres
    deg_l = np.asarray(a.sum(axis=1)).ravel()
    deg_r = np.asarray(a.sum(axis=0)).ravel()
    wedges_l = int((deg_l * (deg_l - 1)).sum())
    wedges_r = int((deg_r * (deg_r - 1)).sum())
    m = a if wedges_r <= wedges_l else a.T.tocsr()
    c = _pair_counts(m).astype(object)
    return int(sum(int(x) * (int(x) - 1) // 2 for x in c))


def naive_butterfly_count(edges: Iterable[tuple[int, int]]) -> int:
    """Enumerate every (left pair, right pair) and test all four edges."""
    es = set(edges)
    lefts = sorted({l for l, _ in es})
    rights = sorted({r for _, r in es})
    total = 0
    for a, b in itertools.combinations(lefts, 2):
        for x, y in itertools.combinations(rights, 2):
            if (a, x) in es and (a, y) in es and (b, x) in es and (b, y) in es:
                total += 1
    return total


def exact_count_stream(events: Iterable[EdgeEvent]) -> list[int]:
    """Exact butterfly count after every event (incremental)."""
    g = ExactGraph()
    count = 0
    out = []
    for e in events:
        edge = (e.left, e.right)
        present = edge in g
        if e.sign == INSERT:
            if present:
                raise StreamInvariantViolation(e.index)
            count += g.butterflies_through(edge)
            g.add(edge)
        else:
            if not present:
                raise StreamInvariantViolation(e.index)
            g.remove(edge)
            count -= g.butterflies_through(edge)
        out.append(count)
    return out


def final_graph(events: Iterable[EdgeEvent]) -> ExactGraph:
    g = ExactGraph()
    for e in events:
        if e.sign == INSERT:
            g.add((e.left, e.right))
        else:
            g.remove((e.left, e.right))
    return g


# --- overlap census -----------------------------------------------------------


@dataclass(frozen=True)
class OverlapCensus:
    """Butterfly pairs sharing 0, 1 and 2 edges."""

    y1: int
    y2: int
    y3: int

    @property
    def pairs(self) -> int:
        return self.y1 + self.y2 + self.y3


def enumerate_butterflies(g: ExactGraph, limit: int | None = None) -> list[tuple[int, int, int, int]]:
    """All butterflies as sorted ``(l1, l2, r1, r2)`` tuples."""
    out = []
    lefts = sorted(g.adj_l)
    for i, a in enumerate(lefts):
        na = g.adj_l[a]
        for b in lefts[i + 1 :]:
            common = sorted(na & g.adj_l[b])
            for x, y in itertools.combinations(common, 2):
                out.append((a, b, x, y))
                if limit is not None and len(out) > limit:
                    raise CensusOverflow(f"more than {limit} butterflies")
    return out


def _bfly_edges(b) -> frozenset:
    l1, l2, r1, r2 = b
    return frozenset(((l1, r1), (l1, r2), (l2, r1), (l2, r2)))


def overlap_census(g: ExactGraph, limit: int = 10_000) -> OverlapCensus:
    """Classify every unordered butterfly pair by the number of shared edges."""
    bs = [_bfly_edges(b) for b in enumerate_butterflies(g, limit)]
    ys = [0, 0, 0]
    for i in range(len(bs)):
        bi = bs[i]
        for j in range(i + 1, len(bs)):
            shared = len(bi & bs[j])
            if shared > 2:
                raise AssertionError("two distinct butterflies share three edges")
            ys[shared] += 1
    return OverlapCensus(*ys)


def overlap_census_counting(g: ExactGraph) -> OverlapCensus:
    """Same census without enumerating pairs.

    Two butterflies share two edges only through a common wedge; a wedge whose
    endpoints have ``n`` common neighbours lies in ``n - 1`` butterflies. Pairs
    sharing at least one edge come from per-edge butterfly counts.
    """
    if g.n_edges == 0:
        return OverlapCensus(0, 0, 0)
    a, _, _ = g.biadjacency()
    at = a.T.tocsr()
    y3 = 0
    for m in (a, at):
        n = _pair_counts(m).astype(object)
        y3 += sum(int(c) * comb(max(int(c) - 1, 0), 2) for c in n)
    n_left_pairs = _pair_counts(a).astype(object)
    b_total = sum(comb(int(c), 2) for c in n_left_pairs)

    # butterflies per edge: length-3 paths minus the degenerate ones
    p3 = (a @ at @ a).multiply(a).tocoo()
    deg_l = np.asarray(a.sum(axis=1)).ravel()
    deg_r = np.asarray(a.sum(axis=0)).ravel()
    per_edge = p3.data - deg_l[p3.row] - deg_r[p3.col] + 1
    shared_any = sum(comb(int(b), 2) for b in per_edge)
    y2 = shared_any - 2 * y3
    y1 = comb(b_total, 2) - y2 - y3
    return OverlapCensus(int(y1), int(y2), int(y3))


# --- variance -----------------------------------------------------------------


def inclusion_ratio(n_edges: int, k: int, j: int) -> Fraction:
    """C(|E|-j, k-j) / C(|E|, k): chance that j fixed edges are all in a k-sample."""
    if k - j < 0:
        return Fraction(0)
    num = 1
    den = 1
    for i in range(j):
        num *= k - i
        den *= n_edges - i
    return Fraction(num, den)


@dataclass(frozen=True)
class VarianceForm:
    gamma: Fraction
    variance: Fraction
    upper_bound: Fraction


def variance_closed_form(census: OverlapCensus, butterflies: int, n_edges: int, k: int) -> VarianceForm:
    """Exact variance and its upper bound for a size-k uniform sample of |E| edges."""
    if k < 4:
        raise ConfigError("variance formula needs k >= 4")
    if n_edges < k:
        raise ConfigError("variance formula needs |E| >= k")
    if census.pairs != comb(butterflies, 2):
        raise ConfigError("census does not match butterfly count")
    b = Fraction(butterflies)
    gamma = 1 / inclusion_ratio(n_edges, k, 4)
    pairs = (
        census.y1 * inclusion_ratio(n_edges, k, 8)
        + census.y2 * inclusion_ratio(n_edges, k, 7)
        + census.y3 * inclusion_ratio(n_edges, k, 6)
    )
    var = gamma * b - b * b + 2 * gamma * gamma * pairs
    bound = gamma * b + 2 * gamma * gamma * comb(butterflies, 2) * inclusion_ratio(n_edges, k, 6) - b * b
    return VarianceForm(gamma, var, bound)
