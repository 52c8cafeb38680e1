"""Stream and graph builders shared by the test modules."""

import random

from hypothesis import strategies as st

from bflystream.stream import DELETE, INSERT, EdgeEvent, generate_dynamic_stream, insertions


def random_stream(seed, n_left=8, n_right=8, n_edges=40, alpha=0.3):
    """Small insertion+deletion stream over a random simple bipartite graph."""
    rng = random.Random(seed)
    cells = rng.sample(range(n_left * n_right), min(n_edges, n_left * n_right))
    base = insertions(divmod(c, n_right) for c in cells)
    return generate_dynamic_stream(base, alpha, seed + 1)


def churn_stream(seed, n_left=6, n_right=6, length=120, p_delete=0.4):
    """Stream with re-insertions of previously deleted edges."""
    rng = random.Random(seed)
    live, out = set(), []
    for _ in range(length):
        if live and rng.random() < p_delete:
            l, r = rng.choice(sorted(live))
            live.remove((l, r))
            out.append(EdgeEvent(l, r, DELETE, len(out) + 1))
        else:
            free = [(l, r) for l in range(n_left) for r in range(n_right) if (l, r) not in live]
            if not free:
                continue
            l, r = rng.choice(free)
            live.add((l, r))
            out.append(EdgeEvent(l, r, INSERT, len(out) + 1))
    return out


@st.composite
def bipartite_edges(draw, max_left=7, max_right=7, max_edges=30):
    nl = draw(st.integers(1, max_left))
    nr = draw(st.integers(1, max_right))
    cells = draw(st.sets(st.integers(0, nl * nr - 1), max_size=min(max_edges, nl * nr)))
    return [divmod(c, nr) for c in sorted(cells)]


# Worked example: arriving edge (u, v) = (left 0, right 0). u's only sampled
# neighbour is r2 (degree 2: u and l1); v's sampled neighbours are l1 (degree 3)
# and l2 (degree 2), cumulative degree 5. One butterfly {u, v, l1, r2}.
FIG_U, FIG_V = 0, 0
FIG_L1, FIG_L2 = 1, 2
FIG_R1, FIG_R2, FIG_R3 = 1, 2, 3
FIG_SAMPLE = [
    (FIG_U, FIG_R2),
    (FIG_L1, FIG_R2),
    (FIG_L1, FIG_V),
    (FIG_L1, FIG_R3),
    (FIG_L2, FIG_V),
    (FIG_L2, FIG_R1),
]


# one "CRITERION n PASS|FAIL ..." line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []
