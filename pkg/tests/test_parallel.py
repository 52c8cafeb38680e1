from fractions import Fraction

import pytest

from bflystream.errors import ConfigError
from bflystream.estimator import Abacus, count_instrumented, run_abacus
from bflystream.parallel import (
    ADD,
    ParAbacus,
    VersionedSample,
    aggregate,
    build_versions,
    load_report,
    parallel_count,
    run_parabacus,
    worker_ranges,
)
from bflystream.sample import PairingState, SampleGraph, replay_sample, snapshot_text
from bflystream.stream import insertions

from helpers import churn_stream, random_stream


def test_single_event_batch():
    state = PairingState.seeded(5, 0)
    graph = SampleGraph([(0, 0)])
    state.live_edges = 1
    vs, state, graph = build_versions(insertions([(1, 1)]), state, graph)
    assert len(vs) == 1
    assert vs.triplets == [(1, 0, 0)]
    assert vs.base.edge_set() == {(0, 0)}
    assert graph.edge_set() == {(0, 0), (1, 1)}


def test_two_insertions_into_empty_sample():
    vs, state, graph = build_versions(insertions([(0, 0), (0, 1)]), PairingState.seeded(2, 0), SampleGraph())
    assert vs.triplets == [(0, 0, 0), (1, 0, 0)]
    assert vs.materialize(0).edge_set() == set()
    assert vs.materialize(1).edge_set() == {(0, 0)}
    assert graph.edge_set() == {(0, 0), (0, 1)}


def test_forward_anchor_overlay():
    vs = VersionedSample(SampleGraph(), 0, 2, [(1, 3, 4, ADD)], [(0, 0, 0), (1, 0, 0)])
    assert (3, 4) not in vs.materialize(0).edge_set()
    assert vs.materialize(1).nbrs_left(3) == [4]
    with pytest.raises(IndexError):
        vs.materialize(2)


@pytest.mark.parametrize("seed", range(6))
def test_views_match_sequential_replay(seed):
    events = churn_stream(seed, n_left=7, n_right=7, length=160, p_delete=0.35)
    k = 8
    n = len(events)
    prefix, batch = events[:60], events[60:]
    state, graph = replay_sample(prefix, k, seed)
    vs, _, consolidated = build_versions(batch, state, graph)
    for i in range(len(batch)):
        _, expect = replay_sample(events[: 60 + i], k, seed)
        assert vs.materialize(i).edge_set() == expect.edge_set()
    assert vs.triplets[-1] == replay_sample(events[: n - 1], k, seed)[0].triplet()
    ref_state, ref_graph = replay_sample(events, k, seed)
    assert snapshot_text(ref_state, ref_graph) == snapshot_text(state, consolidated)


def test_delta_budget():
    events = churn_stream(1, n_left=10, n_right=10, length=600, p_delete=0.3)
    for M in (1, 7, 50):
        runner = ParAbacus(6, M, 3, seed=2)
        runner.run(events)
        assert runner.peak_added <= M
        assert runner.peak_changes <= 2 * M


@pytest.mark.parametrize("M", [1, 5, 64])
def test_partials_independent_of_worker_count(M):
    events = random_stream(3, n_left=10, n_right=10, n_edges=90)
    state, graph = replay_sample(events[:20], 15, 4)
    batch = events[20 : 20 + M]
    vs, _, _ = build_versions(batch, state, graph)
    ref = parallel_count(batch, vs, 1, 15, exact=True)
    for p in (2, 4, 8, M):
        got = parallel_count(batch, vs, p, 15, exact=True)
        assert got.values == ref.values
        assert sum(got.comparisons) == sum(ref.comparisons)


def test_worker_ranges():
    assert worker_ranges(10, 3) == [range(0, 4), range(4, 8), range(8, 10)]
    assert worker_ranges(2, 4) == [range(0, 1), range(1, 2), range(2, 2), range(2, 2)]
    assert worker_ranges(0, 2) == [range(0, 0), range(0, 0)]
    with pytest.raises(ConfigError):
        worker_ranges(4, 0)


def test_aggregate_examples():
    assert aggregate(5.0, [0.0, 0.0]) == 5.0
    assert aggregate(Fraction(7), [Fraction(12), Fraction(-12)]) == 7
    assert aggregate(0, []) == 0


@pytest.mark.parametrize("M,p", [(1, 1), (7, 4), (500, 8), (3, 3)])
@pytest.mark.parametrize("seed", range(3))
def test_equivalence_after_every_batch(M, p, seed):
    events = random_stream(seed + 10, n_left=9, n_right=9, n_edges=70, alpha=0.25)
    k = 12
    seq = Abacus(k, seed, exact=True, trace=True)
    seq.run(events)
    runner = ParAbacus(k, M, p, seed, exact=True)
    runner.run(events)
    for offset, est in runner.batch_estimates:
        assert est == seq.ledger.trace[offset - 1].estimate
    assert snapshot_text(runner.state, runner.graph) == snapshot_text(seq.state, seq.graph)


def test_float_mode_is_bit_identical():
    events = churn_stream(5, n_left=9, n_right=9, length=500, p_delete=0.3)
    ref, _, _ = run_abacus(events, 10, 1)
    for M, p in [(7, 4), (500, 8)]:
        assert run_parabacus(events, 10, M, p, 1)[0] == ref


def test_process_backend_matches():
    events = random_stream(6, n_left=12, n_right=12, n_edges=120, alpha=0.2)
    ref, ref_state, ref_graph = run_abacus(events, 20, 3)
    with ParAbacus(20, 16, 3, seed=3, backend="process") as runner:
        runner.run(events)
        tallies = load_report(runner)
    assert runner.estimate == ref
    assert snapshot_text(runner.state, runner.graph) == snapshot_text(ref_state, ref_graph)
    serial = ParAbacus(20, 16, 3, seed=3)
    serial.run(events)
    assert tallies == load_report(serial)


def test_process_backend_requires_context():
    runner = ParAbacus(5, 2, 2, backend="process")
    with pytest.raises(RuntimeError):
        runner.process_batch(insertions([(0, 0)]))


def test_load_report():
    events = random_stream(8, n_left=10, n_right=10, n_edges=80)
    single = ParAbacus(12, 10, 1, seed=0)
    single.run(events)
    runner = Abacus(12, 0)
    total = 0
    for e in events:
        total += count_instrumented(e.edge, runner.graph)[1]
        runner.process(e)
    assert load_report(single) == [total]
    assert load_report(ParAbacus(12, 10, 4)) == [0, 0, 0, 0]


@pytest.mark.parametrize("kw", [dict(batch_size=0), dict(workers=0), dict(backend="threads")])
def test_bad_config(kw):
    args = dict(budget=5, batch_size=2, workers=1)
    args.update(kw)
    with pytest.raises(ConfigError):
        ParAbacus(**args)
