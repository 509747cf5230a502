import csv
import math

import pytest

from collperf.models import alltoall_bounds, predict_broadcast, predict_scatter
from collperf.profile import NetworkProfile, PLogPSample
from collperf.simulator import Schedule, Transfer, build_schedule, run, simulate, write_trace
from conftest import random_profile


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_flat_schedule_shape():
    s = build_schedule("broadcast", "flat", 4, 1000)
    assert len(s) == 3
    assert [t.sender for t in s.transfers] == [0, 0, 0]
    assert [t.receiver for t in s.transfers] == [1, 2, 3]


def test_chain_segmented_schedule_shape():
    s = build_schedule("broadcast", "chain-segmented", 3, 1000, 250)
    assert len(s) == 8
    assert all(t.bytes == 250 for t in s.transfers)
    # segment j on the second hop waits for segment j on the first
    assert [s.transfers[i].depends_on for i in range(4, 8)] == [0, 1, 2, 3]


def test_partial_segment_sent_at_full_size():
    s = build_schedule("broadcast", "flat-segmented", 2, 1000, 300)
    assert [t.bytes for t in s.transfers] == [300] * 4


def test_binomial_rounds():
    s = build_schedule("broadcast", "binomial", 8, 1000)
    edges = [(t.sender, t.receiver) for t in s.transfers]
    assert edges == [(0, 1), (0, 2), (1, 3), (0, 4), (1, 5), (2, 6), (3, 7)]
    round_sizes = [1, 2, 4]
    assert sum(round_sizes) == len(s)


def test_binomial_scatter_bundles():
    s = build_schedule("scatter", "binomial", 8, 1000)
    sizes = {(t.sender, t.receiver): t.bytes for t in s.transfers}
    assert sizes[(0, 1)] == 4000
    assert sizes[(0, 2)] == 2000
    assert sizes[(0, 4)] == 1000
    assert sizes[(1, 3)] == 2000
    # every non-root rank receives exactly one bundle, and the root ships P-1 messages in total
    assert sum(t.bytes for t in s.transfers if t.sender == 0) == 7000


def test_scatter_chain_bundles():
    s = build_schedule("scatter", "chain", 4, 1000)
    assert [t.bytes for t in s.transfers] == [3000, 2000, 1000]


def test_direct_exchange_rotation():
    s = build_schedule("alltoall", "direct-exchange", 4, 10)
    first = {}
    for t in s.transfers:
        first.setdefault(t.sender, t.receiver)
    assert first == {0: 1, 1: 2, 2: 3, 3: 0}
    assert len(s) == 12
    pairs = {(t.sender, t.receiver) for t in s.transfers}
    assert len(pairs) == 12


@pytest.mark.parametrize(
    "op, strategy",
    [("broadcast", "binary"), ("broadcast", "flat-rendezvous"), ("broadcast", "chain-rendezvous"),
     ("broadcast", "binomial-rendezvous"), ("scatter", "flat-segmented"), ("broadcast", "nope")],
)
def test_unschedulable(op, strategy):
    with pytest.raises(ValueError):
        build_schedule(op, strategy, 4, 1000, None)


def test_schedule_validation():
    with pytest.raises(ValueError, match="outside"):
        Schedule(2, [Transfer(0, 2, 1)])
    with pytest.raises(ValueError, match="sender equals receiver"):
        Schedule(2, [Transfer(1, 1, 1)])
    with pytest.raises(ValueError, match="earlier"):
        Schedule(3, [Transfer(0, 1, 1, depends_on=0)])
    with pytest.raises(ValueError, match="not received by sender"):
        Schedule(3, [Transfer(0, 1, 1), Transfer(2, 1, 1, depends_on=0)])


def test_flat_hand_trace(fix1_profile):
    # sends start at 0, 20, 40; last arrival 40 + 20 + 50
    res = run(build_schedule("broadcast", "flat", 4, 1000), fix1_profile)
    assert [start for _, start, _ in res.trace] == [0.0, 20.0, 40.0]
    assert [end for _, _, end in res.trace] == [70.0, 90.0, 110.0]
    assert res.completion == 110.0
    assert res.per_rank_busy[0] == 60.0


def test_chain_segmented_hand_trace(fix1_profile):
    res = simulate(fix1_profile, "broadcast", "chain-segmented", 4, 1000, 250)
    assert res.completion == pytest.approx(225.0, rel=1e-12)
    # last hop: segment j reaches rank 3 at 3 * 62.5 + 12.5 j
    last_hop = [end for i, _, end in res.trace if i >= 8]
    assert last_hop == pytest.approx([187.5, 200.0, 212.5, 225.0])


def test_direct_exchange_serialized_two_ranks(fix1_profile):
    # os(1000) + L + or(1000) = 14 + 50 + 13
    res = simulate(fix1_profile, "alltoall", "direct-exchange", 2, 1000, semantics="serialized")
    assert res.completion == 77.0


def test_single_rank_is_empty(fix1_profile):
    assert simulate(fix1_profile, "broadcast", "binomial", 1, 1000).completion == 0.0
    assert simulate(fix1_profile, "alltoall", "direct-exchange", 1, 10, semantics="serialized").completion == 0.0


def test_oracle_equality_random(rng):
    for _ in range(15):
        p = random_profile(rng)
        for P in (2, 3, 6, 8, 13, 16):
            m = int(rng.integers(1, 1 << 18))
            s = int(rng.integers(1, m + 1))
            if -(-m // s) > 64:
                s = -(-m // 64)
            for strategy, seg in (("flat", None), ("chain", None), ("flat-segmented", s), ("chain-segmented", s)):
                sim = simulate(p, "broadcast", strategy, P, m, seg).completion
                assert rel(sim, predict_broadcast(p, strategy, P, m, seg).total) <= 1e-9
            for strategy in ("flat", "chain"):
                sim = simulate(p, "scatter", strategy, P, m).completion
                assert rel(sim, predict_scatter(p, strategy, P, m).total) <= 1e-9
            if P & (P - 1) == 0:
                for strategy, seg in (("binomial", None), ("binomial-segmented", s)):
                    sim = simulate(p, "broadcast", strategy, P, m, seg).completion
                    assert rel(sim, predict_broadcast(p, strategy, P, m, seg).total) <= 1e-9
                sim = simulate(p, "scatter", "binomial", P, m).completion
                assert rel(sim, predict_scatter(p, "binomial", P, m).total) <= 1e-9


def test_oracle_equality_full_process_range(fix1_profile):
    p = fix1_profile
    for P in range(2, 65):
        for m in (1 << i for i in range(0, 21, 2)):
            s = -(-m // 8)
            for strategy, seg in (("flat", None), ("chain", None), ("flat-segmented", s), ("chain-segmented", s)):
                sim = simulate(p, "broadcast", strategy, P, m, seg).completion
                assert rel(sim, predict_broadcast(p, strategy, P, m, seg).total) <= 1e-9, (strategy, P, m)
            for strategy in ("flat", "chain"):
                sim = simulate(p, "scatter", strategy, P, m).completion
                assert rel(sim, predict_scatter(p, strategy, P, m).total) <= 1e-9, (strategy, P, m)
            if P & (P - 1) == 0:
                for strategy, seg in (("binomial", None), ("binomial-segmented", s)):
                    sim = simulate(p, "broadcast", strategy, P, m, seg).completion
                    assert rel(sim, predict_broadcast(p, strategy, P, m, seg).total) <= 1e-9, (strategy, P, m)
                sim = simulate(p, "scatter", "binomial", P, m).completion
                assert rel(sim, predict_scatter(p, "binomial", P, m).total) <= 1e-9


def test_binomial_non_power_of_two_diverges(fix1_profile):
    # event schedule at P=5: max(3g + L, 2g + 2L) = 140, formula gives 2g + 3L = 190
    sim = simulate(fix1_profile, "broadcast", "binomial", 5, 1000).completion
    assert sim == 140.0
    assert predict_broadcast(fix1_profile, "binomial", 5, 1000).total == 190.0


def test_alltoall_bounds_realized(rng):
    for _ in range(10):
        p = random_profile(rng)
        m = int(rng.integers(1, 1 << 20))
        for P in range(2, 20):
            lo, hi = alltoall_bounds(p, P, m)
            assert rel(simulate(p, "alltoall", "direct-exchange", P, m).completion, lo.total) <= 1e-9
            ser = simulate(p, "alltoall", "direct-exchange", P, m, semantics="serialized").completion
            assert rel(ser, hi.total) <= 1e-9


def test_serialized_chain_charges_both_overheads(fix1_profile):
    # each hop: os + L + or, store-and-forward
    res = simulate(fix1_profile, "broadcast", "chain", 3, 1000, semantics="serialized")
    assert res.completion == pytest.approx(2 * (14 + 50 + 13))


def test_determinism(rng):
    p = random_profile(rng)
    for semantics in ("one-port-overlap", "serialized"):
        a = simulate(p, "broadcast", "chain-segmented", 9, 100_000, 7_000, semantics)
        b = simulate(p, "broadcast", "chain-segmented", 9, 100_000, 7_000, semantics)
        assert a == b


def _inflate(p: NetworkProfile, rng) -> NetworkProfile:
    samples = [
        PLogPSample(s.bytes, s.g * (1 + rng.uniform(0, 0.5)), s.os * (1 + rng.uniform(0, 0.5)), s.or_ * (1 + rng.uniform(0, 0.5)))
        for s in p.samples
    ]
    return NetworkProfile.from_samples(p.name, p.latency * (1 + rng.uniform(0, 0.5)), samples)


def test_completion_monotone_under_inflation(rng):
    cases = [
        ("broadcast", "flat", None), ("broadcast", "chain-segmented", 3000), ("broadcast", "binomial", None),
        ("broadcast", "binomial-segmented", 5000), ("scatter", "binomial", None), ("scatter", "chain", None),
        ("alltoall", "direct-exchange", None),
    ]
    for _ in range(20):
        p = random_profile(rng)
        q = _inflate(p, rng)
        P = int(rng.integers(2, 20))
        for op, strategy, s in cases:
            for semantics in ("one-port-overlap", "serialized"):
                a = simulate(p, op, strategy, P, 20_000, s, semantics).completion
                b = simulate(q, op, strategy, P, 20_000, s, semantics).completion
                assert b >= a


def test_trace_csv(tmp_path, fix1_profile):
    sched = build_schedule("broadcast", "chain-segmented", 4, 1000, 250)
    res = run(sched, fix1_profile)
    path = tmp_path / "trace.csv"
    write_trace(res, sched, path)
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == len(sched) == 12
    assert list(rows[0]) == ["transfer", "sender", "receiver", "bytes", "send_start_us", "recv_end_us"]
    assert max(float(r["recv_end_us"]) for r in rows) == res.completion


def test_completion_is_max_trace(rng):
    p = random_profile(rng)
    res = simulate(p, "scatter", "binomial", 11, 5000)
    assert res.completion == max(end for _, _, end in res.trace)
    assert math.isfinite(res.completion)
