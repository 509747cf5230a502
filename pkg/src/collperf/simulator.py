"""Event-driven pLogP execution of explicit communication schedules.

The simulator knows nothing about the closed-form models; it only
replays a list of point-to-point transfers under pLogP timing rules.
That independence is what makes it useful as an oracle for
:mod:`collperf.models`.

Timing rules shared by both semantics:

* each rank issues its sends in schedule order;
* a send may start once the transfer it depends on has been received
  at the sender.

``"one-port-overlap"``
    Sending and receiving use independent ports.  Consecutive sends from
    a rank are spaced by ``g`` of the earlier send, and a transfer that
    starts at ``t`` is received at ``t + g(bytes) + L``.  Receive overhead
    is not charged.

``"serialized"``
    A rank has one resource shared by sends and receives.  A send costs
    ``os(bytes)`` and reaches the receiver ``L`` later.  A receive that a
    later send depends on is processed (``or(bytes)``) as soon as it has
    arrived and the resource is free.  The remaining receives are drained
    once the rank has issued all its sends and every one of those
    messages has arrived, as in a post-all-then-wait-all exchange.
"""

from __future__ import annotations

import csv
import heapq
import os
from collections import deque
from dataclasses import dataclass, field

from .models import CATALOG, SEGMENTED_STRATEGIES
from .profile import NetworkProfile, make_segmentation, param_at

__all__ = [
    "SCHEDULABLE",
    "SEMANTICS",
    "Transfer",
    "Schedule",
    "SimResult",
    "build_schedule",
    "run",
    "simulate",
    "write_trace",
]

SCHEDULABLE = {
    "broadcast": ("flat", "flat-segmented", "chain", "chain-segmented", "binomial", "binomial-segmented"),
    "scatter": ("flat", "chain", "binomial"),
    "alltoall": ("direct-exchange",),
}
SEMANTICS = ("one-port-overlap", "serialized")


@dataclass(frozen=True)
class Transfer:
    sender: int
    receiver: int
    bytes: int
    depends_on: int | None = None


@dataclass(frozen=True)
class Schedule:
    procs: int
    transfers: tuple[Transfer, ...]

    def __post_init__(self):
        object.__setattr__(self, "transfers", tuple(self.transfers))
        self.validate()

    def validate(self) -> None:
        if self.procs < 1:
            raise ValueError("schedule needs at least one rank")
        for i, t in enumerate(self.transfers):
            for rank in (t.sender, t.receiver):
                if not 0 <= rank < self.procs:
                    raise ValueError(f"transfer {i}: rank {rank} outside [0, {self.procs})")
            if t.sender == t.receiver:
                raise ValueError(f"transfer {i}: sender equals receiver ({t.sender})")
            if t.bytes < 1:
                raise ValueError(f"transfer {i}: bytes must be >= 1")
            if t.depends_on is not None:
                # Dependencies point backwards, so the relation is acyclic.
                if not 0 <= t.depends_on < i:
                    raise ValueError(f"transfer {i}: depends_on must reference an earlier transfer")
                if self.transfers[t.depends_on].receiver != t.sender:
                    raise ValueError(
                        f"transfer {i}: depends on transfer {t.depends_on}, "
                        f"which is not received by sender {t.sender}"
                    )

    def __len__(self) -> int:
        return len(self.transfers)


@dataclass(frozen=True)
class SimResult:
    completion: float
    per_rank_busy: dict[int, float]
    trace: tuple[tuple[int, float, float], ...] = field(default=())


# --- schedule construction ----------------------------------------------------


def _binomial_parents(procs: int) -> list[tuple[int, int, int]]:
    """(round, parent, child) edges of a lowest-rank-first recursive doubling tree."""
    edges = []
    r = 0
    while (1 << r) < procs:
        step = 1 << r
        for parent in range(step):
            child = parent + step
            if child < procs:
                edges.append((r, parent, child))
        r += 1
    return edges


def _subtree_size(rank: int, round_: int, procs: int) -> int:
    """Ranks congruent to ``rank`` modulo ``2**(round_+1)``: the subtree rooted at ``rank``."""
    stride = 1 << (round_ + 1)
    return len(range(rank, procs, stride))


def build_schedule(
    operation: str,
    strategy: str,
    procs: int,
    message_bytes: int,
    segment_bytes: int | None = None,
) -> Schedule:
    """Expand a collective into explicit point-to-point transfers.

    Segmented strategies send every segment as ``segment_bytes`` bytes,
    including a partial last one, to match the cost models.  The
    segmented chain forwards each segment as soon as it arrives; the
    segmented binomial tree forwards only after the whole message.
    """
    if operation not in SCHEDULABLE:
        raise ValueError(f"unknown operation {operation!r}")
    if strategy not in SCHEDULABLE[operation]:
        known = strategy in CATALOG.get(operation, ())
        reason = "has no event-level schedule" if known else "is unknown"
        raise ValueError(f"{operation} strategy {strategy!r} {reason}; schedulable: {SCHEDULABLE[operation]}")
    if procs < 1 or message_bytes < 1:
        raise ValueError("procs and message_bytes must be >= 1")
    if strategy in SEGMENTED_STRATEGIES:
        if segment_bytes is None:
            raise ValueError(f"strategy {strategy!r} requires segment_bytes")
        k = make_segmentation(message_bytes, segment_bytes).segment_count
        size = segment_bytes
    elif segment_bytes is not None:
        raise ValueError(f"strategy {strategy!r} does not take segment_bytes")
    else:
        k, size = 1, message_bytes

    P, m = procs, message_bytes
    out: list[Transfer] = []

    if operation == "alltoall":
        for step in range(1, P):
            for rank in range(P):
                out.append(Transfer(rank, (rank + step) % P, m))
        return Schedule(P, out)

    if strategy in ("flat", "flat-segmented"):
        for dst in range(1, P):
            out.extend(Transfer(0, dst, size) for _ in range(k))
    elif strategy in ("chain", "chain-segmented") and operation == "broadcast":
        prev: list[int | None] = [None] * k
        for src in range(P - 1):
            for j in range(k):
                out.append(Transfer(src, src + 1, size, prev[j]))
                prev[j] = len(out) - 1
    elif strategy == "chain":
        # scatter: each hop carries the data of every rank further down
        dep = None
        for src in range(P - 1):
            out.append(Transfer(src, src + 1, (P - 1 - src) * m, dep))
            dep = len(out) - 1
    else:
        # binomial tree; `received` holds the transfer that completes a rank's data
        received: dict[int, int] = {}
        for r, parent, child in _binomial_parents(P):
            dep = received.get(parent)
            if operation == "scatter":
                out.append(Transfer(parent, child, _subtree_size(child, r, P) * m, dep))
            else:
                out.extend(Transfer(parent, child, size, dep) for _ in range(k))
            received[child] = len(out) - 1
    return Schedule(P, out)


# --- execution --------------------------------------------------------------


def run(
    schedule: Schedule,
    profile: NetworkProfile,
    semantics: str = "one-port-overlap",
    record_trace: bool = True,
) -> SimResult:
    if semantics not in SEMANTICS:
        raise ValueError(f"unknown semantics {semantics!r}; expected one of {SEMANTICS}")
    if semantics == "one-port-overlap":
        return _run_overlap(schedule, profile, record_trace)
    return _run_serialized(schedule, profile, record_trace)


class _Params:
    """Per-run memo of profile lookups; schedules reuse a handful of sizes."""

    def __init__(self, profile: NetworkProfile):
        self.profile = profile
        self._memo: dict[tuple[str, int], float] = {}

    def __call__(self, which: str, nbytes: int) -> float:
        key = (which, nbytes)
        value = self._memo.get(key)
        if value is None:
            value = self._memo[key] = param_at(self.profile, which, nbytes)
        return value


def _sends_by_rank(schedule: Schedule) -> list[deque]:
    queues = [deque() for _ in range(schedule.procs)]
    for i, t in enumerate(schedule.transfers):
        queues[t.sender].append(i)
    return queues


def _finish(schedule, send_start, recv_end, busy, record_trace) -> SimResult:
    n = len(schedule.transfers)
    if any(v is None for v in recv_end):
        raise RuntimeError("simulation stalled: some transfers never completed")
    completion = max(recv_end, default=0.0)
    trace = tuple((i, send_start[i], recv_end[i]) for i in range(n)) if record_trace else ()
    return SimResult(completion=completion, per_rank_busy=dict(enumerate(busy)), trace=trace)


def _run_overlap(schedule: Schedule, profile: NetworkProfile, record_trace: bool) -> SimResult:
    transfers = schedule.transfers
    n = len(transfers)
    L = profile.latency
    param = _Params(profile)
    pending = _sends_by_rank(schedule)
    port_free = [0.0] * schedule.procs
    busy = [0.0] * schedule.procs
    send_start: list[float | None] = [None] * n
    recv_end: list[float | None] = [None] * n
    # (time, seq, rank, transfer): transfer < 0 marks a port-free event for rank
    heap: list[tuple[float, int, int, int]] = []
    push, pop = heapq.heappush, heapq.heappop
    seq = 0

    def try_send(rank, now):
        nonlocal seq
        queue = pending[rank]
        if not queue or port_free[rank] > now:
            return
        i = queue[0]
        dep = transfers[i].depends_on
        if dep is not None and (recv_end[dep] is None or recv_end[dep] > now):
            return
        queue.popleft()
        g = param("g", transfers[i].bytes)
        send_start[i] = now
        port_free[rank] = now + g
        busy[rank] += g
        push(heap, (now + g, seq, rank, -1))
        push(heap, (now + g + L, seq + 1, transfers[i].receiver, i))
        seq += 2

    for rank in range(schedule.procs):
        try_send(rank, 0.0)
    while heap:
        now, _, rank, i = pop(heap)
        if i >= 0:
            recv_end[i] = now
        try_send(rank, now)
    return _finish(schedule, send_start, recv_end, busy, record_trace)


def _run_serialized(schedule: Schedule, profile: NetworkProfile, record_trace: bool) -> SimResult:
    transfers = schedule.transfers
    n = len(transfers)
    P = schedule.procs
    L = profile.latency
    param = _Params(profile)
    pending = _sends_by_rank(schedule)
    needed = {t.depends_on for t in transfers if t.depends_on is not None}
    # receives each rank drains at the end, in schedule order
    terminal: list[list[int]] = [[] for _ in range(P)]
    for i, t in enumerate(transfers):
        if i not in needed:
            terminal[t.receiver].append(i)
    outstanding = [len(t) for t in terminal]
    free = [0.0] * P
    busy = [0.0] * P
    arrived: list[float | None] = [None] * n
    send_start: list[float | None] = [None] * n
    recv_end: list[float | None] = [None] * n
    drained = [False] * P
    # (time, seq, rank, transfer): transfer < 0 marks the rank's resource freeing up
    heap: list[tuple[float, int, int, int]] = []
    push, pop = heapq.heappush, heapq.heappop
    seq = 0

    def occupy(rank, now, cost):
        nonlocal seq
        free[rank] = now + cost
        push(heap, (now + cost, seq, rank, -1))
        seq += 1

    def step(rank, now):
        # One action per call; the rank is polled again when its resource frees up.
        nonlocal seq
        if free[rank] > now:
            return
        queue = pending[rank]
        if queue:
            i = queue[0]
            dep = transfers[i].depends_on
            if dep is not None and recv_end[dep] is None:
                if arrived[dep] is not None:
                    cost = param("or", transfers[dep].bytes)
                    recv_end[dep] = now + cost
                    occupy(rank, now, cost)
                return
            if dep is not None and recv_end[dep] > now:
                return
            queue.popleft()
            cost = param("os", transfers[i].bytes)
            send_start[i] = now
            busy[rank] += cost
            occupy(rank, now, cost)
            push(heap, (now + cost + L, seq, transfers[i].receiver, i))
            seq += 1
            return
        if drained[rank] or outstanding[rank]:
            return
        drained[rank] = True
        t = now
        for i in terminal[rank]:
            t += param("or", transfers[i].bytes)
            recv_end[i] = t
        free[rank] = t

    for rank in range(P):
        step(rank, 0.0)
    while heap:
        now, _, rank, i = pop(heap)
        if i >= 0:
            arrived[i] = now
            if i not in needed:
                outstanding[rank] -= 1
        step(rank, now)
    return _finish(schedule, send_start, recv_end, busy, record_trace)


def write_trace(result: SimResult, schedule: Schedule, path: str | os.PathLike) -> None:
    """Write the per-transfer trace as CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["transfer", "sender", "receiver", "bytes", "send_start_us", "recv_end_us"])
        for i, start, end in result.trace:
            t = schedule.transfers[i]
            writer.writerow([i, t.sender, t.receiver, t.bytes, repr(start), repr(end)])


def simulate(
    profile: NetworkProfile,
    operation: str,
    strategy: str,
    procs: int,
    message_bytes: int,
    segment_bytes: int | None = None,
    semantics: str = "one-port-overlap",
) -> SimResult:
    """Build the schedule for a collective and run it."""
    sched = build_schedule(operation, strategy, procs, message_bytes, segment_bytes)
    return run(sched, profile, semantics)

