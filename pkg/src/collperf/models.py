"""Closed-form pLogP cost models for Broadcast, Scatter and All-to-All.

Every predictor returns a :class:`Prediction` whose ``terms`` are the
additive contributions of the formula; ``total`` is their sum.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .profile import NetworkProfile, make_segmentation

__all__ = [
    "BROADCAST_STRATEGIES",
    "SCATTER_STRATEGIES",
    "ALLTOALL_STRATEGIES",
    "SEGMENTED_STRATEGIES",
    "CATALOG",
    "CollectiveRequest",
    "Prediction",
    "TreeShape",
    "ceil_log2",
    "floor_log2",
    "predict",
    "predict_broadcast",
    "predict_scatter",
    "alltoall_bounds",
    "predict_alltoall",
    "validate_tree_shape",
]

BROADCAST_STRATEGIES = (
    "flat",
    "flat-rendezvous",
    "flat-segmented",
    "chain",
    "chain-rendezvous",
    "chain-segmented",
    "binary",
    "binomial",
    "binomial-rendezvous",
    "binomial-segmented",
)
SCATTER_STRATEGIES = ("flat", "chain", "binomial")
ALLTOALL_STRATEGIES = ("direct-exchange",)
SEGMENTED_STRATEGIES = frozenset({"flat-segmented", "chain-segmented", "binomial-segmented"})

CATALOG = {
    "broadcast": BROADCAST_STRATEGIES,
    "scatter": SCATTER_STRATEGIES,
    "alltoall": ALLTOALL_STRATEGIES,
}


def ceil_log2(n: int) -> int:
    return (n - 1).bit_length()


def floor_log2(n: int) -> int:
    return n.bit_length() - 1


@dataclass(frozen=True)
class CollectiveRequest:
    operation: str
    strategy: str
    procs: int
    message_bytes: int
    segment_bytes: int | None = None

    def __post_init__(self):
        if self.operation not in CATALOG:
            raise ValueError(f"unknown operation {self.operation!r}; expected one of {tuple(CATALOG)}")
        if self.strategy not in CATALOG[self.operation]:
            raise ValueError(
                f"unknown {self.operation} strategy {self.strategy!r}; "
                f"expected one of {CATALOG[self.operation]}"
            )
        if int(self.procs) != self.procs or self.procs < 1:
            raise ValueError(f"procs must be an integer >= 1, got {self.procs!r}")
        if int(self.message_bytes) != self.message_bytes or self.message_bytes < 1:
            raise ValueError(f"message_bytes must be an integer >= 1, got {self.message_bytes!r}")
        segmented = self.strategy in SEGMENTED_STRATEGIES
        if segmented and self.segment_bytes is None:
            raise ValueError(f"strategy {self.strategy!r} requires segment_bytes")
        if not segmented and self.segment_bytes is not None:
            raise ValueError(f"strategy {self.strategy!r} does not take segment_bytes")
        if segmented:
            make_segmentation(self.message_bytes, self.segment_bytes)

    @property
    def segmented(self) -> bool:
        return self.strategy in SEGMENTED_STRATEGIES


@dataclass(frozen=True)
class Prediction:
    """Predicted completion time in microseconds.

    ``bound`` is ``"upper"`` or ``"lower"`` when the value is a bound
    rather than an estimate (the binary tree and the All-to-All limits).
    """

    total: float
    terms: tuple[tuple[str, float], ...]
    request: CollectiveRequest
    bound: str | None = None

    @property
    def is_upper_bound(self) -> bool:
        return self.bound == "upper"

    def term(self, label: str) -> float:
        return sum(v for k, v in self.terms if k == label)


def _make(request: CollectiveRequest, terms, bound=None) -> Prediction:
    terms = tuple((label, float(value)) for label, value in terms)
    total = 0.0
    for _, value in terms:
        total += value
    return Prediction(total=total, terms=terms, request=request, bound=bound)


def _degenerate(request: CollectiveRequest, bound=None) -> Prediction:
    return _make(request, [("degenerate", 0.0)], bound)


@dataclass(frozen=True)
class TreeShape:
    arity: int
    height: int


def validate_tree_shape(shape: TreeShape, procs: int) -> bool:
    """True when a tree of arity ``d`` and height ``h`` can span ``procs`` nodes."""
    d, h = shape.arity, shape.height
    if not (1 <= d <= procs - 1 and 1 <= h <= procs - 1):
        return False
    covered = 0
    power = 1
    for _ in range(h + 1):
        covered += power
        if covered >= procs:
            return True
        power *= d
    return False


def predict_broadcast(
    profile: NetworkProfile,
    strategy: str,
    procs: int,
    message_bytes: int,
    segment_bytes: int | None = None,
) -> Prediction:
    req = CollectiveRequest("broadcast", strategy, procs, message_bytes, segment_bytes)
    bound = "upper" if strategy == "binary" else None
    if procs == 1:
        return _degenerate(req, bound)

    P, m, L = procs, message_bytes, profile.latency
    hops = P - 1

    if req.segmented:
        seg = make_segmentation(m, segment_bytes)
        gs, k = profile.g(seg.segment_bytes), seg.segment_count
    if strategy == "flat":
        terms = [("gap", hops * profile.g(m)), ("latency", L)]
    elif strategy == "flat-rendezvous":
        terms = [("gap", hops * profile.g(m)), ("rendezvous", 2 * profile.g(1)), ("latency", 3 * L)]
    elif strategy == "flat-segmented":
        terms = [("gap", hops * (gs * k)), ("latency", L)]
    elif strategy == "chain":
        terms = [("gap", hops * profile.g(m)), ("latency", hops * L)]
    elif strategy == "chain-rendezvous":
        terms = [
            ("gap", hops * profile.g(m)),
            ("rendezvous", hops * 2 * profile.g(1)),
            ("latency", hops * 3 * L),
        ]
    elif strategy == "chain-segmented":
        terms = [("gap", hops * gs), ("latency", hops * L), ("pipeline", gs * (k - 1))]
    elif strategy == "binary":
        rounds = ceil_log2(P)
        terms = [("gap (upper bound)", rounds * 2 * profile.g(m)), ("latency (upper bound)", rounds * L)]
    elif strategy == "binomial":
        terms = [("gap", floor_log2(P) * profile.g(m)), ("latency", ceil_log2(P) * L)]
    elif strategy == "binomial-rendezvous":
        rounds = ceil_log2(P)
        terms = [
            ("gap", floor_log2(P) * profile.g(m)),
            ("rendezvous", rounds * 2 * profile.g(1)),
            ("latency", rounds * 3 * L),
        ]
    elif strategy == "binomial-segmented":
        terms = [("gap", floor_log2(P) * gs * k), ("latency", ceil_log2(P) * L)]
    else:  # pragma: no cover - rejected by CollectiveRequest
        raise ValueError(strategy)
    return _make(req, terms, bound)


def predict_scatter(profile: NetworkProfile, strategy: str, procs: int, message_bytes: int) -> Prediction:
    """Scatter of ``message_bytes`` to each of ``procs - 1`` destinations."""
    req = CollectiveRequest("scatter", strategy, procs, message_bytes)
    if procs == 1:
        return _degenerate(req)
    P, m, L = procs, message_bytes, profile.latency
    if strategy == "flat":
        terms = [("gap", (P - 1) * profile.g(m)), ("latency", L)]
    elif strategy == "chain":
        gap = 0.0
        for j in range(1, P):
            gap += profile.g(j * m)
        terms = [("gap", gap), ("latency", (P - 1) * L)]
    else:
        rounds = ceil_log2(P)
        gap = 0.0
        for j in range(rounds):
            gap += profile.g((1 << j) * m)
        terms = [("gap", gap), ("latency", rounds * L)]
    return _make(req, terms)


def alltoall_bounds(profile: NetworkProfile, procs: int, message_bytes: int) -> tuple[Prediction, Prediction]:
    """Lower (send/receive overlap) and upper (serialized) All-to-All limits.

    No ordering between the two is implied: with a profile where
    ``os + or < g`` the "upper" limit is the smaller value.
    """
    req = CollectiveRequest("alltoall", "direct-exchange", procs, message_bytes)
    if procs == 1:
        return _degenerate(req, "lower"), _degenerate(req, "upper")
    P, m, L = procs, message_bytes, profile.latency
    lower = _make(req, [("gap", (P - 1) * profile.g(m)), ("latency", L)], "lower")
    upper = _make(
        req,
        [
            ("send-overhead", (P - 1) * profile.os(m)),
            ("recv-overhead", (P - 1) * profile.or_(m)),
            ("latency", L),
        ],
        "upper",
    )
    return lower, upper


def predict_alltoall(profile: NetworkProfile, procs: int, message_bytes: int, gamma: float) -> Prediction:
    """Blend the All-to-All limits with a congestion factor.

    ``T = lower + (upper - lower) * gamma``, evaluated as
    ``(1 - gamma) * lower + gamma * upper`` so both endpoints are exact.
    """
    gamma = float(gamma)
    if not math.isfinite(gamma):
        raise ValueError(f"gamma must be finite, got {gamma!r}")
    if gamma < 0:
        warnings.warn(f"negative congestion factor gamma={gamma}", RuntimeWarning, stacklevel=2)
    lower, upper = alltoall_bounds(profile, procs, message_bytes)
    if procs == 1:
        return _degenerate(lower.request)
    terms = [("lower-bound share", (1.0 - gamma) * lower.total), ("upper-bound share", gamma * upper.total)]
    return _make(lower.request, terms)


def predict(profile: NetworkProfile, request: CollectiveRequest, gamma: float | None = None) -> Prediction:
    """Dispatch a :class:`CollectiveRequest` to the matching model.

    All-to-All requests need ``gamma``; use :func:`alltoall_bounds` for the
    raw limits.
    """
    if request.operation == "broadcast":
        return predict_broadcast(
            profile, request.strategy, request.procs, request.message_bytes, request.segment_bytes
        )
    if request.operation == "scatter":
        return predict_scatter(profile, request.strategy, request.procs, request.message_bytes)
    if gamma is None:
        raise ValueError("alltoall prediction needs a congestion factor gamma")
    return predict_alltoall(profile, request.procs, request.message_bytes, gamma)
