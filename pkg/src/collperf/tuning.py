"""Segment-size search, strategy selection and congestion-factor fitting."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .models import (
    CATALOG,
    SEGMENTED_STRATEGIES,
    Prediction,
    alltoall_bounds,
    floor_log2,
    predict_broadcast,
    predict_scatter,
)
from .profile import NetworkProfile

__all__ = [
    "Measurement",
    "MeasurementSet",
    "GammaModel",
    "SegmentChoice",
    "dyadic_candidates",
    "optimize_segment",
    "rank_strategies",
    "select_strategy",
    "fit_gamma",
    "load_measurements",
    "save_measurements",
    "MEASUREMENT_HEADER",
]

MEASUREMENT_HEADER = ("procs", "bytes", "time_us")


@dataclass(frozen=True)
class Measurement:
    procs: int
    message_bytes: int
    time: float


@dataclass(frozen=True)
class MeasurementSet:
    records: tuple[Measurement, ...]
    network_label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for i, r in enumerate(self.records):
            if not (math.isfinite(r.time) and r.time > 0):
                raise ValueError(f"record {i}: time must be positive, got {r.time!r}")
            if r.procs < 1 or r.message_bytes < 1:
                raise ValueError(f"record {i}: procs and bytes must be >= 1")

    def __len__(self):
        return len(self.records)


@dataclass(frozen=True)
class GammaModel:
    gamma: float
    residual: float
    n_points: int
    profile_name: str

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "residual": self.residual,
            "n_points": self.n_points,
            "profile_name": self.profile_name,
        }


@dataclass(frozen=True)
class SegmentChoice:
    segment_bytes: int
    predicted: Prediction
    candidates_examined: int


def _predict(profile, operation, strategy, procs, message_bytes, segment_bytes=None) -> Prediction:
    if operation == "broadcast":
        return predict_broadcast(profile, strategy, procs, message_bytes, segment_bytes)
    if operation == "scatter":
        return predict_scatter(profile, strategy, procs, message_bytes)
    raise ValueError(f"operation {operation!r} has no strategy models to compare")


def dyadic_candidates(message_bytes: int) -> list[int]:
    """``ceil(m / 2**i)`` for ``i = 0 .. floor(log2 m)``, largest first, without repeats."""
    out = []
    for i in range(floor_log2(message_bytes) + 1):
        s = -(-message_bytes // (1 << i))
        if not out or out[-1] != s:
            out.append(s)
    return out


def _neighbours(s: int, message_bytes: int) -> list[int]:
    out = []
    for factor in (7 / 8, 9 / 8):
        t = math.floor(s * factor + 0.5)
        if t == s:
            t = s - 1 if factor < 1 else s + 1
        if 1 <= t <= message_bytes:
            out.append(t)
    return out


def optimize_segment(
    profile: NetworkProfile,
    operation: str,
    strategy: str,
    procs: int,
    message_bytes: int,
    refine: bool = False,
) -> SegmentChoice:
    """Pick the segment size minimising the closed-form time of a segmented strategy.

    The dyadic grid is scanned first; ties keep the larger segment.  With
    ``refine`` a hill climb continues from the dyadic winner, trying
    ``s * 7/8`` then ``s * 9/8`` (rounded to whole bytes, at least one byte
    away from ``s``) and moving on the first strict improvement.
    """
    if strategy not in SEGMENTED_STRATEGIES:
        raise ValueError(f"strategy {strategy!r} is not segmented")
    if operation != "broadcast":
        raise ValueError(f"no segmented {operation} strategies")
    if message_bytes < 1:
        raise ValueError("message_bytes must be >= 1")

    cache: dict[int, Prediction] = {}

    def cost(s):
        if s not in cache:
            cache[s] = _predict(profile, operation, strategy, procs, message_bytes, s)
        return cache[s].total

    # min() keeps the first of equal candidates, i.e. the larger segment
    best = min(dyadic_candidates(message_bytes), key=cost)

    if refine:
        improved = True
        while improved:
            improved = False
            for t in _neighbours(best, message_bytes):
                if cost(t) < cost(best):
                    best = t
                    improved = True
                    break
    return SegmentChoice(best, cache[best], len(cache))


def rank_strategies(
    profile: NetworkProfile,
    operation: str,
    procs: int,
    message_bytes: int,
    auto_segment: bool = True,
    refine: bool = False,
) -> list[tuple[str, Prediction]]:
    """Every applicable strategy with its prediction, fastest first.

    The sort is stable, so equal times keep catalog order.
    """
    if operation not in ("broadcast", "scatter"):
        raise ValueError(f"strategy selection supports broadcast and scatter, not {operation!r}")
    rows = []
    for strategy in CATALOG[operation]:
        if strategy in SEGMENTED_STRATEGIES:
            if not auto_segment:
                continue
            choice = optimize_segment(profile, operation, strategy, procs, message_bytes, refine)
            rows.append((strategy, choice.predicted))
        else:
            rows.append((strategy, _predict(profile, operation, strategy, procs, message_bytes)))
    rows.sort(key=lambda row: row[1].total)
    return rows


def select_strategy(
    profile: NetworkProfile,
    operation: str,
    procs: int,
    message_bytes: int,
    auto_segment: bool = True,
    refine: bool = False,
) -> tuple[str, Prediction]:
    return rank_strategies(profile, operation, procs, message_bytes, auto_segment, refine)[0]


def fit_gamma(profile: NetworkProfile, measurements: MeasurementSet | Iterable[Measurement]) -> GammaModel:
    """Least-squares congestion factor placing measured times between the All-to-All limits.

    Solves ``min_gamma sum (T - (lo + (hi - lo) * gamma))**2`` in closed form.
    """
    records = measurements.records if isinstance(measurements, MeasurementSet) else tuple(measurements)
    if not records:
        raise ValueError("need at least one measurement to fit gamma")
    lo = np.empty(len(records))
    hi = np.empty(len(records))
    t = np.array([r.time for r in records], dtype=float)
    for i, r in enumerate(records):
        lower, upper = alltoall_bounds(profile, r.procs, r.message_bytes)
        lo[i], hi[i] = lower.total, upper.total
    spread = hi - lo
    denom = float(np.dot(spread, spread))
    if denom == 0.0:
        raise ValueError("gamma is undefined: lower and upper limits coincide for every record")
    gamma = float(np.dot(spread, t - lo)) / denom
    resid = t - (lo + spread * gamma)
    rms = float(np.sqrt(np.mean(resid**2)))
    return GammaModel(gamma=gamma, residual=rms, n_points=len(records), profile_name=profile.name)


# --- measurement CSV ---------------------------------------------------------


def load_measurements(path: str | os.PathLike, network_label: str | None = None) -> MeasurementSet:
    """Read ``procs,bytes,time_us`` records; the label defaults to the file stem."""
    path = Path(path)
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty measurement file")
        if tuple(h.strip() for h in header) != MEASUREMENT_HEADER:
            raise ValueError(f"{path}: line 1: expected header {','.join(MEASUREMENT_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ValueError(f"{path}: line {lineno}: expected 3 fields, got {len(row)}")
            try:
                procs, nbytes, time = int(row[0]), int(row[1]), float(row[2])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: malformed record {row!r}") from None
            if procs < 1 or nbytes < 1 or not (math.isfinite(time) and time > 0):
                raise ValueError(f"{path}: line {lineno}: values must be positive")
            records.append(Measurement(procs, nbytes, time))
    if not records:
        raise ValueError(f"{path}: no measurement records")
    label = path.stem if network_label is None else network_label
    return MeasurementSet(tuple(records), label)


def save_measurements(measurements: MeasurementSet, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MEASUREMENT_HEADER)
        for r in measurements.records:
            writer.writerow([r.procs, r.message_bytes, repr(r.time)])
