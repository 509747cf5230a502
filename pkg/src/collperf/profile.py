"""pLogP network parameters and their on-disk formats.

A profile holds the gap ``g(m)``, send overhead ``os(m)`` and receive
overhead ``or(m)`` sampled at discrete message sizes, plus the network
latency ``L``.  All times are microseconds and all sizes are bytes.

Two file formats are supported:

* JSON::

    {"name": "fast-ethernet", "latency_us": 50.0,
     "samples": [{"bytes": 1, "g_us": 10.01, "os_us": 8.006, "or_us": 7.006}, ...]}

* columns: ``#`` lines are comments, except the mandatory ``# L <latency>``
  header and the optional ``# name <label>`` header.  Data rows are
  ``bytes g_us os_us or_us`` separated by whitespace.
"""

from __future__ import annotations

import bisect
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "PLogPSample",
    "NetworkProfile",
    "Segmentation",
    "ProfileError",
    "load_profile",
    "save_profile",
    "param_at",
    "make_segmentation",
]

PARAMS = ("g", "os", "or")


class ProfileError(ValueError):
    """Raised when a profile file cannot be parsed or fails validation."""


@dataclass(frozen=True)
class PLogPSample:
    bytes: int
    g: float
    os: float
    or_: float

    def value(self, which: str) -> float:
        if which == "g":
            return self.g
        if which == "os":
            return self.os
        if which == "or":
            return self.or_
        raise ValueError(f"unknown pLogP parameter {which!r}; expected one of {PARAMS}")


@dataclass(frozen=True)
class NetworkProfile:
    """pLogP parameters of one homogeneous network.

    Construct with :meth:`from_samples` to get validation and sorting;
    the constructor itself validates but does not reorder.
    """

    name: str
    latency: float
    samples: tuple[PLogPSample, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        _validate(self)
        object.__setattr__(self, "_sizes", [s.bytes for s in self.samples])

    @classmethod
    def from_samples(cls, name: str, latency: float, samples: Iterable[PLogPSample]) -> NetworkProfile:
        ordered = sorted(samples, key=lambda s: s.bytes)
        return cls(name=name, latency=float(latency), samples=tuple(ordered))

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(s.bytes for s in self.samples)

    def g(self, nbytes: float) -> float:
        return param_at(self, "g", nbytes)

    def os(self, nbytes: float) -> float:
        return param_at(self, "os", nbytes)

    def or_(self, nbytes: float) -> float:
        return param_at(self, "or", nbytes)

    def scaled(self, factor: float) -> NetworkProfile:
        """Return a copy with every time parameter multiplied by ``factor``."""
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        return NetworkProfile(
            name=self.name,
            latency=self.latency * factor,
            samples=tuple(
                PLogPSample(s.bytes, s.g * factor, s.os * factor, s.or_ * factor) for s in self.samples
            ),
        )


def _validate(profile: NetworkProfile) -> None:
    if not (math.isfinite(profile.latency) and profile.latency > 0):
        raise ProfileError(f"latency must be positive, got {profile.latency!r}")
    if not profile.samples:
        raise ProfileError("profile has no samples")
    seen = set()
    prev = 0
    for i, s in enumerate(profile.samples):
        if s.bytes in seen:
            raise ProfileError(f"sample {i}: duplicate size bytes={s.bytes}")
        seen.add(s.bytes)
        if int(s.bytes) != s.bytes or s.bytes < 1:
            raise ProfileError(f"sample {i}: bytes must be a positive integer, got {s.bytes!r}")
        if s.bytes <= prev:
            raise ProfileError(f"sample {i}: sizes must be strictly increasing (bytes={s.bytes})")
        prev = s.bytes
        for field, v in (("g", s.g), ("os", s.os), ("or", s.or_)):
            if not (math.isfinite(v) and v > 0):
                raise ProfileError(f"sample {i} (bytes={s.bytes}): {field} must be positive, got {v!r}")
    if profile.samples[0].bytes != 1:
        raise ProfileError("profile must contain a 1-byte sample (needed for g(1))")


def param_at(profile: NetworkProfile, which: str, nbytes: float) -> float:
    """Evaluate ``g``, ``os`` or ``or`` at an arbitrary message size.

    Exact at sample sizes, piecewise-linear between them, and linearly
    extrapolated past the largest sample with the slope of the last segment.
    """
    if which not in PARAMS:
        raise ValueError(f"unknown pLogP parameter {which!r}; expected one of {PARAMS}")
    if not nbytes >= 1:
        raise ValueError(f"message size must be >= 1 byte, got {nbytes!r}")
    samples = profile.samples
    sizes = profile._sizes
    i = bisect.bisect_left(sizes, nbytes)
    if i < len(sizes) and sizes[i] == nbytes:
        return samples[i].value(which)
    if len(samples) == 1:
        return samples[0].value(which)
    if i >= len(sizes):
        lo, hi = samples[-2], samples[-1]
    else:
        lo, hi = samples[i - 1], samples[i]
    v0, v1 = lo.value(which), hi.value(which)
    value = v0 + (v1 - v0) * (nbytes - lo.bytes) / (hi.bytes - lo.bytes)
    if not value > 0:
        raise ValueError(
            f"{which}({nbytes}) extrapolates to a non-positive value ({value!r}); "
            "add a larger sample to the profile"
        )
    return value


@dataclass(frozen=True)
class Segmentation:
    segment_bytes: int
    segment_count: int


def make_segmentation(message_bytes: int, segment_bytes: int) -> Segmentation:
    """Split ``message_bytes`` into ``k = ceil(m / s)`` segments of ``s`` bytes."""
    if message_bytes < 1 or segment_bytes < 1:
        raise ValueError("message and segment sizes must be >= 1 byte")
    if segment_bytes > message_bytes:
        raise ValueError(
            f"segment size {segment_bytes} exceeds message size {message_bytes}"
        )
    return Segmentation(segment_bytes, -(-message_bytes // segment_bytes))


# --- file formats ------------------------------------------------------------


def _positive_int(value, where: str) -> int:
    if isinstance(value, bool):
        raise ProfileError(f"{where}: expected an integer, got {value!r}")
    try:
        as_float = float(value)
    except (TypeError, ValueError):
        raise ProfileError(f"{where}: expected an integer, got {value!r}") from None
    if not as_float.is_integer():
        raise ProfileError(f"{where}: expected an integer, got {value!r}")
    n = int(as_float)
    if n < 1:
        raise ProfileError(f"{where}: size must be >= 1, got {n}")
    return n


def _positive_float(value, where: str) -> float:
    if isinstance(value, bool):
        raise ProfileError(f"{where}: expected a number, got {value!r}")
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ProfileError(f"{where}: expected a number, got {value!r}") from None
    if not (math.isfinite(x) and x > 0):
        raise ProfileError(f"{where}: value must be positive, got {value!r}")
    return x


def _build(name: str, latency: float, samples: Sequence[PLogPSample], where: Sequence[str]) -> NetworkProfile:
    seen: dict[int, str] = {}
    for s, loc in zip(samples, where):
        if s.bytes in seen:
            raise ProfileError(f"{loc}: duplicate size bytes={s.bytes} (first seen at {seen[s.bytes]})")
        seen[s.bytes] = loc
    if 1 not in seen:
        raise ProfileError("missing 1-byte sample (needed for g(1))")
    return NetworkProfile.from_samples(name, latency, samples)


def _parse_json(text: str, default_name: str) -> NetworkProfile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ProfileError("top level: expected a JSON object")
    if "latency_us" not in doc:
        raise ProfileError("latency_us: missing latency")
    latency = _positive_float(doc["latency_us"], "latency_us")
    name = doc.get("name", default_name)
    if not isinstance(name, str):
        raise ProfileError(f"name: expected a string, got {name!r}")
    raw = doc.get("samples")
    if not isinstance(raw, list):
        raise ProfileError("samples: expected a list of sample objects")
    samples, where = [], []
    for i, rec in enumerate(raw):
        loc = f"samples[{i}]"
        if not isinstance(rec, dict):
            raise ProfileError(f"{loc}: expected an object")
        for key in ("bytes", "g_us", "os_us", "or_us"):
            if key not in rec:
                raise ProfileError(f"{loc}.{key}: missing field")
        samples.append(
            PLogPSample(
                _positive_int(rec["bytes"], f"{loc}.bytes"),
                _positive_float(rec["g_us"], f"{loc}.g_us"),
                _positive_float(rec["os_us"], f"{loc}.os_us"),
                _positive_float(rec["or_us"], f"{loc}.or_us"),
            )
        )
        where.append(loc)
    return _build(name, latency, samples, where)


def _parse_columns(text: str, default_name: str) -> NetworkProfile:
    latency = None
    name = default_name
    samples, where = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            parts = stripped[1:].split(None, 1)
            if parts and parts[0] == "L":
                if len(parts) < 2:
                    raise ProfileError(f"line {lineno}: '# L' header has no value")
                latency = _positive_float(parts[1].strip(), f"line {lineno}, latency")
            elif parts and parts[0] == "name" and len(parts) == 2:
                name = parts[1].strip()
            continue
        fields = stripped.split()
        if len(fields) != 4:
            raise ProfileError(
                f"line {lineno}: expected 4 columns 'bytes g_us os_us or_us', got {len(fields)}"
            )
        loc = f"line {lineno}"
        samples.append(
            PLogPSample(
                _positive_int(fields[0], f"{loc}, field 1 (bytes)"),
                _positive_float(fields[1], f"{loc}, field 2 (g_us)"),
                _positive_float(fields[2], f"{loc}, field 3 (os_us)"),
                _positive_float(fields[3], f"{loc}, field 4 (or_us)"),
            )
        )
        where.append(loc)
    if latency is None:
        raise ProfileError("missing latency: columns file needs a '# L <latency_us>' header")
    if not samples:
        raise ProfileError("no data rows")
    return _build(name, latency, samples, where)


def _infer_format(path: Path) -> str:
    return "json" if path.suffix.lower() == ".json" else "columns"


def load_profile(path: str | os.PathLike, format: str | None = None) -> NetworkProfile:
    """Read a profile from ``path``.

    ``format`` is ``"json"`` or ``"columns"``; when omitted it is inferred
    from the file extension (``.json`` means JSON, anything else columns).
    """
    path = Path(path)
    fmt = format or _infer_format(path)
    text = path.read_text(encoding="utf-8")
    if fmt == "json":
        return _parse_json(text, path.stem)
    if fmt == "columns":
        return _parse_columns(text, path.stem)
    raise ValueError(f"unknown profile format {fmt!r}")


def save_profile(profile: NetworkProfile, path: str | os.PathLike, format: str | None = None) -> None:
    path = Path(path)
    fmt = format or _infer_format(path)
    if fmt == "json":
        doc = {
            "name": profile.name,
            "latency_us": profile.latency,
            "samples": [
                {"bytes": s.bytes, "g_us": s.g, "os_us": s.os, "or_us": s.or_}
                for s in profile.samples
            ],
        }
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    elif fmt == "columns":
        lines = [f"# name {profile.name}", f"# L {profile.latency!r}", "# bytes g_us os_us or_us"]
        lines += [f"{s.bytes} {s.g!r} {s.os!r} {s.or_!r}" for s in profile.samples]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown profile format {fmt!r}")
