"""Segments of one-dimensional unstable leaves and traces of ambient sets on them.

A :class:`LeafSegment` stores reference parameters ``t_lo < t_hi`` together
with a ``level``: the segment is ``{base + t * scale * v}`` with
``scale = sign**level * exp(level * log_rate)``, where ``base`` is already the
``level``-th image of the original base point and ``sign`` is the sign of the
unstable eigenvalue.
Keeping the unscaled parameters and an integer level makes the geometry of
``f**k(S)`` a function of ``level + k`` alone, so iterating is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .systems import ToralAutomorphism, TorusPoint, apply


@dataclass(frozen=True)
class LeafSegment:
    base: TorusPoint
    direction: tuple[float, ...]
    t_lo: float
    t_hi: float
    level: int = 0
    log_rate: float = 0.0
    flips: bool = False  # negative unstable eigenvalue

    def __post_init__(self):
        if not self.t_lo <= self.t_hi:
            raise ValueError("t_lo must not exceed t_hi")

    @property
    def scale(self) -> float:
        """Signed factor from reference parameters to offsets along ``direction``."""
        mag = math.exp(self.level * self.log_rate)
        return -mag if self.flips and self.level % 2 else mag

    @property
    def log_length(self) -> float:
        width = self.t_hi - self.t_lo
        return -math.inf if width == 0 else math.log(width) + self.level * self.log_rate

    @property
    def length(self) -> float:
        return (self.t_hi - self.t_lo) * abs(self.scale)

    @property
    def is_degenerate(self) -> bool:
        return self.t_hi == self.t_lo

    def point_at(self, t: float) -> np.ndarray:
        """Float coordinates (mod 1) of the point with reference parameter ``t``."""
        return (self.base.to_array() + t * self.scale * np.asarray(self.direction)) % 1.0

    def sub(self, t_lo: float, t_hi: float) -> "LeafSegment":
        return replace(self, t_lo=t_lo, t_hi=t_hi)


def leaf_ball(T: ToralAutomorphism, x: TorusPoint, delta: float) -> LeafSegment:
    """Closed ball of radius ``delta`` around ``x`` inside its unstable leaf."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return LeafSegment(base=x, direction=tuple(T.direction), t_lo=-delta, t_hi=delta,
                       level=0, log_rate=T.log_rate, flips=T.unstable_sign < 0)


def iterate_segment(T: ToralAutomorphism, S: LeafSegment, n: int) -> LeafSegment:
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return S
    return replace(S, base=apply(T, S.base, n), level=S.level + n * T.stride)


# ---------------------------------------------------------------------------
# subsets of a leaf
# ---------------------------------------------------------------------------

def _merge(intervals: Iterable[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    out: list[list[float]] = []
    for lo, hi in sorted(intervals):
        if hi < lo:
            continue
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return tuple((lo, hi) for lo, hi in out)


@dataclass(frozen=True)
class LeafSubset:
    """A subset of the leaf through ``carrier.base``.

    Intervals (closed, disjoint, sorted) and isolated points are given in the
    carrier's reference parameters. ``kind`` records how the set was produced;
    ``resolution`` is the sampling step used for indicator traces.
    """

    carrier: LeafSegment
    intervals: tuple[tuple[float, float], ...] = ()
    points: tuple[float, ...] = ()
    kind: str = "segments"
    resolution: float | None = None

    def __post_init__(self):
        merged = _merge(self.intervals)
        pts = tuple(sorted(set(p for p in self.points
                               if not any(lo <= p <= hi for lo, hi in merged))))
        object.__setattr__(self, "intervals", merged)
        object.__setattr__(self, "points", pts)
        if self.kind == "indicator" and not (self.resolution and self.resolution > 0):
            raise ValueError("indicator traces need a positive resolution")

    @classmethod
    def from_segment(cls, S: LeafSegment) -> "LeafSubset":
        return cls(carrier=S, intervals=((S.t_lo, S.t_hi),))

    @classmethod
    def empty(cls, carrier: LeafSegment) -> "LeafSubset":
        return cls(carrier=carrier, kind="empty")

    @property
    def is_empty(self) -> bool:
        return not self.intervals and not self.points

    @property
    def segments(self) -> list[LeafSegment]:
        return [self.carrier.sub(lo, hi) for lo, hi in self.intervals]

    def measure(self) -> float:
        """Total leaf length of the interval part."""
        return sum(hi - lo for lo, hi in self.intervals) * abs(self.carrier.scale)

    def union(self, other: "LeafSubset") -> "LeafSubset":
        if (other.carrier.base, other.carrier.level) != (self.carrier.base, self.carrier.level):
            raise ValueError("subsets live on different carriers")
        kinds = {self.kind, other.kind} - {"empty"}
        kind = kinds.pop() if len(kinds) == 1 else ("mixed" if kinds else "empty")
        res = [r for r in (self.resolution, other.resolution) if r]
        return LeafSubset(self.carrier, self.intervals + other.intervals,
                          self.points + other.points, kind, min(res) if res else None)

    def iterate(self, T: ToralAutomorphism, n: int = 1) -> "LeafSubset":
        return replace(self, carrier=iterate_segment(T, self.carrier, n))

    def contains_param(self, t: float) -> bool:
        return t in self.points or any(lo <= t <= hi for lo, hi in self.intervals)


# ---------------------------------------------------------------------------
# ambient sets
# ---------------------------------------------------------------------------

def torus_distance(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    diff = np.abs(np.asarray(p) - np.asarray(q)) % 1.0
    diff = np.minimum(diff, 1.0 - diff)
    return np.sqrt(np.sum(diff * diff, axis=-1))


@dataclass(frozen=True)
class WholeTorus:
    def __str__(self):
        return "torus"


@dataclass(frozen=True)
class AmbientBall:
    center: TorusPoint
    radius: float

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return torus_distance(pts, self.center.to_array()) < self.radius

    def __str__(self):
        return f"ball:c={self.center},r={self.radius}"


@dataclass(frozen=True)
class PointSet:
    points: tuple[TorusPoint, ...]

    def __str__(self):
        return "points:[" + ",".join(str(p) for p in self.points) + "]"


@dataclass(frozen=True)
class PeriodicOrbit:
    point: TorusPoint
    max_period: int = 1_000_000

    def orbit(self, T: ToralAutomorphism) -> tuple[TorusPoint, ...]:
        pts = [self.point]
        y = apply(T, self.point, 1)
        while y != self.point:
            pts.append(y)
            if len(pts) > self.max_period:
                raise ValueError("period exceeds max_period")
            y = apply(T, y, 1)
        return tuple(pts)

    def __str__(self):
        return f"orbit:p={self.point}"


@dataclass(frozen=True)
class Indicator:
    """Arbitrary ambient set given by a vectorised membership predicate."""

    predicate: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    label: str = "indicator"

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self.predicate(pts), dtype=bool)

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class UnionSet:
    parts: tuple

    def __str__(self):
        return "+".join(str(p) for p in self.parts)


AmbientSet = WholeTorus | AmbientBall | PointSet | PeriodicOrbit | Indicator | UnionSet


def _point_params(S: LeafSegment, q: TorusPoint, tol: float = 1e-12) -> list[float]:
    """Reference parameters t in [t_lo, t_hi] with ``S`` passing through ``q``."""
    if q == S.base:
        return [0.0] if S.t_lo <= 0.0 <= S.t_hi else []
    v = np.asarray(S.direction) * S.scale
    j = int(np.argmax(np.abs(v)))
    b = S.base.to_array()
    qa = q.to_array()
    lo, hi = sorted((S.t_lo * v[j], S.t_hi * v[j]))
    diff = float(q.coords[j] - S.base.coords[j])
    out = []
    for k in range(math.floor(lo - diff) - 1, math.ceil(hi - diff) + 2):
        t = (diff + k) / v[j]
        if not S.t_lo <= t <= S.t_hi:
            continue
        gap = np.abs(((b + t * v) - qa + 0.5) % 1.0 - 0.5)
        if np.all(gap <= tol):
            out.append(t)
    return out


def _indicator_intervals(S: LeafSegment, contains, resolution: float) -> list[tuple[float, float]]:
    width = S.t_hi - S.t_lo
    step = resolution / abs(S.scale)
    npts = max(2, int(math.ceil(width / step)) + 1)
    ts = np.linspace(S.t_lo, S.t_hi, npts)
    pts = (S.base.to_array()[None, :] + ts[:, None] * S.scale * np.asarray(S.direction)[None, :]) % 1.0
    inside = contains(pts)
    fine = step / 100.0

    def inside_at(t):
        return bool(contains(S.point_at(t)[None, :])[0])

    def refine(t_in, t_out):
        while abs(t_out - t_in) > fine:
            mid = 0.5 * (t_in + t_out)
            if inside_at(mid):
                t_in = mid
            else:
                t_out = mid
        return t_in

    out = []
    i = 0
    while i < npts:
        if not inside[i]:
            i += 1
            continue
        j = i
        while j + 1 < npts and inside[j + 1]:
            j += 1
        lo = ts[i] if i == 0 else refine(ts[i], ts[i - 1])
        hi = ts[j] if j == npts - 1 else refine(ts[j], ts[j + 1])
        out.append((lo, hi))
        i = j + 1
    return out


def trace_subset(T: ToralAutomorphism, Y, S: LeafSegment,
                 resolution: float | None = None) -> LeafSubset:
    """The part of the ambient set ``Y`` lying on the segment ``S``."""
    if resolution is None:
        resolution = S.length / 2000.0
    if isinstance(Y, WholeTorus):
        return LeafSubset.from_segment(S)
    if isinstance(Y, (AmbientBall, Indicator)):
        ivals = _indicator_intervals(S, Y.contains, resolution)
        if not ivals:
            return LeafSubset.empty(S)
        return LeafSubset(S, tuple(ivals), kind="indicator", resolution=resolution)
    if isinstance(Y, (PointSet, PeriodicOrbit)):
        pts = Y.points if isinstance(Y, PointSet) else Y.orbit(T)
        params = [t for q in pts for t in _point_params(S, q)]
        if not params:
            return LeafSubset.empty(S)
        return LeafSubset(S, points=tuple(params), kind="points")
    if isinstance(Y, UnionSet):
        out = LeafSubset.empty(S)
        for part in Y.parts:
            out = out.union(trace_subset(T, part, S, resolution))
        return out
    raise TypeError(f"unsupported ambient set {Y!r}")


def sample_points_in(Y, dim: int, count: int, rng: np.random.Generator,
                     T: ToralAutomorphism | None = None, denominator: int = 2 ** 20) -> list[TorusPoint]:
    """Representative rational points of ``Y`` (deterministic given ``rng``)."""
    if isinstance(Y, UnionSet):
        out = []
        for part in Y.parts:
            out.extend(sample_points_in(part, dim, count, rng, T, denominator))
        return out
    if isinstance(Y, PointSet):
        return list(Y.points[:max(count, 1)])
    if isinstance(Y, PeriodicOrbit):
        return list(Y.orbit(T)[:max(count, 1)]) if T is not None else [Y.point]
    if isinstance(Y, AmbientBall):
        out = [Y.center]
        while len(out) < count:
            off = rng.uniform(-Y.radius, Y.radius, size=dim)
            if np.linalg.norm(off) < Y.radius:
                c = Y.center.to_array() + off
                out.append(TorusPoint(tuple(Fraction(int(round(ci * denominator)), denominator)
                                            for ci in c)))
        return out
    out = [TorusPoint.origin(dim)]
    while len(out) < count:
        out.append(TorusPoint(tuple(Fraction(int(k), denominator)
                                    for k in rng.integers(0, denominator, size=dim))))
    return out


# ---------------------------------------------------------------------------
# textual set descriptions
# ---------------------------------------------------------------------------

def _parse_point(text: str, where: str) -> TorusPoint:
    body = text.strip()
    if not (body.startswith("(") and body.endswith(")")):
        raise ConfigError(f"expected a point like (1/3,0.5), got {text!r}", where)
    try:
        return TorusPoint(tuple(Fraction(tok.strip()) for tok in body[1:-1].split(",")))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad coordinate in {text!r}: {exc}", where) from None


def _split_top(text: str, sep: str) -> list[tuple[int, str]]:
    """Split on ``sep`` outside brackets; returns (offset, piece) pairs."""
    out, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == sep and depth == 0:
            out.append((start, text[start:i]))
            start = i + 1
    out.append((start, text[start:]))
    return out


def ambient_set_from_spec(spec: str, where: str = "set"):
    """Parse ``torus``, ``ball:c=(..),r=..``, ``orbit:p=(..)``, ``points:[(..),...]``
    and unions of these joined by ``+``."""
    parts = _split_top(spec.strip(), "+")
    if len(parts) > 1:
        return UnionSet(tuple(ambient_set_from_spec(p, f"{where}[char {off}]") for off, p in parts))
    text = spec.strip()
    if text == "torus":
        return WholeTorus()
    kind, _, rest = text.partition(":")
    fields = {}
    if kind in ("ball", "orbit"):
        for off, item in _split_top(rest, ","):
            key, eq, val = item.partition("=")
            key = key.strip()
            if key == "period-detect" and not eq:
                continue
            if not eq:
                raise ConfigError(f"expected key=value at char {off} of {text!r}", where)
            fields[key] = val.strip()
    if kind == "ball":
        if set(fields) != {"c", "r"}:
            raise ConfigError(f"ball needs exactly c=(..) and r=.., got {sorted(fields)}", where)
        try:
            r = float(Fraction(fields["r"]))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"bad radius {fields['r']!r}", where) from None
        if not 0 < r < 0.5:
            raise ConfigError("ball radius must lie in (0, 0.5)", where)
        return AmbientBall(_parse_point(fields["c"], where), r)
    if kind == "orbit":
        if set(fields) != {"p"}:
            raise ConfigError(f"orbit needs exactly p=(..), got {sorted(fields)}", where)
        return PeriodicOrbit(_parse_point(fields["p"], where))
    if kind == "points":
        body = rest.strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise ConfigError("points needs a bracketed list [(..),(..)]", where)
        items = [p for _, p in _split_top(body[1:-1], ",") if p.strip()]
        if not items:
            raise ConfigError("points list is empty", where)
        return PointSet(tuple(_parse_point(p, where) for p in items))
    raise ConfigError(f"unknown set kind {kind!r}; expected torus, ball, orbit or points", where)
