"""Carathéodory-style outer measures on unstable leaves and their critical exponent.

A set ``E`` on a leaf gets weight ``D(E) = exp(-n_{f,A}(E))``. The outer
measure at exponent ``lam`` and scale ``N`` is the infimum of
``sum D(E_i)**lam`` over covers by sets with ``n_{f,A}(E_i) > N``, and the
critical exponent is where the limit in ``N`` jumps from infinity to zero.

Cover levels are chosen per part of the set: the interval part is covered
greedily at one uniform level in ``[N+1, N+delta_levels]``, and isolated
points by degenerate segments at level ``n_max``. Counts do not
depend on ``lam``, so they are computed once and reused by the bisection.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .covers import (DEFAULT_N_MAX, GridCover, counts_within_budget, minimal_bowen_cover,
                     n_orbit_thinner)
from .errors import EmptyTrace, Infeasible, IndeterminateTrend, NonStabilized
from .leaf import LeafSegment, LeafSubset, WholeTorus, leaf_ball, sample_points_in, trace_subset
from .systems import ToralAutomorphism, TorusPoint

DEFAULT_MESHES = (8, 16, 32, 64)
DEFAULT_DELTAS = (0.1, 0.05)
DEFAULT_DELTA_LEVELS = 5
DEFAULT_MAX_COUNT = 8_000_000
WINDOW = 8
BISECTION_WIDTH = 0.01
TREND_FACTOR = 2.0
STABILITY_RTOL = 0.05


def weight(T: ToralAutomorphism, S: LeafSegment, A: GridCover, lam: float,
           n_max: int = DEFAULT_N_MAX) -> float:
    """``D_A(S)**lam = exp(-lam * n_{f,A}(S))``."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if lam == 0:
        return 1.0
    return math.exp(-lam * n_orbit_thinner(T, S, A, n_max))


@dataclass(frozen=True)
class CoverPart:
    """``count`` cover elements, all at level ``n_value``, covering ``target``.

    ``target`` is a tuple of intervals ``(lo, hi)`` of reference parameters
    or a single point parameter.
    """

    target: tuple[tuple[float, float], ...] | float
    n_value: int
    count: int


@dataclass
class WeightedCover:
    parts: list[CoverPart]
    scale: int
    capped: bool = False  # some point part sits at the n_max cap

    def __post_init__(self):
        if any(p.n_value < self.scale for p in self.parts):
            raise ValueError("every element must have n_value >= scale")

    def log_total_weight(self, lam: float) -> float:
        terms = [math.log(p.count) - lam * p.n_value for p in self.parts if p.count > 0]
        if not terms:
            return -math.inf
        top = max(terms)
        return top + math.log(sum(math.exp(t - top) for t in terms))

    def total_weight(self, lam: float) -> float:
        return math.exp(self.log_total_weight(lam))

    def elements(self, T: ToralAutomorphism, X: LeafSubset, A: GridCover) -> list[tuple]:
        """The individual cover elements ``((lo, hi), n_value)`` (materialised on demand)."""
        out = []
        for p in self.parts:
            if isinstance(p.target, tuple):
                sub = LeafSubset(X.carrier, p.target)
                bc = minimal_bowen_cover(T, sub, A, p.n_value, record=True)
                out.extend(((float(lo), float(hi)), p.n_value) for lo, hi in bc.pieces)
            else:
                out.append(((p.target, p.target), p.n_value))
        return out


def _level_counts(T, X: LeafSubset, A: GridCover, levels, max_count: int) -> dict[int, int]:
    """Greedy counts of the interval part of ``X`` at each level."""
    if not X.intervals:
        return {n: 0 for n in levels}
    seg = LeafSubset(X.carrier, X.intervals)
    return {n: minimal_bowen_cover(T, seg, A, n, max_count=max_count).count for n in levels}


class _MeasureTable:
    """Counts over a range of levels for ``X`` and for its carrier segment.

    The cover level at scale ``N`` is the cheapest one for the carrier, so
    every subset of one leaf ball is covered at the same level. With a shared
    level the estimate inherits subadditivity from the greedy count, which a
    level chosen separately for each subset would not.
    """

    def __init__(self, T, X: LeafSubset, A: GridCover, n_lo: int, n_hi: int,
                 max_count: int, n_max: int):
        self.X = X
        self.n_max = n_max
        levels = list(range(n_lo, n_hi + 1))
        self.counts = _level_counts(T, X, A, levels, max_count)
        C = X.carrier
        if X.intervals == ((C.t_lo, C.t_hi),):
            self.carrier_counts = self.counts
        else:
            self.carrier_counts = _level_counts(T, LeafSubset.from_segment(C), A, levels,
                                                max_count)

    def level(self, lam: float, N: int, delta_levels: int) -> int:
        cc = self.carrier_counts
        return min(range(N + 1, N + delta_levels + 1),
                   key=lambda n: (math.log(cc[n]) - lam * n, n))

    def cover(self, lam: float, N: int, delta_levels: int) -> WeightedCover:
        parts = []
        if self.X.intervals:
            n = self.level(lam, N, delta_levels)
            parts.append(CoverPart(self.X.intervals, n, self.counts[n]))
        n_pt = max(self.n_max, N + 1)
        parts.extend(CoverPart(p, n_pt, 1) for p in self.X.points)
        return WeightedCover(parts, N + 1, capped=bool(self.X.points))

    def log_measure(self, lam: float, N: int, delta_levels: int,
                    segments_only: bool = False) -> float:
        terms = []
        if self.X.intervals:
            n = self.level(lam, N, delta_levels)
            terms.append(math.log(self.counts[n]) - lam * n)
        if not segments_only and self.X.points:
            terms.append(math.log(len(self.X.points)) - lam * max(self.n_max, N + 1))
        if not terms:
            return -math.inf
        top = max(terms)
        return top + math.log(sum(math.exp(t - top) for t in terms))


def outer_measure_approx(T: ToralAutomorphism, X: LeafSubset, A: GridCover, lam: float,
                         N: int, delta_levels: int = DEFAULT_DELTA_LEVELS,
                         n_max: int = DEFAULT_N_MAX, max_count: int = DEFAULT_MAX_COUNT
                         ) -> tuple[float, WeightedCover]:
    """Cheapest admissible cover at scale ``N`` and its total weight.

    The interval part is covered greedily at one level in
    ``[N+1, N+delta_levels]`` (the cheapest for the carrier segment), points
    by degenerate segments at level ``n_max``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if delta_levels < 1:
        raise ValueError("delta_levels must be >= 1")
    if X.is_empty:
        return 0.0, WeightedCover([], N + 1)
    table = _MeasureTable(T, X, A, N + 1, N + delta_levels, max_count, n_max)
    cover = table.cover(lam, N, delta_levels)
    return cover.total_weight(lam), cover


# ---------------------------------------------------------------------------
# critical exponent
# ---------------------------------------------------------------------------

@dataclass
class CriticalExponentResult:
    lambda_star: float
    measure_trend: list[tuple[int, float, float]]  # (N, measure at lambda_lo, at lambda_hi)
    bracket: tuple[float, float]
    N_range: tuple[int, int]
    delta_levels: int
    mesh: int
    lambda_max: float
    bracket_valid: bool = True
    widened: bool = False
    notes: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "bracket": list(self.bracket),
            "N_range": list(self.N_range),
            "delta_levels": self.delta_levels,
            "mesh": self.mesh,
            "lambda_max": self.lambda_max,
            "bracket_valid": self.bracket_valid,
            "widened": self.widened,
            "notes": list(self.notes),
        }

    def trend_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "lambda", "inf_weight"])
        lo, hi = self.bracket
        for N, m_lo, m_hi in self.measure_trend:
            w.writerow([N, f"{lo:.6g}", f"{m_lo:.12g}"])
            w.writerow([N, f"{hi:.6g}", f"{m_hi:.12g}"])
        return buf.getvalue()


def _auto_window(T, X, A, max_count, n_max):
    """Highest scale window ``[N_lo, N_hi]`` of ``WINDOW`` values and the level
    spread ``delta_levels`` whose counts fit in the budget."""
    # the carrier contains X up to its ends and is the larger of the two counts
    pts = counts_within_budget(T, LeafSubset.from_segment(X.carrier), A, 1, n_max, max_count)
    if not pts:
        raise Infeasible("no level fits in the count budget")
    top = pts[-1][0]
    delta_levels = max(1, min(DEFAULT_DELTA_LEVELS, top - WINDOW))
    N_hi = top - delta_levels
    N_lo = N_hi - WINDOW + 1
    if N_lo < 1:
        raise Infeasible(f"mesh {A.mesh_count}: only {top} levels fit in {max_count} pieces; "
                         f"a window of {WINDOW} scales needs at least {WINDOW + 1}")
    return (N_lo, N_hi), delta_levels


def critical_exponent(T: ToralAutomorphism, X: LeafSubset, A: GridCover,
                      N_range: tuple[int, int] | None = None,
                      delta_levels: int | None = None, n_max: int = DEFAULT_N_MAX,
                      max_count: int = DEFAULT_MAX_COUNT,
                      lambda_max: float | None = None) -> CriticalExponentResult:
    """Exponent where the outer measure switches from growing to vanishing in ``N``.

    ``lam`` is *above* critical when the measure drops by at least a factor
    of two from the first to the last scale of the window and *below* when it
    grows by that factor. The lower and upper ends of the transition are
    located by separate bisections to width 0.01 and the midpoint is returned.
    Point parts vanish for every ``lam > 0`` and are left out of the trend.
    """
    if X.is_empty:
        raise ValueError("X is empty")
    if lambda_max is None:
        lambda_max = T.stride * T.log_rate + 1.0
    notes = []
    if not X.intervals:
        # Only points: every lam > 0 is above, lam = 0 gives a constant measure.
        hi = lambda_max
        while hi > BISECTION_WIDTH:
            hi /= 2.0
        N_range = N_range or (1, WINDOW)
        trend = [(N, float(len(X.points)), len(X.points) * math.exp(-hi * max(n_max, N + 1)))
                 for N in range(N_range[0], N_range[1] + 1)]
        return CriticalExponentResult(0.5 * hi, trend, (0.0, hi), tuple(N_range),
                                      delta_levels or DEFAULT_DELTA_LEVELS, A.mesh_count,
                                      lambda_max, notes=["point set"])
    if N_range is None:
        N_range, auto_dl = _auto_window(T, X, A, max_count, n_max)
        delta_levels = delta_levels or auto_dl
    else:
        delta_levels = delta_levels or DEFAULT_DELTA_LEVELS
        if N_range[1] - N_range[0] + 1 < WINDOW:
            raise ValueError(f"N_range must span at least {WINDOW} values")
    N_lo, N_hi = N_range
    table = _MeasureTable(T, X, A, N_lo + 1, N_hi + delta_levels, max_count, n_max)

    def log_ratio(lam, lo):
        return (table.log_measure(lam, N_hi, delta_levels, True)
                - table.log_measure(lam, lo, delta_levels, True))

    def classify(lam, lo):
        r = log_ratio(lam, lo)
        if r <= -math.log(TREND_FACTOR):
            return "above"
        if r >= math.log(TREND_FACTOR):
            return "below"
        return "flat"

    widened = False
    lo_N = N_lo
    ends = (classify(0.0, lo_N), classify(lambda_max, lo_N))
    if ends != ("below", "above") and N_lo > 1:
        # one downward widening of the window
        widened = True
        lo_N = max(1, N_lo - WINDOW)
        table = _MeasureTable(T, X, A, lo_N + 1, N_hi + delta_levels, max_count, n_max)
        ends = (classify(0.0, lo_N), classify(lambda_max, lo_N))
        notes.append(f"window widened to N in [{lo_N}, {N_hi}]")
    if ends != ("below", "above"):
        partial = CriticalExponentResult(
            math.nan, [(N, math.exp(table.log_measure(0.0, N, delta_levels)),
                        math.exp(table.log_measure(lambda_max, N, delta_levels)))
                       for N in range(lo_N, N_hi + 1)],
            (0.0, lambda_max), (lo_N, N_hi), delta_levels, A.mesh_count, lambda_max,
            bracket_valid=False, widened=widened, notes=notes)
        raise IndeterminateTrend(
            f"trend at the bracket ends is {ends}, expected ('below', 'above')", partial)

    # inf of "above"
    a, b = 0.0, lambda_max
    while b - a > BISECTION_WIDTH:
        mid = 0.5 * (a + b)
        if classify(mid, lo_N) == "above":
            b = mid
        else:
            a = mid
    lam_hi = b
    # sup of "below"
    a, b = 0.0, lambda_max
    while b - a > BISECTION_WIDTH:
        mid = 0.5 * (a + b)
        if classify(mid, lo_N) == "below":
            a = mid
        else:
            b = mid
    lam_lo = a
    valid = lam_lo <= lam_hi
    if not valid:
        notes.append("lower and upper transition points cross")
    trend = [(N, math.exp(table.log_measure(lam_lo, N, delta_levels)),
              math.exp(table.log_measure(lam_hi, N, delta_levels)))
             for N in range(lo_N, N_hi + 1)]
    return CriticalExponentResult(0.5 * (lam_lo + lam_hi), trend, (lam_lo, lam_hi),
                                  (lo_N, N_hi), delta_levels, A.mesh_count, lambda_max,
                                  valid, widened, notes)


# ---------------------------------------------------------------------------
# H-unstable entropy of ambient sets
# ---------------------------------------------------------------------------

@dataclass
class HEntropyEstimate:
    value: float
    by_delta: dict[float, float] = field(default_factory=dict)
    results: list[tuple[float, TorusPoint, CriticalExponentResult]] = field(default_factory=list)
    stabilized: bool = True
    notes: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "value": self.value,
            "by_delta": {str(k): v for k, v in self.by_delta.items()},
            "stabilized": self.stabilized,
            "notes": list(self.notes),
            "results": [dict(r.summary(), delta=d, base_point=str(x))
                        for d, x, r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def _stable(a: float, b: float, what: str) -> bool:
    scale = max(abs(a), abs(b))
    if scale > 0.1 and abs(a - b) > STABILITY_RTOL * scale:
        warnings.warn(NonStabilized(f"{what}: {a:.4f} vs {b:.4f}"), stacklevel=3)
        return False
    return True


def h_unstable_H(T: ToralAutomorphism, Y=None, deltas=DEFAULT_DELTAS, sample_points: int = 2,
                 meshes=DEFAULT_MESHES, seed: int = 0, max_count: int = DEFAULT_MAX_COUNT,
                 n_max: int = DEFAULT_N_MAX,
                 N_range: tuple[int, int] | None = None) -> HEntropyEstimate:
    """H-unstable entropy of ``Y`` (the whole torus when ``Y`` is None).

    Supremum over leaf-ball centres ``x`` (the origin, uniform samples, and
    representative points of ``Y``) and over ``meshes`` of the critical
    exponent of the trace of ``Y`` on the ball of radius ``delta``.
    """
    if sample_points < 1:
        raise ValueError("sample_points must be >= 1")
    Y = WholeTorus() if Y is None else Y
    rng = np.random.default_rng(seed)
    centres = sample_points_in(WholeTorus(), T.dim, sample_points, rng)
    if not isinstance(Y, WholeTorus):
        centres += sample_points_in(Y, T.dim, sample_points, rng, T)
    centres = list(dict.fromkeys(centres))
    deltas = sorted(deltas, reverse=True)
    meshes = sorted(meshes)
    by_delta: dict[float, float] = {}
    results = []
    notes: list[str] = []
    stable = True
    any_trace = False
    for delta in deltas:
        per_mesh = {m: 0.0 for m in meshes}
        for x in centres:
            X = trace_subset(T, Y, leaf_ball(T, x, delta))
            if X.is_empty:
                continue
            any_trace = True
            for m in meshes:
                A = GridCover(m, dim=T.dim)
                try:
                    r = critical_exponent(T, X, A, N_range, n_max=n_max, max_count=max_count)
                except Infeasible as exc:
                    notes.append(f"delta={delta} x={x}: {exc}")
                    continue
                results.append((delta, x, r))
                per_mesh[m] = max(per_mesh[m], r.lambda_star)
        used = [per_mesh[m] for m in meshes]
        if len(used) >= 2:
            stable &= _stable(used[-2], used[-1], f"delta={delta}: two finest meshes")
        by_delta[delta] = max(used)
    if not any_trace:
        warnings.warn(EmptyTrace("every sampled leaf ball missed the set"), stacklevel=2)
        return HEntropyEstimate(0.0, {d: 0.0 for d in deltas}, notes=["empty trace"])
    if not results:
        raise Infeasible("no mesh admitted a full scale window within the count budget")
    if len(deltas) >= 2:
        stable &= _stable(by_delta[deltas[-2]], by_delta[deltas[-1]], "two smallest radii")
    return HEntropyEstimate(by_delta[deltas[-1]], by_delta, results, stable, notes)
