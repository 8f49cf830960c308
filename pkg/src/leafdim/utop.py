"""Open-cover unstable topological entropy of leaf subsets and of the map.

For a compact leaf subset ``K`` the entropy with respect to a grid cover is
the exponential growth rate of the minimal number of level-``n`` Bowen
segments needed to cover ``K``. It is estimated by a least-squares slope of
``log count(n)`` over the upper half of an ``n`` window, and the supremum over
covers is realised as the maximum over a family of increasingly fine grids.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .covers import GridCover, counts_within_budget, minimal_bowen_cover
from .errors import CountBudgetExceeded, EmptyTrace, NonStabilized
from .leaf import LeafSubset, WholeTorus, leaf_ball, sample_points_in, trace_subset
from .systems import ToralAutomorphism, TorusPoint

DEFAULT_MESHES = (8, 16, 32, 64)
DEFAULT_DELTAS = (0.1, 0.05)
# Largest level tried when no explicit window is given.
DEFAULT_N_CAP = 20
# Length of the automatically chosen n window.
AUTO_WINDOW = 8
STABILITY_RTOL = 0.05
# Default cap on the number of pieces in a single cover.
DEFAULT_MAX_COUNT = 2_000_000


@dataclass
class GrowthSeries:
    """Cover counts ``(n, count)`` for one cover, one leaf ball and one base point."""

    points: list[tuple[int, int]]
    slope: float
    slope_stderr: float
    window: tuple[int, int]
    cover_mesh: int
    delta: float | None = None
    base_point: TorusPoint | None = None
    truncated: bool = False  # the requested window ran into the count budget

    @property
    def log_counts(self) -> np.ndarray:
        return np.log([c for _, c in self.points])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "count", "log_count"])
        for n, c in self.points:
            w.writerow([n, c, f"{math.log(c):.12g}"])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "slope": self.slope,
            "stderr": self.slope_stderr,
            "window": list(self.window),
            "mesh": self.cover_mesh,
            "delta": self.delta,
            "base_point": None if self.base_point is None else str(self.base_point),
            "truncated": self.truncated,
        }


@dataclass
class EntropyEstimate:
    """Headline value plus everything that went into it."""

    value: float
    by_delta: dict[float, float] = field(default_factory=dict)
    series: list[GrowthSeries] = field(default_factory=list)
    stabilized: bool = True
    notes: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "value": self.value,
            "by_delta": {str(k): v for k, v in self.by_delta.items()},
            "stabilized": self.stabilized,
            "notes": list(self.notes),
            "series": [s.summary() for s in self.series],
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def fit_slope(points: list[tuple[int, int]], window: tuple[int, int]) -> tuple[float, float]:
    """Least-squares slope of ``log count`` against ``n`` over the upper half of ``window``."""
    lo, hi = window
    ns = list(range(lo, hi + 1))
    top = ns[len(ns) // 2:] if len(ns) > 2 else ns
    sel = [(n, math.log(c)) for n, c in points if n in top]
    if len(sel) < 2:
        return 0.0, 0.0
    x, y = np.array(sel).T
    fit = stats.linregress(x, y)
    stderr = float(fit.stderr) if np.isfinite(fit.stderr) else 0.0
    return float(fit.slope), stderr


def growth_series(T: ToralAutomorphism, K: LeafSubset, mesh: int,
                  n_range: tuple[int, int] | None = None,
                  max_count: int = DEFAULT_MAX_COUNT, n_cap: int = DEFAULT_N_CAP,
                  delta: float | None = None, base_point: TorusPoint | None = None) -> GrowthSeries:
    """Counts for one cover. Without ``n_range`` the window is the last
    ``AUTO_WINDOW`` levels whose counts fit in ``max_count`` (at most ``n_cap``)."""
    A = GridCover(mesh, dim=T.dim)
    truncated = False
    if n_range is None:
        points = counts_within_budget(T, K, A, 1, n_cap, max_count)
        if len(points) < 2:
            raise CountBudgetExceeded(f"mesh {mesh}: fewer than two levels fit in {max_count} pieces")
        n_hi = points[-1][0]
        window = (max(1, n_hi - AUTO_WINDOW + 1), n_hi)
        points = [p for p in points if p[0] >= window[0]]
    else:
        lo, hi = n_range
        if not 1 <= lo < hi:
            raise ValueError("n_range must satisfy 1 <= n_min < n_max")
        points = []
        for n in range(lo, hi + 1):
            try:
                points.append((n, minimal_bowen_cover(T, K, A, n, max_count=max_count).count))
            except CountBudgetExceeded:
                truncated = True
                break
        if len(points) < 2:
            raise CountBudgetExceeded(f"mesh {mesh}: window {n_range} exceeds the count budget")
        window = (lo, points[-1][0])
    slope, stderr = fit_slope(points, window)
    return GrowthSeries(points, slope, stderr, window, mesh, delta, base_point, truncated)


def _check_stable(values: list[float], what: str) -> bool:
    if len(values) < 2:
        return True
    a, b = values[-2], values[-1]
    scale = max(abs(a), abs(b))
    if scale > 0 and abs(a - b) > STABILITY_RTOL * scale:
        warnings.warn(NonStabilized(f"{what}: {a:.4f} vs {b:.4f} differ by more than "
                                    f"{STABILITY_RTOL:.0%}"), stacklevel=3)
        return False
    return True


def entropy_of_compact(T: ToralAutomorphism, K: LeafSubset, meshes=DEFAULT_MESHES,
                       n_range: tuple[int, int] | None = None,
                       max_count: int = DEFAULT_MAX_COUNT, delta: float | None = None,
                       base_point: TorusPoint | None = None) -> EntropyEstimate:
    """Entropy of the compact leaf subset ``K``: maximum slope over ``meshes``."""
    if K.is_empty:
        raise ValueError("K is empty")
    meshes = sorted(meshes)
    if not K.intervals:
        # finitely many points: the count never grows
        series = [GrowthSeries([(n, len(K.points)) for n in (1, 2)], 0.0, 0.0, (1, 2), m,
                               delta, base_point) for m in meshes]
        return EntropyEstimate(0.0, series=series)
    series = [growth_series(T, K, m, n_range, max_count, delta=delta, base_point=base_point)
              for m in meshes]
    slopes = [s.slope for s in series]
    stable = _check_stable(slopes, "slopes on the two finest meshes")
    notes = [f"mesh {s.cover_mesh}: window truncated at n={s.window[1]} by the count budget"
             for s in series if s.truncated]
    return EntropyEstimate(max(slopes), series=series, stabilized=stable, notes=notes)


def _ball_points(T, Y, sample_points, rng):
    pts = sample_points_in(WholeTorus() if Y is None else Y, T.dim, sample_points, rng, T)
    seen, out = set(), []
    for p in pts:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def entropy_of_subset_cover_style(T: ToralAutomorphism, Y, deltas=DEFAULT_DELTAS,
                                  sample_points: int = 2, meshes=DEFAULT_MESHES,
                                  n_range: tuple[int, int] | None = None, seed: int = 0,
                                  max_count: int = DEFAULT_MAX_COUNT) -> EntropyEstimate:
    """Entropy of an ambient set ``Y`` from its traces on leaf balls centred in ``Y``.

    For each radius the supremum is taken over sampled centres; the headline
    value is the one at the smallest radius.
    """
    if sample_points < 1:
        raise ValueError("sample_points must be >= 1")
    deltas = sorted(deltas, reverse=True)
    rng = np.random.default_rng(seed)
    centres = _ball_points(T, Y, sample_points, rng)
    by_delta: dict[float, float] = {}
    series: list[GrowthSeries] = []
    notes: list[str] = []
    stable = True
    any_trace = False
    for delta in deltas:
        best = 0.0
        for x in centres:
            K = trace_subset(T, Y, leaf_ball(T, x, delta))
            if K.is_empty:
                continue
            any_trace = True
            est = entropy_of_compact(T, K, meshes, n_range, max_count, delta, x)
            series.extend(est.series)
            notes.extend(est.notes)
            stable &= est.stabilized
            best = max(best, est.value)
        by_delta[delta] = best
    if not any_trace:
        warnings.warn(EmptyTrace("every sampled leaf ball missed the set"), stacklevel=2)
        return EntropyEstimate(0.0, {d: 0.0 for d in deltas}, notes=["empty trace"])
    stable &= _check_stable([by_delta[d] for d in deltas], "estimates at the two smallest radii")
    return EntropyEstimate(by_delta[deltas[-1]], by_delta, series, stable, notes)


def unstable_topological_entropy(T: ToralAutomorphism, deltas=DEFAULT_DELTAS,
                                 sample_points: int = 2, meshes=DEFAULT_MESHES,
                                 n_range: tuple[int, int] | None = None, seed: int = 0,
                                 max_count: int = DEFAULT_MAX_COUNT) -> EntropyEstimate:
    """Unstable topological entropy of ``T``: the whole-torus case."""
    return entropy_of_subset_cover_style(T, WholeTorus(), deltas, sample_points, meshes,
                                         n_range, seed, max_count)
