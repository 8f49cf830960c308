"""Inflated grid covers, the orbit scale ``n_{f,A}`` and minimal Bowen covers.

A :class:`GridCover` with ``m`` cells per axis and inflation ``rho`` is the
family of open boxes of side ``rho/m`` centred at the grid-cell centres. It is
a product of per-axis interval families, so a straight segment lies in some
box exactly when each coordinate projection lies in some axis interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._kernels import greedy_sweep
from .errors import CountBudgetExceeded, Infeasible
from .leaf import LeafSegment, LeafSubset, iterate_segment
from .systems import ToralAutomorphism, TorusPoint, apply

DEFAULT_INFLATION = 1.75
DEFAULT_N_MAX = 60
DEFAULT_MAX_COUNT = 10_000_000
# Precision floor for top-level parameters handed to the float kernel.
_MAX_TAU = 1e10


@dataclass(frozen=True)
class GridCover:
    mesh_count: int
    inflation: float = DEFAULT_INFLATION
    dim: int = 2

    def __post_init__(self):
        if self.mesh_count < 2:
            raise ValueError("mesh_count must be >= 2")
        if not 1.0 < self.inflation < 2.0:
            raise ValueError("inflation must lie strictly between 1 and 2")
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")

    @property
    def side(self) -> float:
        return self.inflation / self.mesh_count

    @property
    def overlap(self) -> float:
        """Every axis interval shorter than this fits in some cell."""
        return (self.inflation - 1.0) / self.mesh_count

    def is_monotone_for(self, T: ToralAutomorphism) -> bool:
        """True when failing to be thinner persists under further iteration.

        A projection too long to fit anywhere is at least ``overlap`` long;
        after one more step of expansion it exceeds ``side`` exactly when
        ``rho >= lam / (lam - 1)``.
        """
        lam = T.splitting.unstable_rate
        return self.inflation >= lam / (lam - 1.0)


@dataclass(frozen=True)
class BowenCount:
    n: int
    count: int
    mesh_count: int
    pieces: np.ndarray | None = None  # (count, 2) reference parameters, if recorded

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be nonnegative")


def thinner_than(S: LeafSegment, A: GridCover) -> bool:
    """Whether the closed segment ``S`` lies inside one open box of ``A``.

    The base point is exact; the offsets ``t * scale * v`` are the double
    values the rest of the package uses, converted exactly to rationals, so
    the comparison itself has no rounding.
    """
    m = A.mesh_count
    half = Fraction(A.inflation) / 2
    scale = S.scale
    for bj, vj in zip(S.base.coords, S.direction):
        o1 = Fraction(S.t_lo * scale * vj)
        o2 = Fraction(S.t_hi * scale * vj)
        lo = (bj + min(o1, o2)) * m
        hi = (bj + max(o1, o2)) * m
        i = math.ceil(lo - Fraction(1, 2) + half) - 1
        if not hi < i + Fraction(1, 2) + half:
            return False
    return True


def n_orbit_thinner(T: ToralAutomorphism, S: LeafSegment, A: GridCover,
                    n_max: int = DEFAULT_N_MAX, return_capped: bool = False):
    """Largest ``n`` with ``f**k(S)`` thinner than ``A`` for all ``0 <= k < n``.

    Capped at ``n_max``; degenerate segments are always capped.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if S.is_degenerate:
        return (n_max, True) if return_capped else n_max
    seg = S
    for k in range(n_max):
        if not thinner_than(seg, A):
            return (k, False) if return_capped else k
        seg = iterate_segment(T, seg, 1)
    return (n_max, True) if return_capped else n_max


def checked_offsets(T: ToralAutomorphism, A: GridCover, n: int) -> list[int]:
    """Iterates ``k < n`` whose thinness is not implied by that of iterate ``n-1``.

    A piece thinner at iterate ``n-1`` has every projection shorter than
    ``side`` there, hence shorter than ``side * lam**(-j)`` at iterate
    ``n-1-j``, which fits automatically once below ``overlap``.
    """
    log_gap = math.log(A.inflation / (A.inflation - 1.0))
    step = T.stride * T.log_rate
    out = []
    j = 0
    while j < n and j * step < log_gap + 1e-12:
        out.append(n - 1 - j)
        j += 1
    return out


def _sweep_inputs(T: ToralAutomorphism, X: LeafSubset, A: GridCover, n: int,
                  include_points: bool = True):
    C = X.carrier
    offsets = checked_offsets(T, A, n)
    top = (n - 1) * T.stride
    log_top = (C.level + top) * T.log_rate if C.log_rate == T.log_rate else None
    if log_top is None:
        raise ValueError("leaf subset was not built for this automorphism")
    scale_top = math.exp(log_top)
    # parameters are measured along sign**(level of the top) * v; relative
    # signs between checked levels go into the ratios
    sign = -1.0 if C.flips else 1.0
    top_level = C.level + top
    v = np.asarray(C.direction, dtype=float) * sign ** (top_level % 2)
    bases = np.empty((len(offsets), C.base.dim))
    ratios = np.empty(len(offsets))
    for r, k in enumerate(offsets):
        bases[r] = apply(T, C.base, k).to_array()
        rel = (k - (n - 1)) * T.stride
        ratios[r] = math.exp(rel * T.log_rate) * sign ** (rel % 2)
    ivals = list(X.intervals)
    if include_points:
        ivals += [(p, p) for p in X.points]
    ivals.sort()
    starts = np.array([lo for lo, _ in ivals], dtype=float) * scale_top
    ends = np.array([hi for _, hi in ivals], dtype=float) * scale_top
    if len(starts) and np.max(np.abs(np.concatenate([starts, ends]))) > _MAX_TAU:
        raise ValueError("leaf parameters exceed double precision at this level; "
                         "use a carrier based nearer the subset")
    return bases, ratios, v, starts, ends, scale_top


def greedy_count(T: ToralAutomorphism, X: LeafSubset, A: GridCover, n: int,
                 max_count: int = DEFAULT_MAX_COUNT, record: bool = False,
                 include_points: bool = True):
    """Number of pieces of the greedy level-``n`` cover (and the pieces)."""
    bases, ratios, v, starts, ends, scale_top = _sweep_inputs(T, X, A, n, include_points)
    nrec = max_count + 1 if record else 0
    rec_lo = np.empty(nrec)
    rec_hi = np.empty(nrec)
    # Safety margin below each wall: a fixed floor plus the rounding error
    # of positions of size |tau| in double precision.
    tau_max = float(np.max(np.abs(np.concatenate([starts, ends])))) if len(starts) else 0.0
    mu = 1e-10 / A.mesh_count + 8e-16 * tau_max
    count = greedy_sweep(bases, ratios, v, starts, ends, float(A.mesh_count),
                         float(A.inflation), mu, int(max_count), rec_lo, rec_hi)
    if count < 0:
        raise CountBudgetExceeded(f"level {n} cover needs more than {max_count} pieces")
    pieces = None
    if record:
        pieces = np.column_stack([rec_lo[:count], rec_hi[:count]]) / scale_top
    return count, pieces


def minimal_bowen_cover(T: ToralAutomorphism, X: LeafSubset, A: GridCover, n: int,
                        max_count: int = DEFAULT_MAX_COUNT, record: bool = False) -> BowenCount:
    """Fewest leaf segments ``S_i`` with ``n_{f,A}(S_i) >= n`` covering ``X``.

    The greedy sweep places each piece at the leftmost uncovered point and
    extends it as far as the cover allows, which is optimal for covering a
    subset of a line by intervals. A set of isolated points is covered by
    degenerate segments, one per point.
    """
    if X.is_empty:
        raise ValueError("cannot cover an empty leaf subset")
    if n < 1:
        raise ValueError("n must be >= 1")
    if not X.intervals:
        pieces = np.array([[p, p] for p in X.points]) if record else None
        return BowenCount(n, len(X.points), A.mesh_count, pieces)
    count, pieces = greedy_count(T, X, A, n, max_count, record)
    if count < 1:
        raise Infeasible("greedy cover produced no pieces")
    return BowenCount(n, count, A.mesh_count, pieces)


def counts_within_budget(T: ToralAutomorphism, X: LeafSubset, A: GridCover, n_start: int = 1,
                         n_stop: int = DEFAULT_N_MAX, max_count: int = DEFAULT_MAX_COUNT
                         ) -> list[tuple[int, int]]:
    """Greedy counts at levels ``n_start, n_start+1, ...`` while they fit in ``max_count``.

    Stops before a level whose count, extrapolated from the last growth
    ratio, would clearly exceed the budget, so no sweep is wasted on it.
    """
    out: list[tuple[int, int]] = []
    for n in range(n_start, n_stop + 1):
        if len(out) >= 2 and out[-2][1] > 0:
            predicted = out[-1][1] * out[-1][1] / out[-2][1]
            if predicted > 1.5 * max_count:
                break
        try:
            out.append((n, minimal_bowen_cover(T, X, A, n, max_count=max_count).count))
        except CountBudgetExceeded:
            break
    return out
