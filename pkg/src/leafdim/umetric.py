"""Unstable metric entropy of Lebesgue measure for linear systems.

Two routes: the Jacobian formula (``log`` of the unstable eigenvalue, which
is constant) and a Shannon-McMillan-Breiman estimator. For the latter the
partition is the exact grid of half-open boxes, the plaque ``eta(x)`` is the
leaf segment through ``x`` clipped to the box of ``x``, and the conditional
measure on a plaque is normalised arclength. Along an affine leaf the plaque
points sharing the box of ``f^k(x)`` for every ``k < n`` form a finite union
of intervals, computed here in 100-digit decimal arithmetic so the
information is exact up to rounding far below double precision.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np

from .errors import DegeneratePlaque
from .leaf import LeafSegment
from .systems import ToralAutomorphism, TorusPoint, apply, unstable_eigen_decimal

HYPERPLANE_TOL = 1e-9
CONVERGENCE_RTOL = 0.02
# working digits for cylinders; level-n offsets reach |lam|**n times the plaque
PRECISION = 100


def metric_entropy_jacobian(T: ToralAutomorphism) -> float:
    """``log Jac^u`` integrated against Lebesgue, i.e. ``log`` of the unstable rate."""
    return T.stride * T.log_rate


@dataclass(frozen=True)
class PlaqueConditional:
    """A plaque ``eta(x)`` with the uniform conditional measure on it."""

    plaque: LeafSegment

    def measure(self, t_lo: float, t_hi: float) -> float:
        """Conditional measure of the sub-interval ``[t_lo, t_hi]`` of the plaque."""
        lo = max(t_lo, self.plaque.t_lo)
        hi = min(t_hi, self.plaque.t_hi)
        width = self.plaque.t_hi - self.plaque.t_lo
        return max(0.0, hi - lo) / width


@dataclass(frozen=True)
class InformationSample:
    x: TorusPoint
    n: int
    value: float  # I_n(x) / n
    cylinder: tuple[tuple[float, float], ...] = ()
    plaque: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("information must be nonnegative")


def _dec(q: Fraction) -> Decimal:
    return Decimal(q.numerator) / Decimal(q.denominator)


def _box_pieces(y: TorusPoint, w: tuple[Decimal, ...], m: int, a: Decimal, b: Decimal
                ) -> list[tuple[Decimal, Decimal]]:
    """Sub-intervals of ``[a, b]`` where ``y + t*w`` (mod 1) lies in the box of ``y``.

    Along each axis the admissible set is periodic in ``t``: one interval
    per integer translate ``q`` of the box that the line crosses.
    """
    pieces = [(a, b)]
    for yj, wj in zip(y.coords, w):
        if wj == 0 or not pieces:
            continue
        c = math.floor(yj * m)
        below = _dec(Fraction(c, m) - yj)       # <= 0
        above = _dec(Fraction(c + 1, m) - yj)   # > 0
        allowed = []
        for lo, hi in pieces:
            u1, u2 = sorted((lo * wj, hi * wj))
            for q in range(math.floor(u1 - above), math.ceil(u2 - below) + 1):
                t1, t2 = sorted(((below + q) / wj, (above + q) / wj))
                t1, t2 = max(t1, lo), min(t2, hi)
                if t2 > t1:
                    allowed.append((t1, t2))
        pieces = allowed
    return pieces


def _plaque_exact(T: ToralAutomorphism, x: TorusPoint, m: int):
    for c in x.coords:
        r = c * m - math.floor(c * m)
        if min(r, 1 - r) < HYPERPLANE_TOL * m:
            raise DegeneratePlaque(f"{x} lies within {HYPERPLANE_TOL} of a grid hyperplane")
    _, v = unstable_eigen_decimal(T, PRECISION)
    with localcontext() as ctx:
        ctx.prec = PRECISION
        # boxes have diameter < 1; keep only the component through x itself
        for lo, hi in _box_pieces(x, v, m, Decimal(-1), Decimal(1)):
            if lo <= 0 <= hi:
                return lo, hi
    raise DegeneratePlaque(f"no plaque through {x}")


def plaque_through(T: ToralAutomorphism, x: TorusPoint, m: int) -> PlaqueConditional:
    """``eta(x)``: the leaf segment through ``x`` inside its grid box."""
    lo, hi = _plaque_exact(T, x, m)
    seg = LeafSegment(x, tuple(T.direction), float(lo), float(hi), 0, T.log_rate,
                      T.unstable_sign < 0)
    return PlaqueConditional(seg)


def _cylinder_decimal(T: ToralAutomorphism, x: TorusPoint, m: int, n: int):
    lo, hi = _plaque_exact(T, x, m)
    lam, v = unstable_eigen_decimal(T, PRECISION)
    with localcontext() as ctx:
        ctx.prec = PRECISION
        step = lam ** T.stride
        pieces = [(lo, hi)]
        y = x
        factor = Decimal(1)
        for _ in range(1, n):
            y = apply(T, y, 1)
            factor *= step
            w = tuple(factor * vj for vj in v)
            pieces = [p for a, b in pieces for p in _box_pieces(y, w, m, a, b)]
        return (lo, hi), pieces


def cylinder_set(T: ToralAutomorphism, x: TorusPoint, m: int, n: int
                 ) -> list[tuple[float, float]]:
    """Plaque parameters whose orbit shares the box of ``f^k(x)`` for all ``k < n``.

    Once the image of the plaque wraps around the torus it can re-enter the
    same box, so the cylinder is in general a union of intervals. The
    component through ``x`` (parameter 0) is always present.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _, pieces = _cylinder_decimal(T, x, m, n)
    return [(float(a), float(b)) for a, b in pieces]


def conditional_information(T: ToralAutomorphism, x: TorusPoint, m: int, n: int) -> InformationSample:
    """``I_n(x) / n = -(1/n) log mu^eta_x(cylinder of length n through x)``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        lo, hi = _plaque_exact(T, x, m)
        return InformationSample(x, 0, 0.0, ((float(lo), float(hi)),), (float(lo), float(hi)))
    (lo, hi), pieces = _cylinder_decimal(T, x, m, n)
    with localcontext() as ctx:
        ctx.prec = PRECISION
        ratio = sum((b - a for a, b in pieces), Decimal(0)) / (hi - lo)
        value = float(-ratio.ln()) / n
    return InformationSample(x, n, max(value, 0.0),
                             tuple((float(a), float(b)) for a, b in pieces),
                             (float(lo), float(hi)))


def random_rational_point(rng: np.random.Generator, dim: int,
                          denominator: int = 2 ** 30) -> TorusPoint:
    return TorusPoint(tuple(Fraction(int(k), denominator)
                            for k in rng.integers(0, denominator, size=dim)))


@dataclass
class SMBReport:
    rows: list[tuple[int, float, float, int]]  # n, mean I_n/n, stddev, samples
    target: float
    converged: bool
    tail_rate: float | None = None  # mean (I_b - I_a)/(b - a) over the last two n
    values: dict[int, list[float]] = field(default_factory=dict)

    def mean_at(self, n: int) -> float:
        for row in self.rows:
            if row[0] == n:
                return row[1]
        raise KeyError(n)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "mean_In_over_n", "stddev", "samples"])
        for n, mean, sd, k in self.rows:
            w.writerow([n, f"{mean:.12g}", f"{sd:.12g}", k])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "rows": [list(r) for r in self.rows],
            "target": self.target,
            "converged": self.converged,
            "tail_rate": self.tail_rate,
        }


def smb_convergence_report(T: ToralAutomorphism, samples: int = 10,
                           n_list=(10, 15, 20, 25), m: int = 16, seed: int = 0) -> SMBReport:
    """Mean and spread of ``I_n/n`` over random rational points, per ``n``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n_list = sorted(n_list)
    rng = np.random.default_rng(seed)
    points: list[TorusPoint] = []
    while len(points) < samples:
        x = random_rational_point(rng, T.dim)
        try:
            plaque_through(T, x, m)
        except DegeneratePlaque:
            continue
        points.append(x)
    info = {n: [conditional_information(T, x, m, n).value * n for x in points] for n in n_list}
    values = {n: [i / n if n else 0.0 for i in info[n]] for n in n_list}
    rows = []
    for n in n_list:
        arr = np.asarray(values[n])
        sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        rows.append((n, float(arr.mean()), sd, len(arr)))
    converged = False
    tail = None
    if len(n_list) >= 2:
        a, b = rows[-2][1], rows[-1][1]
        converged = abs(a - b) <= CONVERGENCE_RTOL * max(abs(b), 1e-12)
        na, nb = n_list[-2], n_list[-1]
        tail = float(np.mean([(ib - ia) / (nb - na) for ia, ib in zip(info[na], info[nb])]))
    return SMBReport(rows, metric_entropy_jacobian(T), converged, tail, values)
