"""Linear partially hyperbolic automorphisms of the 2- and 3-torus.

Orbits are computed with exact rational arithmetic; the eigen-splitting is
computed in double precision by bisection on the integer characteristic
polynomial.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import cached_property, lru_cache
from math import lcm
from typing import Sequence

import numpy as np

from .errors import (
    ComplexSpectrum,
    MultipleUnstable,
    NoUnstableDirection,
    NotUnimodular,
    UnsupportedDimension,
)

Matrix = tuple[tuple[int, ...], ...]

ROOT_TOL = 1e-12
EIGEN_RESIDUAL_TOL = 1e-10


# ---------------------------------------------------------------------------
# integer matrix helpers
# ---------------------------------------------------------------------------

def _matmul(a: Matrix, b: Matrix) -> Matrix:
    n = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n))
        for i in range(n)
    )


def _identity(n: int) -> Matrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def _det(a: Matrix) -> int:
    if len(a) == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    return (
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    )


def _adjugate(a: Matrix) -> Matrix:
    if len(a) == 2:
        return ((a[1][1], -a[0][1]), (-a[1][0], a[0][0]))
    cof = [[0] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            rows = [r for r in range(3) if r != i]
            cols = [c for c in range(3) if c != j]
            minor = (a[rows[0]][cols[0]] * a[rows[1]][cols[1]]
                     - a[rows[0]][cols[1]] * a[rows[1]][cols[0]])
            cof[i][j] = (-1) ** (i + j) * minor
    return tuple(tuple(cof[j][i] for j in range(3)) for i in range(3))


def integer_inverse(a: Matrix) -> Matrix:
    det = _det(a)
    if abs(det) != 1:
        raise NotUnimodular(f"determinant {det} is not +-1")
    adj = _adjugate(a)
    return tuple(tuple(det * x for x in row) for row in adj)


@lru_cache(maxsize=4096)
def matrix_power(a: Matrix, k: int) -> Matrix:
    """Exact ``a**k`` for any integer ``k`` (negative uses the integer inverse)."""
    if k < 0:
        return matrix_power(integer_inverse(a), -k)
    result = _identity(len(a))
    base = a
    while k:
        if k & 1:
            result = _matmul(result, base)
        base = _matmul(base, base)
        k >>= 1
    return result


def characteristic_polynomial(a: Matrix) -> tuple[int, ...]:
    """Monic coefficients, highest degree first: ``t^d + c1 t^(d-1) + ...``."""
    tr = sum(a[i][i] for i in range(len(a)))
    det = _det(a)
    if len(a) == 2:
        return (1, -tr, det)
    c2 = (a[0][0] * a[1][1] - a[0][1] * a[1][0]
          + a[0][0] * a[2][2] - a[0][2] * a[2][0]
          + a[1][1] * a[2][2] - a[1][2] * a[2][1])
    return (1, -tr, c2, -det)


def _horner(coeffs: Sequence[int], t: float) -> float:
    acc = 0.0
    for c in coeffs:
        acc = acc * t + c
    return acc


def _bisect(coeffs, lo: float, hi: float, tol: float = ROOT_TOL) -> float:
    flo = _horner(coeffs, lo)
    if flo == 0.0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = _horner(coeffs, mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def real_roots(coeffs: Sequence[int]) -> list[float]:
    """All roots of a monic integer quadratic or cubic with distinct real roots.

    Raises ComplexSpectrum when the (exact, integer) discriminant is not
    positive.
    """
    bound = 1.0 + max(abs(c) for c in coeffs[1:])
    if len(coeffs) == 3:
        _, b, c = coeffs
        if b * b - 4 * c <= 0:
            raise ComplexSpectrum("characteristic polynomial has no two distinct real roots")
        brackets = [(-bound, -b / 2.0), (-b / 2.0, bound)]
    elif len(coeffs) == 4:
        _, b, c, d = coeffs
        disc = 18 * b * c * d - 4 * b ** 3 * d + b * b * c * c - 4 * c ** 3 - 27 * d * d
        if disc <= 0:
            raise ComplexSpectrum("characteristic polynomial has no three distinct real roots")
        # critical points of t^3 + b t^2 + c t + d
        s = math.sqrt(b * b - 3 * c)
        r1, r2 = (-b - s) / 3.0, (-b + s) / 3.0
        brackets = [(-bound, r1), (r1, r2), (r2, bound)]
    else:
        raise UnsupportedDimension(f"degree {len(coeffs) - 1} not supported")
    roots = []
    for lo, hi in brackets:
        if _horner(coeffs, lo) * _horner(coeffs, hi) > 0:
            raise ComplexSpectrum("sign-change bracketing failed")
        roots.append(_bisect(coeffs, lo, hi))
    return roots


def _null_vector(a: Matrix, lam: float) -> np.ndarray:
    m = np.array(a, dtype=float) - lam * np.eye(len(a))
    if len(a) == 2:
        cands = [np.array([m[0, 1], -m[0, 0]]), np.array([m[1, 1], -m[1, 0]])]
    else:
        cands = [np.cross(m[0], m[1]), np.cross(m[0], m[2]), np.cross(m[1], m[2])]
    v = max(cands, key=np.linalg.norm)
    v = v / np.linalg.norm(v)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v


@lru_cache(maxsize=None)
def _unstable_eigen_decimal(a: Matrix, approx: float, sign_ref: tuple[float, ...],
                            prec: int) -> tuple[Decimal, tuple[Decimal, ...]]:
    with localcontext() as ctx:
        ctx.prec = prec + 10
        coeffs = [Decimal(c) for c in characteristic_polynomial(a)]
        deriv = [c * (len(coeffs) - 1 - i) for i, c in enumerate(coeffs[:-1])]
        lam = Decimal(approx)
        for _ in range(200):
            p = dp = Decimal(0)
            for c in coeffs:
                p = p * lam + c
            for c in deriv:
                dp = dp * lam + c
            step = p / dp
            lam -= step
            if step == 0 or abs(step) < abs(lam).scaleb(-prec - 5):
                break
        d = len(a)
        b = [[Decimal(a[i][j]) - (lam if i == j else 0) for j in range(d)] for i in range(d)]
        if d == 2:
            cands = [(b[0][1], -b[0][0]), (b[1][1], -b[1][0])]
        else:
            def cross(u, w):
                return (u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2],
                        u[0] * w[1] - u[1] * w[0])
            cands = [cross(b[0], b[1]), cross(b[0], b[2]), cross(b[1], b[2])]
        v = max(cands, key=lambda u: sum(x * x for x in u))
        norm = sum(x * x for x in v).sqrt()
        v = tuple(x / norm for x in v)
        if sum(float(x) * r for x, r in zip(v, sign_ref)) < 0:
            v = tuple(-x for x in v)
        return +lam, tuple(+x for x in v)


def unstable_eigen_decimal(T: "ToralAutomorphism", prec: int = 100
                           ) -> tuple[Decimal, tuple[Decimal, ...]]:
    """Signed unstable eigenvalue of the primitive map and its unit eigenvector,
    to ``prec`` significant digits (Newton from the double root).

    The vector is oriented like ``T.direction``.
    """
    s = T.root_splitting
    return _unstable_eigen_decimal(T.matrix, float(s.eigenvalues[-1]),
                                   tuple(float(x) for x in T.direction), prec)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

def _frac(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10 ** 12)
    return Fraction(value)


@dataclass(frozen=True)
class TorusPoint:
    """A point of the torus with exact rational coordinates in [0, 1)."""

    coords: tuple[Fraction, ...]

    def __post_init__(self):
        reduced = tuple(_frac(c) % 1 for c in self.coords)
        object.__setattr__(self, "coords", reduced)

    @classmethod
    def of(cls, *values) -> "TorusPoint":
        if len(values) == 1 and not isinstance(values[0], (int, Fraction, float, str)):
            values = tuple(values[0])
        return cls(tuple(_frac(v) for v in values))

    @classmethod
    def origin(cls, dim: int) -> "TorusPoint":
        return cls((Fraction(0),) * dim)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def to_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.coords])

    def __str__(self) -> str:
        return "(" + ",".join(str(c) for c in self.coords) + ")"


@dataclass(frozen=True)
class Splitting:
    eigenvalues: tuple[float, ...]
    eigenvectors: tuple[tuple[float, ...], ...]
    bundle_labels: tuple[str, ...]
    unstable_rate: float

    def index(self, label: str) -> int:
        return self.bundle_labels.index(label)

    def rate(self, label: str) -> float:
        return abs(self.eigenvalues[self.index(label)])

    @property
    def unstable_direction(self) -> np.ndarray:
        return np.array(self.eigenvectors[self.index("unstable")])

    @property
    def log_unstable_rate(self) -> float:
        return math.log(self.unstable_rate)


@dataclass(frozen=True)
class ToralAutomorphism:
    """The torus map induced by ``matrix ** stride``.

    ``stride > 1`` represents an iterate ``f**stride`` of the primitive map
    while keeping every orbit and leaf computation expressed in steps of the
    primitive map, so identities between ``f`` and its powers are exact.
    ``center_may_expand`` selects the splitting of an inverse map, whose
    middle eigenvalue is expanding but still labelled center.
    """

    matrix: Matrix
    stride: int = 1
    center_may_expand: bool = False
    name: str = field(default="", compare=False)

    @property
    def dim(self) -> int:
        return len(self.matrix)

    @property
    def det_sign(self) -> int:
        return _det(self.matrix) ** self.stride

    @cached_property
    def effective_matrix(self) -> Matrix:
        return matrix_power(self.matrix, self.stride)

    @cached_property
    def root_splitting(self) -> Splitting:
        return compute_splitting(replace(self, stride=1))

    @cached_property
    def splitting(self) -> Splitting:
        return compute_splitting(self)

    @property
    def log_rate(self) -> float:
        """log of the unstable rate of the primitive map (per primitive step)."""
        return self.root_splitting.log_unstable_rate

    @property
    def direction(self) -> np.ndarray:
        return self.root_splitting.unstable_direction

    @property
    def unstable_sign(self) -> int:
        """Sign of the unstable eigenvalue of the primitive map; leaves flip when -1."""
        return -1 if self.root_splitting.eigenvalues[-1] < 0 else 1

    def power(self, m: int) -> "ToralAutomorphism":
        if m < 1:
            raise ValueError("power must be a positive integer")
        label = f"{self.name}^{self.stride * m}" if self.name else ""
        return replace(self, stride=self.stride * m, name=label)

    def inverse(self) -> "ToralAutomorphism":
        """``f**-1`` with the splitting whose unstable bundle is ``E^s`` of f."""
        inv = integer_inverse(self.matrix)
        return ToralAutomorphism(inv, self.stride, center_may_expand=self.dim == 3,
                                 name=f"{self.name}:inverse" if self.name else "")

    def __str__(self) -> str:
        return self.name or f"matrix:{[x for row in self.matrix for x in row]}"


def make_toral_automorphism(matrix, name: str = "") -> ToralAutomorphism:
    rows = tuple(tuple(int(x) for x in row) for row in matrix)
    d = len(rows)
    if any(len(r) != d for r in rows):
        raise UnsupportedDimension("matrix must be square")
    if d not in (2, 3):
        raise UnsupportedDimension(f"dimension {d} not supported (need 2 or 3)")
    for row, orig in zip(rows, matrix):
        if any(int(x) != x for x in orig):
            raise ValueError("matrix entries must be integers")
    det = _det(rows)
    if abs(det) != 1:
        raise NotUnimodular(f"|det| = {abs(det)} != 1")
    return ToralAutomorphism(rows, name=name)


def compute_splitting(T: ToralAutomorphism) -> Splitting:
    roots = real_roots(characteristic_polynomial(T.matrix))
    order = sorted(range(len(roots)), key=lambda i: abs(roots[i]))
    roots = [roots[i] for i in order]
    moduli = [abs(r) for r in roots]
    if any(b - a <= ROOT_TOL for a, b in zip(moduli, moduli[1:])):
        raise ComplexSpectrum("eigenvalue moduli are not distinct")
    if moduli[-1] <= 1.0:
        raise NoUnstableDirection("no eigenvalue of modulus > 1")
    if moduli[-2] > 1.0 and not (T.center_may_expand and T.dim == 3):
        raise MultipleUnstable("more than one expanding eigenvalue")
    vectors = [_null_vector(T.matrix, r) for r in roots]
    a = np.array(T.matrix, dtype=float)
    for r, v in zip(roots, vectors):
        if np.linalg.norm(a @ v - r * v) > EIGEN_RESIDUAL_TOL:
            raise ComplexSpectrum("eigenvector residual above tolerance")
    labels = ("stable", "unstable") if T.dim == 2 else ("stable", "center", "unstable")
    s = T.stride
    eigenvalues = tuple(r ** s for r in roots)
    return Splitting(
        eigenvalues=eigenvalues,
        eigenvectors=tuple(tuple(float(x) for x in v) for v in vectors),
        bundle_labels=labels,
        unstable_rate=abs(eigenvalues[-1]),
    )


def apply(T: ToralAutomorphism, x: TorusPoint, k: int) -> TorusPoint:
    """Exact ``f**k (x)`` reduced mod 1; negative ``k`` iterates the inverse."""
    if k == 0:
        return x
    m = matrix_power(T.matrix, k * T.stride)
    q = lcm(*(c.denominator for c in x.coords))
    nums = [c.numerator * (q // c.denominator) for c in x.coords]
    out = tuple(Fraction(sum(mij * nj for mij, nj in zip(row, nums)) % q, q) for row in m)
    return TorusPoint(out)


def unstable_jacobian(T: ToralAutomorphism, x: TorusPoint | None = None) -> float:
    """Expansion factor of ``f`` along the unstable leaf; constant for linear maps."""
    return T.splitting.unstable_rate


# ---------------------------------------------------------------------------
# named examples and spec strings
# ---------------------------------------------------------------------------

def cat2() -> ToralAutomorphism:
    return make_toral_automorphism([[2, 1], [1, 1]], name="cat2")


def paper3(k0: int = 5) -> ToralAutomorphism:
    """The 3-torus family ``[[0,0,1],[0,1,-1],[-1,-1,k0]]`` (real spectrum for k0 >= 5)."""
    return make_toral_automorphism([[0, 0, 1], [0, 1, -1], [-1, -1, k0]],
                                   name=f"paper3:k0={k0}")


REGISTRY = {"cat2": cat2, "paper3": paper3}

_MATRIX_RE = re.compile(r"^matrix:\[([^\]]*)\](.*)$")


def system_from_spec(spec: str) -> ToralAutomorphism:
    """Parse ``cat2``, ``paper3:k0=5``, ``matrix:[2,1,1,1]`` with optional
    ``:inverse`` and ``:power=m`` suffixes."""
    spec = spec.strip()
    m = _MATRIX_RE.match(spec)
    if m:
        try:
            flat = [int(tok) for tok in m.group(1).split(",") if tok.strip()]
        except ValueError as exc:
            raise ValueError(f"bad matrix entries in {spec!r}") from exc
        d = math.isqrt(len(flat))
        if d * d != len(flat):
            raise UnsupportedDimension(f"{len(flat)} entries do not form a square matrix")
        T = make_toral_automorphism([flat[i * d:(i + 1) * d] for i in range(d)],
                                    name=f"matrix:[{m.group(1)}]")
        mods = [p for p in m.group(2).split(":") if p]
    else:
        head, *mods = spec.split(":")
        if head not in REGISTRY:
            raise ValueError(f"unknown system {head!r}; known: {sorted(REGISTRY)} or matrix:[...]")
        kwargs = {}
        rest = []
        for part in mods:
            if part.startswith("k0="):
                kwargs["k0"] = int(part[3:])
            else:
                rest.append(part)
        mods = rest
        T = REGISTRY[head](**kwargs)
    for part in mods:
        if part == "inverse":
            T = T.inverse()
        elif part.startswith("power="):
            T = T.power(int(part[6:]))
        else:
            raise ValueError(f"unknown system modifier {part!r}")
    return T
