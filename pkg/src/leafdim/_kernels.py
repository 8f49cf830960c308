"""Compiled inner loop of the greedy leaf cover."""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def greedy_sweep(bases, ratios, v, starts, ends, m, rho, mu, max_count, rec_lo, rec_hi):
    """Greedy left-to-right cover of a union of parameter intervals.

    Parameters are in top-level units ``tau``: the point with parameter
    ``tau`` sits at ``bases[k] + tau * ratios[k] * v`` (mod 1) at checked
    level ``k``. Each piece starts at the leftmost uncovered point and is
    extended to the largest end for which, at every checked level, every
    coordinate projection stays inside one axis-interval
    ``(i + 1/2 -+ rho/2) / m`` of the inflated grid. Since the cover is a
    product of axis-intervals, axes can be treated independently.

    Returns the number of pieces, or -1 once ``max_count`` is exceeded.
    Piece endpoints are written to ``rec_lo``/``rec_hi`` while they fit.
    """
    half = 0.5 * rho
    n_int = starts.shape[0]
    if n_int == 0:
        return 0
    d = v.shape[0]
    K = bases.shape[0]
    nrec = rec_lo.shape[0]
    idx = 0
    pos = starts[0]
    count = 0
    while True:
        reach = np.inf
        for k in range(K):
            r = ratios[k]
            for j in range(d):
                vj = v[j] * r
                if vj == 0.0:
                    continue
                p = (bases[k, j] + pos * vj) * m
                if vj > 0.0:
                    i = math.ceil(p - 0.5 + half) - 1
                    wall = i + 0.5 + half
                else:
                    i = math.floor(p - 0.5 - half) + 1
                    wall = i + 0.5 - half
                cand = pos + (wall - p) / (m * vj)
                if cand < reach:
                    reach = cand
        end = reach - mu
        if count < nrec:
            rec_lo[count] = pos
            rec_hi[count] = end
        count += 1
        if count > max_count:
            return -1
        while idx < n_int and ends[idx] <= end:
            idx += 1
        if idx == n_int:
            return count
        pos = starts[idx] if starts[idx] > end else end
