"""Facet enumeration of a convex hull by the double description method.

Points are homogenised to constraints ``h0 - h.p >= 0``; the extreme rays of
that cone are the facets ``h.p <= h0`` of the hull. Rays are integer
vectors, adjacency is decided combinatorially from incidence sets.
"""
from fractions import Fraction
from functools import reduce
from math import gcd

import numpy as np

from .exact import integer_rank, integerize, solve_rational

MAX_POINTS = 120


class HullError(ValueError):
    pass


class HullCapacityError(HullError):
    def __init__(self, n_points, capacity):
        super().__init__(f"{n_points} points exceed the hull capacity {capacity}")
        self.n_points = n_points
        self.capacity = capacity


def _normalize_rows(R):
    out = []
    for r in R:
        g = reduce(gcd, (int(v) for v in r), 0) or 1
        out.append([int(v) // g for v in r])
    return np.array(out, dtype=object)


def _initial_rows(A):
    """Indices of dim(A) linearly independent rows, greedily in order."""
    chosen = []
    rank = 0
    for i in range(len(A)):
        r = integer_rank([list(A[j]) for j in chosen + [i]])
        if r > rank:
            chosen.append(i)
            rank = r
            if rank == A.shape[1]:
                break
    return chosen


def double_description(points, capacity=MAX_POINTS):
    """All facets of ``conv(points)`` as ``(b, b0)`` integer pairs with ``b.p <= b0``.

    Points must be integer or rational and affinely span their ambient space.
    """
    pts = [list(p) for p in points]
    if len(pts) > capacity:
        raise HullCapacityError(len(pts), capacity)
    if not pts:
        raise HullError("no points")
    d = len(pts[0])
    den = 1
    for p in pts:
        for v in p:
            den = den * Fraction(v).denominator // gcd(den, Fraction(v).denominator)
    A = _normalize_rows(np.array([[den] + [-int(Fraction(v) * den) for v in p] for p in pts], dtype=object))
    init = _initial_rows(A)
    if len(init) < d + 1:
        raise HullError(f"points span only {len(init) - 1} of {d} dimensions")
    # rays of the simplicial start cone: columns of the inverse of the chosen rows
    rays = []
    sub = [list(A[i]) for i in init]
    for j in range(d + 1):
        rhs = [int(k == j) for k in range(d + 1)]
        sol = solve_rational(sub, rhs)
        ints, _ = integerize(sol)
        rays.append(ints)
    R = np.array(rays, dtype=object)
    processed = list(init)
    inc = (A[processed] @ R.T == 0).T  # rays x processed rows
    init_set = set(init)
    for i in (k for k in range(len(pts)) if k not in init_set):
        a = A[i]
        s = R @ a
        pos = np.nonzero(s > 0)[0]
        neg = np.nonzero(s < 0)[0]
        zer = np.nonzero(s == 0)[0]
        new_rays = []
        new_inc = []
        if len(neg) and len(pos):
            inc_int = inc.astype(np.int32)
            for p in pos:
                common = inc[p][None, :] & inc[neg]
                counts = common.sum(axis=1)
                cand = np.nonzero(counts >= d - 1)[0]
                if not len(cand):
                    continue
                contains = common[cand].astype(np.int32) @ inc_int.T  # candidates x rays
                n_super = (contains == counts[cand][:, None]).sum(axis=1)
                for c in cand[n_super == 2]:
                    n = neg[c]
                    new_rays.append(s[p] * R[n] - s[n] * R[p])
                    new_inc.append(np.append(common[c], True))
        keep = np.concatenate([pos, zer]).astype(int)
        R_parts = [R[keep]]
        inc_parts = [np.hstack([inc[keep], (s[keep] == 0)[:, None]])]
        if new_rays:
            R_parts.append(_normalize_rows(np.array(new_rays, dtype=object)))
            inc_parts.append(np.array(new_inc, dtype=bool))
        R = np.vstack(R_parts)
        inc = np.vstack(inc_parts)
        processed.append(i)
    # ray (h0, h) encodes h.p <= h0
    return [(tuple(int(v) for v in r[1:]), int(r[0])) for r in R]
