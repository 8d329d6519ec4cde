"""Heuristic generation of tight Bell inequalities.

Two walks over the local polytope, both seeded by a known facet:

* shelling: for each vertex, the first facet through it that a ray from the
  polytope's centre towards the seed facet crosses (one exact LP per vertex);
* slicing: lower the seed's bound, take the hull of the vertices above the
  cut, and keep those hull facets that are valid for the whole polytope.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator

from .core import (
    BellInequality,
    DeterministicVertex,
    InvalidInequality,
    affine_rank,
    canonical_form,
    canonical_key,
    classical_bound,
    is_tight,
    vertex_values,
)
from .solvers.exact import integerize, solve_rational
from .solvers.hull import MAX_POINTS, HullError, double_description
from .solvers.lp import LpError, simplex_standard

logger = logging.getLogger(__name__)

JITTER_SCALE = Fraction(1, 10 ** 9)


def positivity_facet(scenario):
    """``-p_A1B1 <= 0``; every trivial facet of the local polytope is equivalent to it."""
    coeffs = [0] * scenario.dim
    coeffs[scenario.m_A + scenario.m_B] = -1
    return BellInequality.from_vector(scenario, coeffs, 0, "positivity")


_TRIVIAL_CACHE = {}


def trivial_keys(scenario):
    if scenario not in _TRIVIAL_CACHE:
        _TRIVIAL_CACHE[scenario] = {canonical_key(positivity_facet(scenario))}
    return _TRIVIAL_CACHE[scenario]


def is_trivial(ineq):
    return canonical_key(ineq) in trivial_keys(ineq.scenario)


@dataclass
class ShellingState:
    """Shelling line geometry in coordinates scaled by 4 and centred on the vertex centroid."""

    seed_facet: BellInequality
    vertices: np.ndarray = field(repr=False)
    centered: np.ndarray = field(repr=False)
    direction: list = field(repr=False)
    discovered: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_seed(cls, seed):
        sc = seed.scenario
        V = sc.vertex_array()
        # centroid: 1/2 on marginals, 1/4 on joints; scaled by 4 it is integral
        center4 = np.array([2] * (sc.m_A + sc.m_B) + [1] * (sc.m_A * sc.m_B), dtype=np.int64)
        Q = 4 * V - center4[None, :]
        values = vertex_values(seed)
        on_facet = [i for i, val in enumerate(values) if val == seed.b0]
        if not on_facet:
            raise InvalidInequality("seed facet is not attained")
        direction = [int(x) for x in Q[on_facet].sum(axis=0)]
        if not any(direction):
            raise InvalidInequality("degenerate shelling direction")
        state = cls(seed, V, Q, direction)
        state.discovered[canonical_key(seed)] = seed
        return state

    @property
    def center4(self):
        sc = self.seed_facet.scenario
        return [2] * (sc.m_A + sc.m_B) + [1] * (sc.m_A * sc.m_B)


def _jitter_direction(dim):
    # fixed pseudo-random integer direction; reproducible across runs
    rng = np.random.default_rng(20080915)
    return [int(v) for v in rng.integers(-7, 8, size=dim)]


def _first_facet_lp(Q, v_index, direction):
    """Minimize b0' s.t. b.q_v = b0', b.q_w <= b0', b.a = 1, solved through its dual.

    Returns ``(b, b0')`` exactly.
    """
    n_vert, d = Q.shape
    q_v = [int(x) for x in Q[v_index]]
    others = [w for w in range(n_vert) if w != v_index]
    # dual columns: lambda_v+, lambda_v-, lambda_a+, lambda_a-, mu_w
    cols = [q_v + [-1], [-x for x in q_v] + [1], list(direction) + [0], [-Fraction(x) for x in direction] + [0]]
    for w in others:
        cols.append([-int(x) for x in Q[w]] + [1])
    A = [[col[r] for col in cols] for r in range(d + 1)]
    b = [0] * d + [1]
    cost = [0, 0, 1, -1] + [0] * len(others)
    res = simplex_standard(cost, A, b)
    if len(res.basis) != d + 1:
        raise LpError("dual basis lost rank")
    # complementary slackness: every basic dual column is a tight primal row
    rows = [cols[j] for j in res.basis]
    rhs = [cost[j] for j in res.basis]
    z = solve_rational(rows, rhs)
    return z[:d], z[d]


def shelling_step(state, vertex):
    """The first facet through ``vertex`` along the shelling ray, or None.

    ``vertex`` is a ``DeterministicVertex`` or an index into the vertex array.
    """
    seed = state.seed_facet
    sc = seed.scenario
    if isinstance(vertex, DeterministicVertex):
        bits = vertex.alpha + vertex.beta
        idx = int("".join(map(str, bits)), 2)
    else:
        idx = int(vertex)
    point = [int(x) for x in state.vertices[idx]]
    if sum(c * p for c, p in zip(seed.vector, point)) == seed.b0:
        return seed
    direction = list(state.direction)
    for attempt in range(2):
        try:
            b, b0c = _first_facet_lp(state.centered, idx, direction)
            break
        except LpError:
            if attempt == 1:
                logger.debug("shelling LP failed twice at vertex %d", idx)
                return None
            jit = _jitter_direction(sc.dim)
            direction = [Fraction(a) + JITTER_SCALE * j for a, j in zip(direction, jit)]
    # back to probability coordinates: b.(4p - 4c) <= b0'  ->  4b.p <= b0' + b.(4c)
    rhs = b0c + sum(bi * ci for bi, ci in zip(b, state.center4))
    ints, _ = integerize([4 * bi for bi in b] + [rhs])
    ineq = BellInequality.from_vector(sc, ints[:-1], ints[-1])
    bound, _ = classical_bound(ineq)
    if bound != ineq.b0:
        return None
    if not is_tight(ineq):
        return None
    return ineq


def shelling_run(seed, max_rounds=1, vertices=None, keep_trivial=False, max_seeds=None):
    """Iterate shelling from ``seed`` until no new classes appear or ``max_rounds`` is hit.

    Returns a dict ``canonical_key -> canonical inequality`` (seed class included).
    """
    if not is_tight(seed):
        raise InvalidInequality("shelling needs a tight seed")
    found = {canonical_key(seed): canonical_form(seed)}
    frontier = [seed]
    for rnd in range(max_rounds):
        fresh = []
        for facet in frontier[:max_seeds] if max_seeds else frontier:
            state = ShellingState.from_seed(facet)
            idxs = range(len(state.vertices)) if vertices is None else vertices
            for idx in idxs:
                out = shelling_step(state, idx)
                if out is None:
                    continue
                key = canonical_key(out)
                if key in found:
                    continue
                if not keep_trivial and key in trivial_keys(out.scenario):
                    continue
                found[key] = canonical_form(out)
                fresh.append(out)
        logger.info("shelling round %d: %d new classes", rnd + 1, len(fresh))
        if not fresh:
            break
        frontier = fresh
    return found


@dataclass
class SliceSpec:
    base: BellInequality
    b0_star: Fraction
    kept: list = field(repr=False)

    @classmethod
    def build(cls, base, b0_star="auto", capacity=MAX_POINTS):
        values = vertex_values(base)
        pts = [tuple(int(x) for x in v) for v in base.scenario.vertex_array()]
        if b0_star == "auto":
            b0_star = auto_cut(base, capacity)
        b0_star = Fraction(b0_star)
        kept = [p for p, val in zip(pts, values) if val >= b0_star]
        return cls(base, b0_star, kept)


def auto_cut(base, capacity=MAX_POINTS):
    """Largest cut value whose kept vertex set is full-dimensional and within capacity."""
    values = vertex_values(base)
    pts = [tuple(int(x) for x in v) for v in base.scenario.vertex_array()]
    d = base.scenario.dim
    for t in sorted(set(values), reverse=True):
        kept = [p for p, val in zip(pts, values) if val >= t]
        if len(kept) > capacity:
            break
        if len(kept) > d and affine_rank(kept) == d:
            return t
    raise HullError(f"no cut keeps a full-dimensional vertex set within {capacity} points")


def slice_facets(spec, capacity=MAX_POINTS, keep_trivial=False):
    """Tight inequalities of the full polytope among the facets of the sliced polytope."""
    sc = spec.base.scenario
    if affine_rank(spec.kept) != sc.dim:
        raise HullError("sliced vertex set is not full-dimensional")
    facets = double_description(spec.kept, capacity=capacity)
    found = {}
    for b, b0 in facets:
        ineq = BellInequality.from_vector(sc, b, b0)
        bound, _ = classical_bound(ineq)
        if bound > ineq.b0:
            continue
        if bound < ineq.b0 or not is_tight(ineq):
            continue
        key = canonical_key(ineq)
        if key in found or (not keep_trivial and key in trivial_keys(sc)):
            continue
        found[key] = canonical_form(ineq)
    return found


def slicing_run(seed, b0_star="auto", max_rounds=1, capacity=MAX_POINTS, keep_trivial=False):
    found = {canonical_key(seed): canonical_form(seed)}
    frontier = [seed]
    for rnd in range(max_rounds):
        fresh = []
        for facet in frontier:
            try:
                spec = SliceSpec.build(facet, b0_star, capacity)
                out = slice_facets(spec, capacity, keep_trivial)
            except HullError as exc:
                logger.info("slice skipped: %s", exc)
                continue
            for key, ineq in out.items():
                if key not in found:
                    found[key] = ineq
                    fresh.append(ineq)
        logger.info("slicing round %d: %d new classes", rnd + 1, len(fresh))
        if not fresh:
            break
        frontier = fresh
        b0_star = "auto"
    return found


class FacetGenerator(BaseEstimator):
    """Estimator front end for both generation walks.

    ``fit(seed)`` leaves the discovered classes in ``inequalities_`` (canonical
    forms, seed class first).
    """

    def __init__(self, method="shelling", max_rounds=1, b0_star="auto", capacity=MAX_POINTS,
                 keep_trivial=False, vertices=None):
        self.method = method
        self.max_rounds = max_rounds
        self.b0_star = b0_star
        self.capacity = capacity
        self.keep_trivial = keep_trivial
        self.vertices = vertices

    def fit(self, seed, y=None):
        if self.method == "shelling":
            found = shelling_run(seed, self.max_rounds, self.vertices, self.keep_trivial)
        elif self.method == "slicing":
            found = slicing_run(seed, self.b0_star, self.max_rounds, self.capacity, self.keep_trivial)
        else:
            raise ValueError(f"unknown generation method {self.method!r}")
        self.inequalities_ = list(found.values())
        self.keys_ = list(found.keys())
        return self

    def transform(self, seed):
        return self.fit(seed).inequalities_
