"""Scenarios, Bell inequalities, deterministic strategies and the relabelling group.

Everything on the classical side is exact: coefficients are stored as
``fractions.Fraction`` and all bounds and ranks are computed with integers.
Correlation points are ordered ``(p_A1..p_Am, p_B1..p_Bm, p_A1B1, p_A1B2, ...)``
with the joint block row-major in Bob's index.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations, product
from math import factorial

import numpy as np

from .solvers.exact import integer_rank, integerize

MAX_ENUM_SETTINGS = 26
MAX_ORBIT = 50_000_000


class BellError(ValueError):
    """Base class for invalid inputs to the classical-side routines."""


class DimensionMismatch(BellError):
    pass


class ScenarioTooLarge(BellError):
    pass


class InvalidInequality(BellError):
    pass


class IllegalSymmetry(BellError):
    pass


@dataclass(frozen=True)
class Scenario:
    """Two parties, ``m_A`` and ``m_B`` two-outcome settings."""

    m_A: int
    m_B: int

    def __post_init__(self):
        if int(self.m_A) < 1 or int(self.m_B) < 1:
            raise BellError(f"need at least one setting per party, got {self.m_A}, {self.m_B}")

    @property
    def dim(self):
        return self.m_A + self.m_B + self.m_A * self.m_B

    @property
    def label(self):
        return f"{self.m_A}{self.m_B}22"

    @classmethod
    def from_label(cls, label):
        label = str(label).strip()
        if label.endswith("22") and len(label) == 4:
            return cls(int(label[0]), int(label[1]))
        raise BellError(f"cannot read scenario label {label!r}")

    def n_vertices(self):
        return 2 ** (self.m_A + self.m_B)

    def vertices(self):
        """All deterministic vertices, Alice's bits varying slowest."""
        for bits in product((0, 1), repeat=self.m_A + self.m_B):
            yield DeterministicVertex(bits[: self.m_A], bits[self.m_A:])

    def vertex_array(self):
        """Integer array (2**(m_A+m_B), d) of vertex coordinates, same order as ``vertices``."""
        x = _bit_table(self.m_A)
        y = _bit_table(self.m_B)
        na, nb = len(x), len(y)
        xs = np.repeat(x, nb, axis=0)
        ys = np.tile(y, (na, 1))
        joint = (xs[:, :, None] * ys[:, None, :]).reshape(na * nb, -1)
        return np.hstack([xs, ys, joint])


def _bit_table(m):
    idx = np.arange(2 ** m)
    return ((idx[:, None] >> np.arange(m - 1, -1, -1)[None, :]) & 1).astype(np.int64)


@dataclass(frozen=True)
class DeterministicVertex:
    alpha: tuple
    beta: tuple

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(int(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(int(b) for b in self.beta))

    @property
    def scenario(self):
        return Scenario(len(self.alpha), len(self.beta))

    def point(self):
        joint = tuple(a * b for a in self.alpha for b in self.beta)
        return self.alpha + self.beta + joint


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10 ** 12)
    return Fraction(x)


@dataclass(frozen=True)
class BellInequality:
    """``b_A.p_A + b_B.p_B + sum b_AB p_AB <= b0`` with rational coefficients."""

    scenario: Scenario
    b_A: tuple
    b_B: tuple
    b_AB: tuple
    b0: Fraction = Fraction(0)
    name: str = field(default="", compare=False)

    def __post_init__(self):
        sc = self.scenario
        b_A = tuple(_as_fraction(v) for v in self.b_A)
        b_B = tuple(_as_fraction(v) for v in self.b_B)
        b_AB = tuple(tuple(_as_fraction(v) for v in row) for row in self.b_AB)
        if len(b_A) != sc.m_A or len(b_B) != sc.m_B:
            raise DimensionMismatch("marginal coefficient lengths do not match the scenario")
        if len(b_AB) != sc.m_A or any(len(r) != sc.m_B for r in b_AB):
            raise DimensionMismatch("joint coefficient table does not match the scenario")
        object.__setattr__(self, "b_A", b_A)
        object.__setattr__(self, "b_B", b_B)
        object.__setattr__(self, "b_AB", b_AB)
        object.__setattr__(self, "b0", _as_fraction(self.b0))

    @classmethod
    def from_vector(cls, scenario, coeffs, b0=0, name=""):
        coeffs = list(coeffs)
        if len(coeffs) != scenario.dim:
            raise DimensionMismatch(f"expected {scenario.dim} coefficients, got {len(coeffs)}")
        ma, mb = scenario.m_A, scenario.m_B
        joint = coeffs[ma + mb:]
        rows = [joint[i * mb:(i + 1) * mb] for i in range(ma)]
        return cls(scenario, coeffs[:ma], coeffs[ma:ma + mb], rows, b0, name)

    @property
    def vector(self):
        return self.b_A + self.b_B + tuple(v for row in self.b_AB for v in row)

    def integer_form(self):
        """Coprime integer coefficients ``(vector, b0)`` of a positive multiple."""
        ints, _ = integerize(self.vector + (self.b0,))
        return ints[:-1], ints[-1]

    def normalized(self):
        vec, b0 = self.integer_form()
        return BellInequality.from_vector(self.scenario, vec, b0, self.name)

    def with_name(self, name):
        return BellInequality(self.scenario, self.b_A, self.b_B, self.b_AB, self.b0, name)

    def with_bound(self, b0):
        return BellInequality(self.scenario, self.b_A, self.b_B, self.b_AB, b0, self.name)

    def float_arrays(self):
        """``(b_A, b_B, b_AB, b0)`` as float numpy arrays for the quantum modules."""
        return (
            np.array([float(v) for v in self.b_A]),
            np.array([float(v) for v in self.b_B]),
            np.array([[float(v) for v in r] for r in self.b_AB]).reshape(self.scenario.m_A, self.scenario.m_B),
            float(self.b0),
        )

    def lifted(self, scenario):
        """Embed into a scenario with at least as many settings (new coefficients zero)."""
        if scenario.m_A < self.scenario.m_A or scenario.m_B < self.scenario.m_B:
            raise DimensionMismatch("cannot lift into a smaller scenario")
        b_A = self.b_A + (Fraction(0),) * (scenario.m_A - self.scenario.m_A)
        b_B = self.b_B + (Fraction(0),) * (scenario.m_B - self.scenario.m_B)
        pad = (Fraction(0),) * (scenario.m_B - self.scenario.m_B)
        rows = [r + pad for r in self.b_AB]
        rows += [(Fraction(0),) * scenario.m_B] * (scenario.m_A - self.scenario.m_A)
        return BellInequality(scenario, b_A, b_B, rows, self.b0, self.name)

    def __str__(self):
        coeffs = " ".join(str(v) for v in self.vector)
        label = f"{self.name} " if self.name else ""
        return f"{label}[{self.scenario.label}] {coeffs} <= {self.b0}"


def evaluate(ineq, pt):
    """Left-hand side of the inequality at a correlation point (b0 not subtracted)."""
    pt = tuple(pt.point()) if isinstance(pt, DeterministicVertex) else tuple(pt)
    if len(pt) != ineq.scenario.dim:
        raise DimensionMismatch(f"point has {len(pt)} entries, scenario needs {ineq.scenario.dim}")
    return sum((c * p for c, p in zip(ineq.vector, pt)), Fraction(0))


def _int_tables(ineq):
    ints, scale = integerize(ineq.vector + (ineq.b0,))
    ma, mb = ineq.scenario.m_A, ineq.scenario.m_B
    arr = np.array(ints, dtype=object if max(map(abs, ints)) > 2 ** 40 else np.int64)
    b_A = arr[:ma]
    b_B = arr[ma:ma + mb]
    b_AB = arr[ma + mb:-1].reshape(ma, mb)
    return b_A, b_B, b_AB, arr[-1], scale


def _check_enumerable(scenario):
    if scenario.m_A + scenario.m_B > MAX_ENUM_SETTINGS:
        raise ScenarioTooLarge(
            f"{scenario.label}: 2^{scenario.m_A + scenario.m_B} vertices exceed the enumeration guard"
        )


def classical_bound(ineq):
    """Exact maximum over deterministic strategies and one maximizing vertex.

    Bob's best response is separable once Alice's bits are fixed, so only
    Alice's 2**m_A assignments are enumerated explicitly.
    """
    sc = ineq.scenario
    _check_enumerable(sc)
    b_A, b_B, b_AB, _, scale = _int_tables(ineq)
    swap = sc.m_A > sc.m_B
    if swap:
        b_A, b_B, b_AB = b_B, b_A, b_AB.T
    x = _bit_table(len(b_A))
    resp = b_B[None, :] + x @ b_AB
    vals = x @ b_A + np.where(resp > 0, resp, 0).sum(axis=1)
    k = int(np.argmax(vals))
    best_x = tuple(int(v) for v in x[k])
    best_y = tuple(int(v > 0) for v in resp[k])
    value = Fraction(int(vals[k])) / scale
    vertex = DeterministicVertex(best_y, best_x) if swap else DeterministicVertex(best_x, best_y)
    return value, vertex


def vertex_values(ineq):
    """Exact values (as Fractions) at all vertices, in ``Scenario.vertices`` order."""
    sc = ineq.scenario
    _check_enumerable(sc)
    b_A, b_B, b_AB, _, scale = _int_tables(ineq)
    x = _bit_table(sc.m_A)
    y = _bit_table(sc.m_B)
    table = (x @ b_A)[:, None] + (y @ b_B)[None, :] + x @ b_AB @ y.T
    return [Fraction(int(v)) / scale for v in table.ravel()]


def saturating_vertices(ineq):
    """Vertices on which the inequality holds with equality."""
    values = vertex_values(ineq)
    return [v for v, val in zip(ineq.scenario.vertices(), values) if val == ineq.b0]


def affine_rank(points):
    """Dimension of the affine hull of a set of integer points."""
    points = [tuple(p) for p in points]
    if not points:
        return -1
    base = points[0]
    diffs = [[a - b for a, b in zip(p, base)] for p in points[1:]]
    return integer_rank(diffs) if diffs else 0


def is_tight(ineq):
    """True iff the inequality is valid, attained, and its saturating set spans d-1 dimensions."""
    bound, _ = classical_bound(ineq)
    if bound != ineq.b0:
        state = "violated" if bound > ineq.b0 else "never attained"
        raise InvalidInequality(f"classical maximum {bound} differs from b0={ineq.b0} ({state})")
    pts = [v.point() for v in saturating_vertices(ineq)]
    return affine_rank(pts) == ineq.scenario.dim - 1


@dataclass(frozen=True)
class SymmetryOp:
    """Outcome flips, then setting permutations, then (optionally) party exchange.

    ``perm_A[k]`` is the old index of the setting that becomes Alice's setting ``k``.
    """

    party_swap: bool = False
    perm_A: tuple = None
    perm_B: tuple = None
    flip_A: tuple = None
    flip_B: tuple = None

    @classmethod
    def identity(cls, scenario):
        return cls(False, tuple(range(scenario.m_A)), tuple(range(scenario.m_B)),
                   (0,) * scenario.m_A, (0,) * scenario.m_B)

    @classmethod
    def random(cls, scenario, rng):
        swap = bool(scenario.m_A == scenario.m_B and rng.integers(2))
        return cls(
            swap,
            tuple(int(i) for i in rng.permutation(scenario.m_A)),
            tuple(int(i) for i in rng.permutation(scenario.m_B)),
            tuple(int(b) for b in rng.integers(0, 2, scenario.m_A)),
            tuple(int(b) for b in rng.integers(0, 2, scenario.m_B)),
        )


def apply_symmetry(ineq, op):
    sc = ineq.scenario
    perm_A = tuple(range(sc.m_A)) if op.perm_A is None else tuple(op.perm_A)
    perm_B = tuple(range(sc.m_B)) if op.perm_B is None else tuple(op.perm_B)
    flip_A = (0,) * sc.m_A if op.flip_A is None else tuple(op.flip_A)
    flip_B = (0,) * sc.m_B if op.flip_B is None else tuple(op.flip_B)
    if sorted(perm_A) != list(range(sc.m_A)) or sorted(perm_B) != list(range(sc.m_B)):
        raise IllegalSymmetry("permutations do not match the scenario")
    if len(flip_A) != sc.m_A or len(flip_B) != sc.m_B:
        raise IllegalSymmetry("flip vectors do not match the scenario")
    if op.party_swap and sc.m_A != sc.m_B:
        raise IllegalSymmetry("party exchange needs m_A == m_B")

    b_A, b_B, b_AB, b0 = list(ineq.b_A), list(ineq.b_B), [list(r) for r in ineq.b_AB], ineq.b0
    # substitute x_i = f_i + s_i x'_i, y_j = g_j + t_j y'_j
    s = [1 - 2 * f for f in flip_A]
    t = [1 - 2 * g for g in flip_B]
    const = sum(f * a for f, a in zip(flip_A, b_A)) + sum(g * b for g, b in zip(flip_B, b_B))
    const += sum(flip_A[i] * b_AB[i][j] * flip_B[j] for i in range(sc.m_A) for j in range(sc.m_B))
    new_A = [s[i] * (b_A[i] + sum(b_AB[i][j] * flip_B[j] for j in range(sc.m_B))) for i in range(sc.m_A)]
    new_B = [t[j] * (b_B[j] + sum(flip_A[i] * b_AB[i][j] for i in range(sc.m_A))) for j in range(sc.m_B)]
    new_AB = [[s[i] * t[j] * b_AB[i][j] for j in range(sc.m_B)] for i in range(sc.m_A)]
    new_b0 = b0 - const

    new_A = [new_A[k] for k in perm_A]
    new_B = [new_B[k] for k in perm_B]
    new_AB = [[new_AB[perm_A[i]][perm_B[j]] for j in range(sc.m_B)] for i in range(sc.m_A)]
    if op.party_swap:
        new_A, new_B = new_B, new_A
        new_AB = [list(col) for col in zip(*new_AB)]
    return BellInequality(sc, new_A, new_B, new_AB, new_b0, ineq.name)


def orbit_size(scenario):
    swap = 2 if scenario.m_A == scenario.m_B else 1
    return factorial(scenario.m_A) * factorial(scenario.m_B) * 2 ** (scenario.m_A + scenario.m_B) * swap


def _flip_orbit(b_A, b_B, b_AB, b0):
    """All outcome relabellings at once; arrays indexed (flipA, flipB, ...)."""
    ma, mb = len(b_A), len(b_B)
    fa = _bit_table(ma)
    fb = _bit_table(mb)
    s = 1 - 2 * fa
    t = 1 - 2 * fb
    const = (fa @ b_A)[:, None] + (fb @ b_B)[None, :] + fa @ b_AB @ fb.T
    xa = s[:, None, :] * (b_A[None, None, :] + (fb @ b_AB.T)[None, :, :])
    yb = t[None, :, :] * (b_B[None, None, :] + (fa @ b_AB)[:, None, :])
    jt = s[:, None, :, None] * t[None, :, None, :] * b_AB[None, None, :, :]
    return xa, yb, jt, b0 - const


def _lexmin_rows(rows):
    idx = np.arange(len(rows))
    for col in range(rows.shape[1]):
        vals = rows[idx, col]
        idx = idx[vals == vals.min()]
        if len(idx) == 1:
            break
    return rows[idx[0]]


def canonical_key(ineq):
    """Lexicographically smallest integer tuple ``(b_A, b_B, b_AB, b0)`` over the orbit."""
    sc = ineq.scenario
    if orbit_size(sc) > MAX_ORBIT:
        raise ScenarioTooLarge(f"orbit of size {orbit_size(sc)} too large to enumerate")
    b_A, b_B, b_AB, b0, _ = _int_tables(ineq)
    variants = [(b_A, b_B, b_AB)]
    if sc.m_A == sc.m_B:
        variants.append((b_B, b_A, b_AB.T))
    ma, mb = sc.m_A, sc.m_B
    perms_B = np.array(list(permutations(range(mb))))
    best = None
    for va, vb, vab in variants:
        xa, yb, jt, c0 = _flip_orbit(va, vb, vab, b0)
        nfa, nfb = c0.shape
        for pa in permutations(range(ma)):
            pa = list(pa)
            # rows: (flipA, flipB, permB)
            xa_p = xa[:, :, pa]
            xa_rows = np.broadcast_to(xa_p[:, :, None, :], (nfa, nfb, len(perms_B), ma))
            yb_rows = yb[:, :, perms_B]
            jt_rows = jt[:, :, pa, :][:, :, :, perms_B]  # (fa, fb, ma, nperm, mb)
            jt_rows = np.moveaxis(jt_rows, 3, 2).reshape(nfa, nfb, len(perms_B), ma * mb)
            c_rows = np.broadcast_to(c0[:, :, None, None], (nfa, nfb, len(perms_B), 1))
            rows = np.concatenate([xa_rows, yb_rows, jt_rows, c_rows], axis=3).reshape(-1, ma + mb + ma * mb + 1)
            cand = _lexmin_rows(rows)
            if best is None or tuple(cand) < tuple(best):
                best = cand
    return tuple(int(v) for v in best)


def canonical_form(ineq):
    key = canonical_key(ineq)
    return BellInequality.from_vector(ineq.scenario, key[:-1], key[-1], ineq.name)


def equivalent(a, b):
    return a.scenario == b.scenario and canonical_key(a) == canonical_key(b)


def relabel_to_zero_bound(ineq):
    """Equivalent inequality with classical bound zero, found by outcome flips only.

    The flip to the maximizing vertex moves that vertex to the origin; the
    resulting form has b0 == 0 whenever the origin saturates.
    """
    bound, vertex = classical_bound(ineq)
    ineq = ineq.with_bound(bound)
    op = SymmetryOp(False, None, None, vertex.alpha, vertex.beta)
    out = apply_symmetry(ineq, op)
    return out
