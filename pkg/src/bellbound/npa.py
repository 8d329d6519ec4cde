"""Moment-matrix upper bounds on the quantum value of a Bell expression.

Words are products of the ±1 observables ``a_i = 2A_i - 1`` and
``b_j = 2B_j - 1``. A word is stored canonically as a pair of index tuples
(Alice's part, Bob's part): letters of different parties commute and every
letter squares to one, so equal neighbours cancel.
"""
import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator

from .core import BellInequality
from .solvers.sdp import MAX_SIZE, SdpProblem, sdp_solve

MATCH_TOL = 1e-5


class LevelError(ValueError):
    pass


class CapacityError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Word:
    a_part: tuple = ()
    b_part: tuple = ()

    def __str__(self):
        s = "".join(f"a{i + 1}" for i in self.a_part) + "".join(f"b{j + 1}" for j in self.b_part)
        return s or "1"

    @property
    def length(self):
        return len(self.a_part) + len(self.b_part)


IDENTITY = Word()


def _reduce(seq):
    out = []
    for x in seq:
        if out and out[-1] == x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def canonicalize(word):
    """Accepts a ``Word`` or a sequence of letters like ``("a", 0)``/``("b", 1)``."""
    if isinstance(word, Word):
        return Word(_reduce(word.a_part), _reduce(word.b_part))
    a = [i for p, i in word if p == "a"]
    b = [j for p, j in word if p == "b"]
    return Word(_reduce(a), _reduce(b))


def adjoint(word):
    return Word(tuple(reversed(word.a_part)), tuple(reversed(word.b_part)))


def product(u, v):
    return Word(_reduce(u.a_part + v.a_part), _reduce(u.b_part + v.b_part))


def entry_word(u, v):
    """Representative of the class of entry (u, v): ``u^dagger v`` up to adjoint."""
    w = product(adjoint(u), v)
    return min(w, adjoint(w))


@dataclass(frozen=True)
class LevelSpec:
    patterns: tuple
    name: str = ""
    sample: float = None
    sample_seed: int = 0

    def __post_init__(self):
        pats = tuple(dict.fromkeys(("",) + tuple(self.patterns)))
        for p in pats:
            if not re.fullmatch(r"[AB]*", p):
                raise LevelError(f"bad word pattern {p!r}")
        object.__setattr__(self, "patterns", pats)
        if self.sample is not None and not 0 < self.sample <= 1:
            raise LevelError("sample fraction must lie in (0, 1]")

    def __str__(self):
        return self.name or "custom:" + ",".join(p or "1" for p in self.patterns)


_L1 = ("", "A", "B")
_L2 = _L1 + ("AA", "BB", "AB")
PRESETS = {
    "L1": _L1,
    "1a": _L1 + ("AB",),
    "L2": _L2,
    "2a_aab": _L2 + ("AAB",),
    "2a_abb": _L2 + ("ABB",),
    "2b": _L2 + ("AAB", "ABB"),
    "L3": _L2 + ("AAA", "BBB", "AAB", "ABB"),
}
ALIASES = {"1": "L1", "2": "L2", "3": "L3", "l1": "L1", "l2": "L2", "l3": "L3", "1A": "1a", "2A": "2a", "2B": "2b"}
# intermediate levels, ordered by inclusion
HIERARCHY = ("L1", "1a", "L2", "2a", "2b", "L3")


def parse_level(text, sample=None, sample_seed=0):
    """``L1``/``1a``/``L2``/``2a``/``2b``/``L3``, ``L2+AAB+ABB`` or ``custom:AAB,ABB``.

    ``2a`` yields two specs (the caller keeps the smaller bound).
    """
    t = str(text).strip()
    t = ALIASES.get(t, t)
    if t == "2a":
        return [LevelSpec(PRESETS["2a_aab"], "2a(aab)", sample, sample_seed),
                LevelSpec(PRESETS["2a_abb"], "2a(abb)", sample, sample_seed)]
    if t in PRESETS:
        return [LevelSpec(PRESETS[t], t, sample, sample_seed)]
    if t.startswith("custom:"):
        pats = [p.strip() for p in t[len("custom:"):].split(",") if p.strip()]
        pats = ["" if p == "1" else p for p in pats]
        return [LevelSpec(tuple(pats), "", sample, sample_seed)]
    if "+" in t:
        head, *extra = [p.strip() for p in t.split("+")]
        head = ALIASES.get(head, head)
        if head not in PRESETS or not extra:
            raise LevelError(f"unknown level {text!r}")
        extra = [p.upper() for p in extra]
        return [LevelSpec(PRESETS[head] + tuple(extra), t, sample, sample_seed)]
    raise LevelError(f"unknown level {text!r}")


def _pattern_words(scenario, pattern):
    na = pattern.count("A")
    nb = pattern.count("B")

    def seqs(m, k):
        for tup in itertools.product(range(m), repeat=k):
            if all(tup[i] != tup[i + 1] for i in range(k - 1)):
                yield tup

    for a in seqs(scenario.m_A, na):
        for b in seqs(scenario.m_B, nb):
            yield Word(a, b)


def generate_words(scenario, level):
    """Deterministic word list, identity first."""
    seen = {IDENTITY: None}
    base = set(PRESETS["L2"])
    rng = np.random.default_rng(level.sample_seed) if level.sample is not None else None
    for pat in level.patterns:
        words = [canonicalize(w) for w in _pattern_words(scenario, pat)]
        if rng is not None and pat not in base:
            keep = max(1, int(round(level.sample * len(words))))
            idx = sorted(rng.choice(len(words), size=keep, replace=False))
            words = [words[i] for i in idx]
        for w in words:
            seen.setdefault(w, None)
    return list(seen)


def bell_to_observables(ineq):
    """``(constant, alpha, beta, gamma)`` with value = const + alpha.<a> + beta.<b> + sum gamma_ij <a_i b_j>."""
    bA, bB, bAB = ineq.b_A, ineq.b_B, ineq.b_AB
    mA, mB = len(bA), len(bB)
    gamma = [[Fraction(bAB[i][j]) / 4 for j in range(mB)] for i in range(mA)]
    alpha = [Fraction(bA[i]) / 2 + sum(Fraction(bAB[i][j]) for j in range(mB)) / 4 for i in range(mA)]
    beta = [Fraction(bB[j]) / 2 + sum(Fraction(bAB[i][j]) for i in range(mA)) / 4 for j in range(mB)]
    const = sum(Fraction(v) for v in bA) / 2 + sum(Fraction(v) for v in bB) / 2 + \
        sum(Fraction(v) for row in bAB for v in row) / 4
    return const, alpha, beta, gamma


@dataclass
class MomentProblem:
    ineq: BellInequality
    level: LevelSpec
    words: list
    class_words: list
    class_map: np.ndarray = field(repr=False)
    objective: dict = field(repr=False)
    constant: Fraction = Fraction(0)

    @property
    def n_classes(self):
        return len(self.class_words)


def build_problem(ineq, level, capacity=MAX_SIZE):
    if isinstance(level, str):
        specs = parse_level(level)
        if len(specs) != 1:
            raise LevelError("level 2a needs one of its variants; use solve_level")
        level = specs[0]
    words = generate_words(ineq.scenario, level)
    n = len(words)
    if n > capacity:
        raise CapacityError(f"{n} words exceed the moment-matrix capacity {capacity}")
    ids = {IDENTITY: 0}
    class_words = [IDENTITY]
    cm = np.zeros((n, n), dtype=np.int64)
    for i, u in enumerate(words):
        for j in range(i, n):
            w = entry_word(u, words[j])
            k = ids.get(w)
            if k is None:
                k = ids[w] = len(class_words)
                class_words.append(w)
            cm[i, j] = cm[j, i] = k
    const, alpha, beta, gamma = bell_to_observables(ineq)
    objective = {}

    def add(word, coeff):
        if coeff == 0:
            return
        if word not in ids:
            raise LevelError(f"level {level} lacks the moment {word}")
        objective[ids[word]] = objective.get(ids[word], Fraction(0)) + coeff

    for i, a in enumerate(alpha):
        add(Word((i,), ()), a)
    for j, b in enumerate(beta):
        add(Word((), (j,)), b)
    for i, row in enumerate(gamma):
        for j, g in enumerate(row):
            add(Word((i,), (j,)), g)
    return MomentProblem(ineq, level, words, class_words, cm, objective, const)


@dataclass
class NpaResult:
    upper: float
    primal: float
    dual: float
    level: str
    n_words: int
    n_classes: int
    min_eig: float
    converged: bool
    iterations: int
    safety_margin: float


def solve_upper_bound(problem, tol=1e-7):
    """Upper bound on (quantum value - b0); the dual side, padded so it stays valid.

    Every moment is the expectation of a unitary, so |y_k| <= 1 and the
    residual of the dual certificate can be charged to the bound.
    """
    obj = {k: float(v) for k, v in problem.objective.items()}
    res = sdp_solve(SdpProblem(problem.class_map, obj, {0: 1.0}), tol=tol)
    Z = res.dual_matrix
    n = Z.shape[0]
    zmin = float(np.linalg.eigvalsh(Z)[0])
    cmflat = problem.class_map.ravel()
    m = problem.n_classes
    FZ = np.bincount(cmflat, weights=Z.ravel(), minlength=m)
    c = np.zeros(m)
    for k, v in obj.items():
        c[k] = v
    r = FZ[1:] + c[1:]
    margin = float(np.abs(r).sum()) + max(0.0, -zmin) * n
    offset = float(problem.constant - problem.ineq.b0)
    dual = float(FZ[0]) + offset
    return NpaResult(
        upper=dual + margin,
        primal=res.primal + offset,
        dual=dual,
        level=str(problem.level),
        n_words=len(problem.words),
        n_classes=m,
        min_eig=res.min_eig,
        converged=res.converged,
        iterations=res.iterations,
        safety_margin=margin,
    )


def solve_level(ineq, level, tol=1e-7, capacity=MAX_SIZE, sample=None, sample_seed=0):
    """Best (smallest) bound over the variants of ``level``."""
    specs = parse_level(level, sample, sample_seed) if isinstance(level, str) else [level]
    best = None
    for spec in specs:
        out = solve_upper_bound(build_problem(ineq, spec, capacity), tol)
        if best is None or out.upper < best.upper:
            best = out
    return best


@dataclass
class GapReport:
    upper: float
    lower: float
    gap: float
    matched: bool
    level: str


def certify(ineq, level, lower, tol=1e-7):
    res = solve_level(ineq, level, tol)
    gap = res.upper - lower
    return GapReport(res.upper, lower, gap, gap <= MATCH_TOL, res.level)


def matching_level(ineq, lower, levels=HIERARCHY, tol=1e-7):
    """First level of the hierarchy whose bound meets ``lower``, or None."""
    for lv in levels:
        try:
            rep = certify(ineq, lv, lower, tol)
        except CapacityError:
            return None
        if rep.matched:
            return lv
    return None


class NPAUpperBound(BaseEstimator):
    """``fit(ineq)`` stores the bound on the violation in ``upper_``."""

    def __init__(self, level="L2", tol=1e-7, capacity=MAX_SIZE, sample=None, sample_seed=0):
        self.level = level
        self.tol = tol
        self.capacity = capacity
        self.sample = sample
        self.sample_seed = sample_seed

    def fit(self, ineq, y=None):
        self.result_ = solve_level(ineq, self.level, self.tol, self.capacity, self.sample, self.sample_seed)
        self.upper_ = self.result_.upper
        return self

    def predict(self, ineqs):
        return np.array([self.fit(q).upper_ for q in ineqs])
