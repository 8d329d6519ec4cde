"""Detection-efficiency thresholds on the maximally entangled qubit pair.

With efficiencies eta_A, eta_B the observed Bell value is

    eta_A eta_B Q + eta_A (1 - eta_B) M_A + (1 - eta_A) eta_B M_B + (1 - eta_A)(1 - eta_B) X

where a detector that does not fire outputs a fixed bit. On (|00> + |11>)/sqrt 2
every quantum marginal is 1/2, so M_A, M_B and X do not depend on the
measurement directions; only Q does.
"""
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator

from .core import BellInequality, classical_bound
from .solvers.nelder_mead import NMOptions, nelder_mead

logger = logging.getLogger(__name__)

QUANTUM = -1
GRID = 1000
MAX_SETTINGS = 10


@dataclass
class DetectionStrategy:
    """Per setting: ``kind`` is QUANTUM or the output (0/1) of a degenerate measurement."""

    kind_A: tuple
    kind_B: tuple
    vec_A: np.ndarray
    vec_B: np.ndarray
    noclick_A: tuple
    noclick_B: tuple

    def __post_init__(self):
        for kinds, bits in ((self.kind_A, self.noclick_A), (self.kind_B, self.noclick_B)):
            for k, bit in zip(kinds, bits):
                if k != QUANTUM and k != bit:
                    raise ValueError("a degenerate setting's no-click bit must equal its output")
        self.vec_A = np.asarray(self.vec_A, dtype=float).reshape(len(self.kind_A), 3)
        self.vec_B = np.asarray(self.vec_B, dtype=float).reshape(len(self.kind_B), 3)

    @classmethod
    def from_angles(cls, theta_A, theta_B, noclick_A=None, noclick_B=None):
        """All-quantum strategy with directions in the x-z plane."""
        vA = [(np.sin(t), 0.0, np.cos(t)) for t in theta_A]
        vB = [(np.sin(t), 0.0, np.cos(t)) for t in theta_B]
        nA = tuple(noclick_A) if noclick_A is not None else (0,) * len(vA)
        nB = tuple(noclick_B) if noclick_B is not None else (0,) * len(vB)
        return cls((QUANTUM,) * len(vA), (QUANTUM,) * len(vB), vA, vB, nA, nB)

    def to_json(self):
        return {
            "kind_A": ["q" if k == QUANTUM else int(k) for k in self.kind_A],
            "kind_B": ["q" if k == QUANTUM else int(k) for k in self.kind_B],
            "bloch_A": self.vec_A.tolist(),
            "bloch_B": self.vec_B.tolist(),
            "noclick_A": list(self.noclick_A),
            "noclick_B": list(self.noclick_B),
        }


@dataclass
class EfficiencyReport:
    Q: float
    M_A: float
    M_B: float
    X: float
    L: Fraction
    eta_sym: float = None
    eta_asym_B: float = None
    strategy: DetectionStrategy = None
    reduced: BellInequality = None
    L_reduced: Fraction = None
    budget_exhausted: bool = False
    patterns_tried: int = 0

    def to_json(self):
        return {
            "Q": self.Q, "M_A": self.M_A, "M_B": self.M_B, "X": self.X, "L": str(self.L),
            "eta_sym": self.eta_sym, "eta_asym_B": self.eta_asym_B,
            "L_reduced": None if self.L_reduced is None else str(self.L_reduced),
            "reduced": None if self.reduced is None else str(self.reduced),
            "budget_exhausted": self.budget_exhausted, "patterns_tried": self.patterns_tried,
            "strategy": None if self.strategy is None else self.strategy.to_json(),
        }


def _marginals(kinds):
    return np.array([0.5 if k == QUANTUM else float(k) for k in kinds])


def _bell(bA, bB, bAB, pA, pB, pAB):
    return float(bA @ pA + bB @ pB + np.sum(bAB * pAB))


def qmx(ineq, strategy):
    bA, bB, bAB, _ = ineq.float_arrays()
    pA = _marginals(strategy.kind_A)
    pB = _marginals(strategy.kind_B)
    pAB = np.outer(pA, pB)
    qa = np.array([k == QUANTUM for k in strategy.kind_A])
    qb = np.array([k == QUANTUM for k in strategy.kind_B])
    # P(1,1) = (1 + a . b~)/4 with b~ the transposed (y-flipped) Bloch vector
    vb = strategy.vec_B * np.array([1.0, -1.0, 1.0])
    corr = (1 + strategy.vec_A @ vb.T) / 4
    pAB = np.where(np.outer(qa, qb), corr, pAB)
    Q = _bell(bA, bB, bAB, pA, pB, pAB)
    nA = np.array(strategy.noclick_A, dtype=float)
    nB = np.array(strategy.noclick_B, dtype=float)
    M_A = _bell(bA, bB, bAB, pA, nB, np.outer(pA, nB))
    M_B = _bell(bA, bB, bAB, nA, pB, np.outer(nA, pB))
    X = _bell(bA, bB, bAB, nA, nB, np.outer(nA, nB))
    return Q, M_A, M_B, X


def combined_value(Q, M_A, M_B, X, eta_A, eta_B):
    return eta_A * eta_B * Q + eta_A * (1 - eta_B) * M_A + (1 - eta_A) * eta_B * M_B + (1 - eta_A) * (1 - eta_B) * X


def _sym_threshold(Q, S, X, L):
    """Smallest eta with eta^2 Q + eta(1-eta) S + (1-eta)^2 X > L on (eta, 1]; S = M_A + M_B."""
    f = lambda e: e * e * Q + e * (1 - e) * S + (1 - e) ** 2 * X - L
    if f(1.0) <= 0:
        return None
    a = Q - S + X
    b = S - 2 * X
    c = X - L
    if abs(a) < 1e-15:
        roots = [-c / b] if abs(b) > 1e-15 else []
    else:
        disc = b * b - 4 * a * c
        roots = [] if disc < 0 else [(-b - np.sqrt(disc)) / (2 * a), (-b + np.sqrt(disc)) / (2 * a)]
    roots = [r for r in roots if r < 1]
    eta = max([r for r in roots] + [0.0])
    eta = min(max(eta, 0.0), 1.0)
    # guard against a sign change the root formula missed
    grid = np.linspace(eta, 1.0, GRID + 1)[1:]
    vals = f(grid)
    bad = np.nonzero(vals <= 0)[0]
    if len(bad):
        lo, hi = grid[bad[-1]], 1.0
        for _ in range(80):
            mid = (lo + hi) / 2
            if f(mid) > 0:
                hi = mid
            else:
                lo = mid
        eta = hi
    return float(eta) if eta > 0 else None


def threshold_sym(ineq, strategy, L=None):
    if L is None:
        L, _ = classical_bound(ineq)
    Q, M_A, M_B, X = qmx(ineq, strategy)
    return _sym_threshold(Q, M_A + M_B, X, float(L))


def _asym_threshold(Q, M_A, L):
    if Q <= M_A:
        return None
    eta = (L - M_A) / (Q - M_A)
    return float(eta) if 0 < eta <= 1 else None


def threshold_asym(ineq, strategy, L=None):
    if L is None:
        L, _ = classical_bound(ineq)
    Q, M_A, _, _ = qmx(ineq, strategy)
    return _asym_threshold(Q, M_A, float(L))


def _unit(v):
    n = np.linalg.norm(v)
    return v / n if n > 1e-15 else None


def _angles_to_vecs(x, count, complex_):
    if complex_:
        th, ph = x[:count], x[count:2 * count]
        return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)
    return np.stack([np.sin(x[:count]), np.zeros(count), np.cos(x[:count])], axis=1)


def _vecs_to_angles(V, complex_):
    th = np.arccos(np.clip(V[:, 2], -1, 1))
    if complex_:
        return np.concatenate([th, np.arctan2(V[:, 1], V[:, 0])])
    return np.arctan2(V[:, 0], V[:, 2])


def max_correlation(G, complex_=False, rng=None, starts=16, sweeps=200):
    """max sum_ij G_ij a_i . b_j over unit vectors (x-z plane, or the sphere).

    Alternating best responses from random starts, then a Nelder–Mead polish
    over the Bloch angles.
    """
    rng = rng or np.random.default_rng(0)
    qa, qb = G.shape
    dim = 3 if complex_ else 2
    best = (-np.inf, None, None)
    for _ in range(starts):
        B = rng.standard_normal((qb, dim))
        B /= np.linalg.norm(B, axis=1, keepdims=True)
        A = np.zeros((qa, dim))
        val = -np.inf
        for _ in range(sweeps):
            for i in range(qa):
                u = _unit(G[i] @ B)
                A[i] = u if u is not None else A[i] if np.any(A[i]) else np.eye(dim)[0]
            for j in range(qb):
                u = _unit(G[:, j] @ A)
                B[j] = u if u is not None else B[j]
            new = float(np.sum(G * (A @ B.T)))
            if new - val < 1e-13:
                val = new
                break
            val = new
        if val > best[0]:
            best = (val, A.copy(), B.copy())
    val, A, B = best
    lift = (lambda V: V) if complex_ else (lambda V: np.stack([V[:, 0], np.zeros(len(V)), V[:, 1]], axis=1))
    A3, B3 = lift(A), lift(B)
    x0 = np.concatenate([_vecs_to_angles(A3, complex_), _vecs_to_angles(B3, complex_)])
    na = 2 * qa if complex_ else qa

    def f(x):
        VA = _angles_to_vecs(x[:na], qa, complex_)
        VB = _angles_to_vecs(x[na:], qb, complex_)
        return float(np.sum(G * (VA @ VB.T)))

    res = nelder_mead(f, x0, NMOptions(step=0.05, max_evals=4000, restarts=1))
    if res.value > val:
        A3 = _angles_to_vecs(res.x[:na], qa, complex_)
        B3 = _angles_to_vecs(res.x[na:], qb, complex_)
        val = res.value
    return val, A3, B3


def reduce_inequality(ineq, kind_A, kind_B):
    """Fix degenerate settings; returns the smaller inequality I' and its bound L' on I's scale."""
    from .core import Scenario

    bA, bB, bAB = list(ineq.b_A), list(ineq.b_B), [list(r) for r in ineq.b_AB]
    keepA = [i for i, k in enumerate(kind_A) if k == QUANTUM]
    keepB = [j for j, k in enumerate(kind_B) if k == QUANTUM]
    if not keepA or not keepB:
        return None, None
    oA = [Fraction(0 if k == QUANTUM else k) for k in kind_A]
    oB = [Fraction(0 if k == QUANTUM else k) for k in kind_B]
    const = sum(bA[i] * oA[i] for i in range(len(bA))) + sum(bB[j] * oB[j] for j in range(len(bB))) + \
        sum(bAB[i][j] * oA[i] * oB[j] for i in range(len(bA)) for j in range(len(bB)))
    nA = [bA[i] + sum(bAB[i][j] * oB[j] for j in range(len(bB))) for i in keepA]
    nB = [bB[j] + sum(bAB[i][j] * oA[i] for i in range(len(bA))) for j in keepB]
    nAB = [[bAB[i][j] for j in keepB] for i in keepA]
    sc = Scenario(len(keepA), len(keepB))
    red = BellInequality(sc, nA, nB, nAB, ineq.b0 - const, (ineq.name or "") + "'")
    Lr, _ = classical_bound(red)
    return red, Lr + const


def _bit_options(kinds):
    free = [i for i, k in enumerate(kinds) if k == QUANTUM]
    rows = []
    for bits in itertools.product((0, 1), repeat=len(free)):
        row = [0 if k == QUANTUM else k for k in kinds]
        for i, b in zip(free, bits):
            row[i] = b
        rows.append(row)
    return np.array(rows, dtype=float)


def patterns(m_A, m_B, min_quantum=2):
    """Degenerate patterns, fewest degenerate settings first."""
    total = m_A + m_B
    out = []
    for n_deg in range(total + 1):
        for pos in itertools.combinations(range(total), n_deg):
            for outs in itertools.product((0, 1), repeat=n_deg):
                kinds = [QUANTUM] * total
                for p, o in zip(pos, outs):
                    kinds[p] = o
                kA, kB = tuple(kinds[:m_A]), tuple(kinds[m_A:])
                if sum(k == QUANTUM for k in kA) >= min_quantum and sum(k == QUANTUM for k in kB) >= min_quantum:
                    out.append((kA, kB))
    return out


def optimize_threshold(ineq, mode="sym", complex_=False, budget=None, seed=0, starts=16):
    """Minimize the threshold over degenerate patterns, directions and no-click bits."""
    if mode not in ("sym", "asym"):
        raise ValueError(f"unknown mode {mode!r}")
    sc = ineq.scenario
    if sc.m_A + sc.m_B > MAX_SETTINGS:
        raise ValueError(f"{sc.m_A + sc.m_B} settings exceed the enumeration cap {MAX_SETTINGS}")
    L, _ = classical_bound(ineq)
    Lf = float(L)
    bA, bB, bAB, _ = ineq.float_arrays()
    rng = np.random.default_rng(seed)
    pats = patterns(sc.m_A, sc.m_B)
    exhausted = budget is not None and len(pats) > budget
    if exhausted:
        pats = pats[:budget]
    best = None
    for kA, kB in pats:
        qa = [i for i, k in enumerate(kA) if k == QUANTUM]
        qb = [j for j, k in enumerate(kB) if k == QUANTUM]
        pA, pB = _marginals(kA), _marginals(kB)
        K = _bell(bA, bB, bAB, pA, pB, np.outer(pA, pB))
        G = bAB[np.ix_(qa, qb)] / 4
        corr, VA, VB = max_correlation(G, complex_, rng, starts)
        Q = K + corr
        if Q <= Lf + 1e-12:
            continue
        # no-click bits; M_A, M_B, X do not depend on the directions
        NA, NB = _bit_options(kA), _bit_options(kB)
        MA = bA @ pA + NB @ bB + NB @ (bAB.T @ pA)          # per Bob bit row
        if mode == "asym":
            k = int(np.argmax(MA))
            eta = _asym_threshold(Q, float(MA[k]), Lf)
            nA_row, nB_row = np.array([0 if x == QUANTUM else x for x in kA]), NB[k]
            MB = float(pB @ bB + nA_row @ bA + nA_row @ bAB @ pB)
            Xv = float(bA @ nA_row + bB @ nB_row + nA_row @ bAB @ nB_row)
            cand = (eta, Q, float(MA[k]), MB, Xv, nA_row, nB_row)
        else:
            MB = NA @ bA + bB @ pB + NA @ (bAB @ pB)           # per Alice bit row
            Xm = (NA @ bA)[:, None] + (NB @ bB)[None, :] + NA @ bAB @ NB.T
            cand = None
            for a in range(len(NA)):
                for b in range(len(NB)):
                    eta = _sym_threshold(Q, float(MA[b] + MB[a]), float(Xm[a, b]), Lf)
                    if eta is not None and (cand is None or eta < cand[0]):
                        cand = (eta, Q, float(MA[b]), float(MB[a]), float(Xm[a, b]), NA[a], NB[b])
        if cand is None or cand[0] is None:
            continue
        if best is None or cand[0] < best[0][0] - 1e-12:
            vecA = np.zeros((sc.m_A, 3))
            vecB = np.zeros((sc.m_B, 3))
            vecA[qa] = VA
            vecB[qb] = VB * np.array([1.0, -1.0, 1.0])    # undo the transpose convention
            strat = DetectionStrategy(kA, kB, vecA, vecB, tuple(int(x) for x in cand[5]),
                                      tuple(int(x) for x in cand[6]))
            best = (cand, strat)
    if best is None:
        return EfficiencyReport(float("nan"), float("nan"), float("nan"), float("nan"), L,
                                budget_exhausted=exhausted, patterns_tried=len(pats))
    cand, strat = best
    red, Lr = reduce_inequality(ineq, strat.kind_A, strat.kind_B)
    rep = EfficiencyReport(cand[1], cand[2], cand[3], cand[4], L, strategy=strat, reduced=red, L_reduced=Lr,
                           budget_exhausted=exhausted, patterns_tried=len(pats))
    if mode == "sym":
        rep.eta_sym = cand[0]
    else:
        rep.eta_asym_B = cand[0]
    return rep


class ThresholdOptimizer(BaseEstimator):
    """``fit(ineq)`` stores the best report in ``report_`` and the threshold in ``eta_``."""

    def __init__(self, mode="sym", complex=False, budget=None, seed=0, starts=16):
        self.mode = mode
        self.complex = complex
        self.budget = budget
        self.seed = seed
        self.starts = starts

    def fit(self, ineq, y=None):
        rep = optimize_threshold(ineq, self.mode, self.complex, self.budget, self.seed, self.starts)
        self.report_ = rep
        self.eta_ = rep.eta_sym if self.mode == "sym" else rep.eta_asym_B
        return self

    def predict(self, ineqs):
        return np.array([np.nan if (e := self.fit(q).eta_) is None else e for q in ineqs])
