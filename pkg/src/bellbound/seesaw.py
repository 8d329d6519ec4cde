"""Lower bounds on the quantum violation by alternating optimization.

The state is kept in Schmidt form ``sum_k c_k |k>|k>`` with real ``c``; the
local bases are absorbed into the projectors. With the state fixed the Bell
value is ``c^T M c`` for an n x n matrix ``M`` built entrywise from the
projectors, so no n^2 x n^2 object is ever formed.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm
from sklearn.base import BaseEstimator

from .solvers.eig import eig_hermitian
from .solvers.nelder_mead import NMOptions, nelder_mead

logger = logging.getLogger(__name__)

SCHMIDT_FLOOR = 1e-4
SWEEP_TOL = 1e-13


class SpaceError(ValueError):
    pass


@dataclass(frozen=True)
class SpaceSpec:
    """Component dimension, field, and projector ranks per setting.

    ``rank_A``/``rank_B`` of None means free ranks: each best-response step
    keeps the whole non-negative eigenspace, so degenerate settings can occur.
    """

    n: int
    field: str = "real"
    rank_A: tuple = None
    rank_B: tuple = None

    def __post_init__(self):
        if self.n < 1:
            raise SpaceError("dimension must be positive")
        if self.field not in ("real", "complex"):
            raise SpaceError(f"unknown field {self.field!r}")
        for ranks in (self.rank_A, self.rank_B):
            if ranks is not None and any(not 1 <= r <= self.n - 1 for r in ranks):
                raise SpaceError(f"ranks must lie in 1..{self.n - 1}")

    @property
    def dtype(self):
        return float if self.field == "real" else complex

    @property
    def free(self):
        return self.rank_A is None or self.rank_B is None

    def ranks(self, m_A, m_B):
        half = max(1, self.n // 2)
        rA = self.rank_A if self.rank_A is not None else (half,) * m_A
        rB = self.rank_B if self.rank_B is not None else (half,) * m_B
        if len(rA) != m_A or len(rB) != m_B:
            raise SpaceError("rank list length differs from the number of settings")
        return tuple(rA), tuple(rB)


def n_params(n, r, field):
    k = r * (n - r)
    return k if field == "real" else 2 * k


def generator(n, r, params, field="real"):
    params = np.asarray(params, dtype=float)
    if params.size != n_params(n, r, field):
        raise SpaceError(f"expected {n_params(n, r, field)} parameters, got {params.size}")
    k = r * (n - r)
    X = params[:k].reshape(n - r, r)
    if field == "complex":
        X = X + 1j * params[k:].reshape(n - r, r)
    K = np.zeros((n, n), dtype=X.dtype)
    K[r:, :r] = X
    K[:r, r:] = -X.conj().T
    return K


def projector_from_params(n, r, params, field="real", basis=None):
    """``V exp(K) P0 exp(-K) V^dagger`` with ``P0 = diag(1 x r, 0 x (n-r))``."""
    U = expm(generator(n, r, params, field))
    if basis is not None:
        U = basis @ U
    cols = U[:, :r]
    P = cols @ cols.conj().T
    return (P + P.conj().T) / 2


@dataclass
class MeasurementModel:
    n: int
    field: str
    A: list
    B: list
    c: np.ndarray

    def copy(self):
        return MeasurementModel(self.n, self.field, [a.copy() for a in self.A], [b.copy() for b in self.B],
                                self.c.copy())

    @property
    def ranks_A(self):
        return tuple(int(round(np.trace(a).real)) for a in self.A)

    @property
    def ranks_B(self):
        return tuple(int(round(np.trace(b).real)) for b in self.B)

    def schmidt(self):
        return np.sort(np.abs(self.c))[::-1]

    def check(self, tol=1e-9):
        for P in self.A + self.B:
            if np.abs(P @ P - P).max() > tol or np.abs(P - P.conj().T).max() > tol:
                return False
        return abs(np.sum(np.abs(self.c) ** 2) - 1) < tol

    def to_json(self):
        def flat(P):
            if self.field == "real":
                return [float(v) for v in P.real.ravel()]
            return [[float(v.real), float(v.imag)] for v in P.ravel()]

        return {
            "n": self.n,
            "field": self.field,
            "schmidt": [float(v) for v in self.schmidt()],
            "A": [flat(P) for P in self.A],
            "B": [flat(P) for P in self.B],
        }


def _coeffs(ineq):
    bA, bB, bAB, _ = ineq.float_arrays()
    return bA, bB, bAB


def restricted_matrix(ineq, model):
    bA, bB, bAB = _coeffs(ineq)
    A = np.array(model.A)
    B = np.array(model.B)
    M = np.einsum("ij,ikl,jkl->kl", bAB, A, B)
    diag = np.einsum("i,ikk->k", bA, A) + np.einsum("j,jkk->k", bB, B)
    M = M + np.diag(diag)
    return (M + M.conj().T) / 2


def value(ineq, model):
    """Bell value minus the classical bound for the model's state and projectors."""
    M = restricted_matrix(ineq, model)
    c = model.c
    return float(np.real(c.conj() @ M @ c)) - float(ineq.b0)


def full_value(ineq, model):
    """The same quantity from the n^2 x n^2 Bell operator (reference evaluation)."""
    bA, bB, bAB = _coeffs(ineq)
    n = model.n
    I = np.eye(n)
    op = np.zeros((n * n, n * n), dtype=complex)
    for i, Ai in enumerate(model.A):
        op += bA[i] * np.kron(Ai, I)
        for j, Bj in enumerate(model.B):
            op += bAB[i, j] * np.kron(Ai, Bj)
    for j, Bj in enumerate(model.B):
        op += bB[j] * np.kron(I, Bj)
    psi = np.zeros(n * n, dtype=complex)
    for k in range(n):
        psi[k * n + k] = model.c[k]
    return float(np.real(psi.conj() @ op @ psi)) - float(ineq.b0)


def state_update(M):
    """Unit principal eigenvector with its phases removed; returns (c, phases)."""
    w, V = eig_hermitian(M)
    v = V[:, -1]
    phases = np.exp(1j * np.angle(v)) if np.iscomplexobj(v) else np.sign(v) + (v == 0)
    c = np.abs(v)
    return c / np.linalg.norm(c), phases


def _absorb_phases(model, phases):
    # |psi> = sum |c_k| e^{i phi_k} |kk>  ->  conjugate Alice's operators by D
    if np.iscomplexobj(phases):
        D = np.diag(phases)
        model.A = [D.conj().T @ a @ D for a in model.A]
    else:
        D = np.diag(phases)
        model.A = [D @ a @ D for a in model.A]


def _best_projector(X, rank):
    w, V = eig_hermitian(X)
    if rank is None:
        cols = V[:, w > 0]
    else:
        cols = V[:, len(w) - rank:]
    P = cols @ cols.conj().T
    return (P + P.conj().T) / 2


def _eig_measurement_update(ineq, model, rA, rB):
    bA, bB, bAB = _coeffs(ineq)
    C = np.diag(model.c)
    n = model.n
    I = np.eye(n)
    for i in range(len(model.A)):
        Y = sum(bAB[i, j] * model.B[j] for j in range(len(model.B))) + bA[i] * I
        model.A[i] = _best_projector(C @ Y.conj() @ C, rA[i])
    for j in range(len(model.B)):
        Y = sum(bAB[i, j] * model.A[i] for i in range(len(model.A))) + bB[j] * I
        model.B[j] = _best_projector(C @ Y.conj() @ C, rB[j])
    return model


def _basis_of(P, rank):
    w, V = eig_hermitian(P)
    # range first, then kernel, so P = V P0 V^dagger
    return np.concatenate([V[:, len(w) - rank:], V[:, :len(w) - rank]], axis=1)


def measurement_update(ineq, model, ranks=None, method="eig", nm_opts=None):
    """Improve the projectors with the state fixed; never lowers the value.

    ``method="nm"`` runs Nelder–Mead jointly over every setting's generator
    parameters; ``method="eig"`` replaces each projector in turn by the exact
    best response (the span of the top eigenvectors of its partial operator).
    """
    start = value(ineq, model)
    if ranks is None:
        ranks = (model.ranks_A, model.ranks_B)
    rA, rB = ranks
    if method == "eig":
        new = _eig_measurement_update(ineq, model.copy(), rA, rB)
    elif method == "nm":
        new = _nm_measurement_update(ineq, model, rA, rB, nm_opts)
    else:
        raise ValueError(f"unknown measurement update {method!r}")
    return new if value(ineq, new) >= start else model


def _nm_measurement_update(ineq, model, rA, rB, nm_opts):
    n, fld = model.n, model.field
    rA = [r if r is not None else model.ranks_A[i] for i, r in enumerate(rA)]
    rB = [r if r is not None else model.ranks_B[j] for j, r in enumerate(rB)]
    settings = [(r, model.A[i]) for i, r in enumerate(rA)] + [(r, model.B[j]) for j, r in enumerate(rB)]
    active = [(k, r, _basis_of(P, r)) for k, (r, P) in enumerate(settings) if 0 < r < n]
    sizes = [n_params(n, r, fld) for _, r, _ in active]
    offsets = np.cumsum([0] + sizes)
    mA = len(rA)

    def build(x):
        m = model.copy()
        for (k, r, V), lo, hi in zip(active, offsets[:-1], offsets[1:]):
            P = projector_from_params(n, r, x[lo:hi], fld, V)
            if k < mA:
                m.A[k] = P
            else:
                m.B[k - mA] = P
        return m

    res = nelder_mead(lambda x: value(ineq, build(x)), np.zeros(offsets[-1]), nm_opts)
    return build(res.x)


def random_projector(n, r, field, rng):
    if r == 0:
        return np.zeros((n, n), dtype=float if field == "real" else complex)
    G = rng.standard_normal((n, n))
    if field == "complex":
        G = G + 1j * rng.standard_normal((n, n))
    Q, _ = np.linalg.qr(G)
    cols = Q[:, :r]
    P = cols @ cols.conj().T
    return (P + P.conj().T) / 2


def random_model(ineq, space, rng):
    sc = ineq.scenario
    n = space.n
    if space.free:
        draw = lambda: int(rng.integers(1, n)) if n > 1 else 1
        rA = [draw() for _ in range(sc.m_A)] if space.rank_A is None else space.rank_A
        rB = [draw() for _ in range(sc.m_B)] if space.rank_B is None else space.rank_B
    else:
        rA, rB = space.ranks(sc.m_A, sc.m_B)
    A = [random_projector(n, r, space.field, rng) for r in rA]
    B = [random_projector(n, r, space.field, rng) for r in rB]
    return MeasurementModel(n, space.field, A, B, np.full(n, 1 / np.sqrt(n)))


def _fixed_ranks(space, ineq):
    sc = ineq.scenario
    rA = space.rank_A if space.rank_A is not None else (None,) * sc.m_A
    rB = space.rank_B if space.rank_B is not None else (None,) * sc.m_B
    return tuple(rA), tuple(rB)


@dataclass
class SeesawReport:
    violation: float
    model: MeasurementModel = field(repr=False)
    reduced_dim: int = 0
    op_ranks: tuple = ()
    restarts_used: int = 0
    converged: bool = False
    aborted: bool = False

    def to_json(self):
        return {
            "violation": self.violation,
            "reduced_dim": self.reduced_dim,
            "op_ranks_A": list(self.op_ranks[0]),
            "op_ranks_B": list(self.op_ranks[1]),
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "model": self.model.to_json(),
        }


def iterate(ineq, model, ranks, max_sweeps=500, method="eig", floor=None, nm_opts=None):
    """Alternate state and measurement updates until a sweep gains < SWEEP_TOL.

    Returns (model, value, converged, aborted); ``floor`` enables the early
    abort on a vanishing Schmidt coefficient.
    """
    val = value(ineq, model)
    for _ in range(max_sweeps):
        c, ph = state_update(restricted_matrix(ineq, model))
        model.c = c
        _absorb_phases(model, ph)
        model = measurement_update(ineq, model, ranks, method, nm_opts)
        new = value(ineq, model)
        if floor is not None and model.n > 1 and np.min(np.abs(model.c)) < floor:
            return model, max(val, new), False, True
        if new - val < SWEEP_TOL:
            return model, max(val, new), True, False
        val = new
    return model, val, False, False


def _report(model, val, restarts, converged, aborted=False):
    return SeesawReport(val, model, model.n, (model.ranks_A, model.ranks_B), restarts, converged, aborted)


def seesaw(ineq, space, restarts=8, seed=0, probes=64, probe_sweeps=15, method="eig", floor=SCHMIDT_FLOOR,
           nm_opts=None, max_sweeps=20000):
    """Best of several randomized alternating runs.

    ``probes`` short runs (with the Schmidt-floor abort) pick the starting
    points of ``restarts`` full runs.
    """
    ranks = _fixed_ranks(space, ineq)
    ss = np.random.SeedSequence(seed)
    rngs = [np.random.default_rng(s) for s in ss.spawn(max(probes, restarts))]
    starts = []
    for rng in rngs[:max(probes, restarts)]:
        m = random_model(ineq, space, rng)
        m, v, _, aborted = iterate(ineq, m, ranks, probe_sweeps, method, floor, nm_opts)
        starts.append((v, aborted, m))
    # prefer runs that kept the full Schmidt rank
    starts.sort(key=lambda t: (t[1], -t[0]))
    best = None
    for v0, _, m in starts[:restarts]:
        m, v, conv, _ = iterate(ineq, m, ranks, max_sweeps, method, None, nm_opts)
        if best is None or v > best.violation:
            best = _report(m, v, restarts, conv)
    for v0, _, m in starts:
        if v0 > best.violation:
            best = _report(m, v0, restarts, False, True)
    return best


def reduce_dimension(ineq, report, floor=SCHMIDT_FLOOR, weight=None, nm_opts=None, tol=1e-8):
    """Drop Schmidt directions with |c_k| < floor if the violation survives.

    The couplings between live and dead directions are first pushed to zero
    by maximizing value - weight * |off-block|^2 over all projector
    parameters; the live block is then cut out and re-polished.
    """
    model = report.model
    live = np.abs(model.c) >= floor
    if live.all() or not live.any():
        return report
    n = model.n
    fld = model.field
    rA, rB = model.ranks_A, model.ranks_B
    mA = len(rA)
    lam = weight if weight is not None else 10 * max(abs(report.violation), 1e-3)
    settings = [(r, P) for r, P in zip(rA, model.A)] + [(r, P) for r, P in zip(rB, model.B)]
    active = [(k, r, _basis_of(P, r)) for k, (r, P) in enumerate(settings) if 0 < r < n]
    offsets = np.cumsum([0] + [n_params(n, r, fld) for _, r, _ in active])
    dead = ~live

    def build(x):
        m = model.copy()
        for (k, r, V), lo, hi in zip(active, offsets[:-1], offsets[1:]):
            P = projector_from_params(n, r, x[lo:hi], fld, V)
            if k < mA:
                m.A[k] = P
            else:
                m.B[k - mA] = P
        return m

    def coupling(m):
        return sum(float(np.sum(np.abs(P[np.ix_(live, dead)]) ** 2)) for P in m.A + m.B)

    def objective(x):
        m = build(x)
        return value(ineq, m) - lam * coupling(m)

    x = np.zeros(offsets[-1])
    if coupling(model) > 1e-14 and x.size:
        x = nelder_mead(objective, x, nm_opts or NMOptions(max_evals=20000)).x
    m = build(x)
    if coupling(m) > 1e-8:
        logger.info("dimension reduction failed: residual coupling %.2e", coupling(m))
        return report
    k = int(live.sum())
    idx = np.nonzero(live)[0]
    cut = lambda P: _round_projector(P[np.ix_(idx, idx)])
    small = MeasurementModel(k, fld, [cut(P) for P in m.A], [cut(P) for P in m.B], m.c[idx] / np.linalg.norm(m.c[idx]))
    ranks = (small.ranks_A, small.ranks_B)
    small, v, conv, _ = iterate(ineq, small, ranks, 500)
    if v < report.violation - tol:
        return report
    return SeesawReport(v, small, k, (small.ranks_A, small.ranks_B), report.restarts_used, conv)


def _round_projector(P):
    w, V = eig_hermitian((P + P.conj().T) / 2)
    cols = V[:, w > 0.5]
    Q = cols @ cols.conj().T
    return (Q + Q.conj().T) / 2


class SeesawMaximizer(BaseEstimator):
    """``fit(ineq)`` leaves the best report in ``report_`` and its value in ``violation_``."""

    def __init__(self, dim=2, field="real", ranks=None, restarts=8, probes=64, seed=0, method="eig",
                 schmidt_floor=SCHMIDT_FLOOR, reduce=False):
        self.dim = dim
        self.field = field
        self.ranks = ranks
        self.restarts = restarts
        self.probes = probes
        self.seed = seed
        self.method = method
        self.schmidt_floor = schmidt_floor
        self.reduce = reduce

    def _space(self, ineq):
        if self.ranks is None:
            return SpaceSpec(self.dim, self.field)
        rA, rB = self.ranks
        return SpaceSpec(self.dim, self.field, tuple(rA), tuple(rB))

    def fit(self, ineq, y=None):
        rep = seesaw(ineq, self._space(ineq), self.restarts, self.seed, self.probes, method=self.method,
                     floor=self.schmidt_floor)
        if self.reduce:
            rep = reduce_dimension(ineq, rep, self.schmidt_floor)
        self.report_ = rep
        self.violation_ = rep.violation
        return self

    def predict(self, ineqs):
        return np.array([self.fit(q).violation_ for q in ineqs])
