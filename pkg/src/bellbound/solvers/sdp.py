"""Dense primal-dual interior-point solver for class-structured SDPs.

The problem is given in moment form::

    maximize  c . y   subject to   G(y) = F0 + sum_k y_k F_k  >= 0

where every ``F_k`` is the symmetric 0/1 indicator of one entry class and
``F0`` carries the pinned entries. Internally this is the dual of the
standard-form problem ``min <F0, Z>`` s.t. ``<F_k, Z> = -c_k``, ``Z >= 0``,
solved with Nesterov–Todd scaling and a Mehrotra-type centering rule.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

MAX_SIZE = 200


class SdpError(ArithmeticError):
    pass


@dataclass
class SdpProblem:
    """``class_map[i, j]`` is the class of entry (i, j); ``pinned`` maps class -> fixed value."""

    class_map: np.ndarray
    objective: dict
    pinned: dict = field(default_factory=dict)

    def __post_init__(self):
        cm = np.asarray(self.class_map)
        if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
            raise ValueError("class map must be square")
        if not np.array_equal(cm, cm.T):
            raise ValueError("class map must be symmetric")
        self.class_map = cm
        for k in self.objective:
            if k in self.pinned:
                raise ValueError(f"class {k} is both pinned and optimized")

    @property
    def size(self):
        return self.class_map.shape[0]


@dataclass
class SdpResult:
    primal: float
    dual: float
    y: dict
    gram: np.ndarray
    dual_matrix: np.ndarray
    gap: float
    converged: bool
    iterations: int
    min_eig: float
    dual_residual: float


def _max_step(L, D):
    """Largest alpha with L L^T + alpha D still PSD (inf when unbounded)."""
    Li = np.linalg.inv(L)
    lam = np.linalg.eigvalsh(Li @ D @ Li.T)[0]
    return np.inf if lam >= 0 else -1.0 / lam


def sdp_solve(problem, tol=1e-7, max_iter=100, verbose=False):
    n = problem.size
    if n > MAX_SIZE:
        raise SdpError(f"matrix size {n} exceeds the SDP capacity {MAX_SIZE}")
    cm = problem.class_map
    labels = sorted(set(int(v) for v in np.unique(cm)) - set(problem.pinned))
    index = {lab: i for i, lab in enumerate(labels)}
    m = len(labels)
    flat = cm.ravel()
    free_idx = np.array([index.get(int(v), -1) for v in flat])
    F0 = np.zeros(n * n)
    for k, val in problem.pinned.items():
        F0[flat == k] = val
    F0 = F0.reshape(n, n)
    c = np.zeros(m)
    for k, val in problem.objective.items():
        if k not in index:
            raise ValueError(f"objective class {k} does not occur in the class map")
        c[index[k]] = val
    mask = free_idx >= 0
    fi = free_idx[mask]
    # entries of each class, for building W F_l W as a sum of outer products
    members = [[] for _ in range(m)]
    for pos in np.nonzero(mask)[0]:
        members[free_idx[pos]].append(divmod(int(pos), n))
    rows_of = [np.array([p[0] for p in mem]) for mem in members]
    cols_of = [np.array([p[1] for p in mem]) for mem in members]

    def A_op(X):
        # <F_k, X> per class
        return np.bincount(fi, weights=X.ravel()[mask], minlength=m)

    def At_op(y):
        out = np.zeros(n * n)
        out[mask] = y[fi]
        return out.reshape(n, n)

    # standard form: min <C, X>, <A_k, X> = b_k, with C = F0, A_k = -F_k, b = c
    b = c
    X = np.eye(n)
    S = np.eye(n)
    y = np.zeros(m)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        rp = b + A_op(X)                       # b - A(X), A = -F
        Rd = F0 + At_op(y) - S                  # C - sum y_k A_k - S
        Rd = (Rd + Rd.T) / 2
        pobj = float(np.sum(F0 * X))
        dobj = float(b @ y)
        mu = float(np.sum(X * S)) / n
        rel_gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        pinf = np.linalg.norm(rp) / (1 + np.linalg.norm(b))
        dinf = np.linalg.norm(Rd) / (1 + np.linalg.norm(F0))
        if verbose:
            print(f"{it:3d} p={pobj:.9f} d={dobj:.9f} gap={rel_gap:.2e} pinf={pinf:.1e} dinf={dinf:.1e}")
        if rel_gap < tol and pinf < tol and dinf < tol:
            converged = True
            break
        try:
            L = np.linalg.cholesky(X)
            LtSL = L.T @ S @ L
            d, U = np.linalg.eigh((LtSL + LtSL.T) / 2)
        except np.linalg.LinAlgError:
            break
        if d[0] <= 0:
            break
        G = L @ U
        W = (G * d ** -0.5) @ G.T
        W = (W + W.T) / 2
        # Schur complement M_kl = <F_k, W F_l W>
        M = np.empty((m, m))
        for l in range(m):
            T = W[:, rows_of[l]] @ W[cols_of[l], :]
            M[:, l] = A_op(T)
        M = (M + M.T) / 2
        try:
            fac = cho_factor(M + 1e-14 * np.trace(M) / m * np.eye(m))
            solve = lambda r: cho_solve(fac, r)
        except LinAlgError:
            Mp = np.linalg.pinv(M)
            solve = lambda r: Mp @ r
        Sinv = np.linalg.inv(S)
        WRW = W @ Rd @ W

        def direction(sigma, corr=None):
            target = sigma * mu * Sinv - X - WRW
            if corr is not None:
                target = target - corr
            # dS = Rd + F(dy), dX = target - W F(dy) W, and -A_op(dX) = rp
            dy = solve(rp + A_op(target))
            Fdy = At_op(dy)
            dS = Rd + Fdy
            dS = (dS + dS.T) / 2
            dX = target - W @ Fdy @ W
            dX = (dX + dX.T) / 2
            return dX, dy, dS

        dX, dy, dS = direction(0.0)
        try:
            LS = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            break
        ap = min(1.0, _max_step(L, dX))
        ad = min(1.0, _max_step(LS, dS))
        mu_aff = float(np.sum((X + ap * dX) * (S + ad * dS))) / n
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        dX, dy, dS = direction(sigma)
        ap = min(1.0, 0.95 * _max_step(L, dX))
        ad = min(1.0, 0.95 * _max_step(LS, dS))
        X = X + ap * dX
        y = y + ad * dy
        S = S + ad * dS
        X = (X + X.T) / 2
        S = (S + S.T) / 2
    gram = F0 + At_op(y)
    gram = (gram + gram.T) / 2
    Z = X
    min_eig = float(np.linalg.eigvalsh(gram)[0])
    residual = float(np.abs(A_op(Z) + c).max()) if m else 0.0
    yd = {lab: float(y[index[lab]]) for lab in labels}
    return SdpResult(
        primal=float(c @ y),
        dual=float(np.sum(F0 * Z)),
        y=yd,
        gram=gram,
        dual_matrix=Z,
        gap=float(np.sum(F0 * Z) - c @ y),
        converged=converged,
        iterations=it,
        min_eig=min_eig,
        dual_residual=residual,
    )
