"""Downhill-simplex (Nelder–Mead) maximizer with restart on stagnation."""
from dataclasses import dataclass

import numpy as np


@dataclass
class NMOptions:
    step: float = 0.3
    max_evals: int = 20000
    xtol: float = 1e-10
    ftol: float = 1e-13
    restarts: int = 3
    alpha: float = 1.0
    gamma: float = 2.0
    rho: float = 0.5
    sigma: float = 0.5


@dataclass
class SimplexState:
    points: np.ndarray
    values: np.ndarray

    @classmethod
    def around(cls, f, x0, step):
        n = len(x0)
        pts = np.tile(x0, (n + 1, 1))
        pts[1:] += step * np.eye(n)
        return cls(pts, np.array([f(p) for p in pts]))


@dataclass
class NMResult:
    x: np.ndarray
    value: float
    n_evals: int
    converged: bool
    history: list


def _descend(f, state, opts, budget):
    """Standard NM iterations maximizing ``f``; returns (state, evals, converged)."""
    pts, vals = state.points, state.values
    n = pts.shape[1]
    evals = 0
    while evals < budget:
        order = np.argsort(-vals)
        pts, vals = pts[order], vals[order]
        if abs(vals[0] - vals[-1]) <= opts.ftol * (1 + abs(vals[0])) and \
                np.max(np.abs(pts[1:] - pts[0])) <= max(opts.xtol, 1e-7):
            return SimplexState(pts, vals), evals, True
        if np.max(np.abs(pts[1:] - pts[0])) <= opts.xtol:
            return SimplexState(pts, vals), evals, True
        centroid = pts[:-1].mean(axis=0)
        xr = centroid + opts.alpha * (centroid - pts[-1])
        fr = f(xr)
        evals += 1
        if fr > vals[0]:
            xe = centroid + opts.gamma * (xr - centroid)
            fe = f(xe)
            evals += 1
            if fe > fr:
                pts[-1], vals[-1] = xe, fe
            else:
                pts[-1], vals[-1] = xr, fr
        elif fr > vals[-2]:
            pts[-1], vals[-1] = xr, fr
        else:
            if fr > vals[-1]:
                xc = centroid + opts.rho * (xr - centroid)
            else:
                xc = centroid + opts.rho * (pts[-1] - centroid)
            fc = f(xc)
            evals += 1
            if fc > max(fr, vals[-1]):
                pts[-1], vals[-1] = xc, fc
            else:
                # shrink towards the best point
                pts[1:] = pts[0] + opts.sigma * (pts[1:] - pts[0])
                vals[1:] = [f(p) for p in pts[1:]]
                evals += n
    order = np.argsort(-vals)
    return SimplexState(pts[order], vals[order]), evals, False


def nelder_mead(f, x0, opts=None):
    """Maximize ``f`` from ``x0``.

    After convergence the simplex is rebuilt around the best point and the
    search restarted, up to ``opts.restarts`` times or until a restart no
    longer improves. The best value sequence is monotone.
    """
    opts = opts or NMOptions()
    x0 = np.asarray(x0, dtype=float).copy()
    f0 = f(x0)
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at the start point")
    if x0.size == 0:
        return NMResult(x0, f0, 1, True, [f0])
    best_x, best_v = x0, f0
    history = [f0]
    total = 1
    converged = False
    for _ in range(opts.restarts + 1):
        state = SimplexState.around(f, best_x, opts.step)
        total += len(state.values)
        state, used, converged = _descend(f, state, opts, opts.max_evals - total)
        total += used
        gain = state.values[0] - best_v
        if gain > 0:
            best_x, best_v = state.points[0].copy(), float(state.values[0])
        history.append(best_v)
        if gain <= opts.ftol * (1 + abs(best_v)) or total >= opts.max_evals:
            break
    return NMResult(best_x, best_v, total, converged, history)
