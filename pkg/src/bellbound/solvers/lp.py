"""Exact rational simplex method (two phases, Bland's rule).

The tableau is kept fraction-free: all entries are Python integers sharing
one positive denominator, updated by integer pivoting so no rounding or
gcd bookkeeping happens inside the loop.
"""
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exact import integerize, lcm_denominator

MAX_ROWS = 500


class LpError(ArithmeticError):
    pass


class LpInfeasible(LpError):
    pass


class LpUnbounded(LpError):
    pass


@dataclass
class LpProblem:
    """``objective . x -> max/min`` subject to rows ``(coeffs, op, rhs)``.

    ``op`` is one of ``"<="``, ``">="``, ``"="``. Variables are free unless
    ``nonneg`` is set.
    """

    objective: list
    rows: list = field(default_factory=list)
    maximize: bool = True
    nonneg: bool = False

    def __post_init__(self):
        n = len(self.objective)
        for coeffs, op, _ in self.rows:
            if len(coeffs) != n:
                raise ValueError("constraint row length differs from the objective length")
            if op not in ("<=", ">=", "="):
                raise ValueError(f"unknown constraint sense {op!r}")


@dataclass
class LpResult:
    value: Fraction
    x: list
    basis: list


def _pivot(T, D, r, s):
    p = T[r, s]
    col = T[:, s].copy()
    rowr = T[r, :].copy()
    T[:] = (T * p - np.outer(col, rowr)) // D
    T[r, :] = rowr
    if p < 0:
        # keep the shared denominator positive so signs read directly
        T[:] = -T
        p = -p
    return p


def _run(T, D, basis, n_cols, allowed):
    """Simplex iterations on tableau rows 0..m-1, objective row m (reduced costs)."""
    m = T.shape[0] - 1
    while True:
        obj = T[m, :n_cols]
        enter = next((j for j in range(n_cols) if allowed[j] and obj[j] < 0), None)
        if enter is None:
            return D
        best = None
        for i in range(m):
            a = T[i, enter]
            if a > 0:
                ratio = Fraction(int(T[i, -1]), int(a))
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            raise LpUnbounded("objective unbounded")
        leave = best[1]
        D = _pivot(T, D, leave, enter)
        basis[leave] = enter


def simplex_standard(c, A, b):
    """Maximize ``c.x`` s.t. ``A x = b``, ``x >= 0`` exactly.

    Returns an ``LpResult`` whose ``basis`` lists the basic column per kept row.
    """
    m = len(A)
    n = len(c)
    if m > MAX_ROWS:
        raise LpError(f"{m} constraint rows exceed the LP capacity {MAX_ROWS}")
    rows = []
    rhs = []
    for row, bi in zip(A, b):
        ints, scale = integerize(list(row) + [bi])
        if ints[-1] < 0:
            ints = [-v for v in ints]
        rows.append(ints[:-1])
        rhs.append(ints[-1])
    # phase I tableau: structural | artificial | rhs, objective row last
    T = np.zeros((m + 1, n + m + 1), dtype=object)
    T[:, :] = 0
    for i in range(m):
        T[i, :n] = rows[i]
        T[i, n + i] = 1
        T[i, -1] = rhs[i]
    for j in range(n):
        T[m, j] = -sum(rows[i][j] for i in range(m))
    T[m, -1] = -sum(rhs)
    basis = [n + i for i in range(m)]
    D = 1
    D = _run(T, D, basis, n + m, [True] * n + [False] * m)
    if T[m, -1] != 0:
        raise LpInfeasible("constraints are infeasible")
    # drive artificials out of the basis; drop redundant rows
    keep = []
    for i in range(m):
        if basis[i] >= n:
            j = next((j for j in range(n) if T[i, j] != 0), None)
            if j is None:
                continue
            D = _pivot(T, D, i, j)
            basis[i] = j
        keep.append(i)
    T = np.vstack([T[keep][:, list(range(n)) + [n + m]], np.zeros((1, n + 1), dtype=object)])
    basis = [basis[i] for i in keep]
    # phase II objective row, scaled to integers
    den = lcm_denominator(c)
    cint = [int(Fraction(v) * den) for v in c]
    k = len(keep)
    obj = np.zeros(n + 1, dtype=object)
    obj[:] = 0
    for i in range(k):
        cb = cint[basis[i]]
        if cb:
            obj += cb * T[i]
    obj[:n] -= np.array([ci * D for ci in cint], dtype=object)
    T[k] = obj
    D = _run(T, D, basis, n, [True] * n)
    x = [Fraction(0)] * n
    for i in range(k):
        x[basis[i]] = Fraction(int(T[i, -1]), int(D))
    value = sum((Fraction(ci) * xi for ci, xi in zip(c, x)), Fraction(0))
    return LpResult(value, x, list(basis))


def lp_solve(problem):
    """Solve a general ``LpProblem`` exactly."""
    n = len(problem.objective)
    obj = [Fraction(v) for v in problem.objective]
    if not problem.maximize:
        obj = [-v for v in obj]
    # columns: x (or x+, x-) then one slack per inequality row
    n_struct = n if problem.nonneg else 2 * n
    n_slack = sum(1 for _, op, _ in problem.rows if op != "=")
    A, b = [], []
    s = 0
    for coeffs, op, rhs in problem.rows:
        coeffs = [Fraction(v) for v in coeffs]
        row = coeffs if problem.nonneg else coeffs + [-v for v in coeffs]
        slack = [Fraction(0)] * n_slack
        if op != "=":
            slack[s] = Fraction(1 if op == "<=" else -1)
            s += 1
        A.append(row + slack)
        b.append(Fraction(rhs))
    c = (obj if problem.nonneg else obj + [-v for v in obj]) + [Fraction(0)] * n_slack
    if not A:
        if any(v != 0 for v in c):
            raise LpUnbounded("objective unbounded")
        return LpResult(Fraction(0), [Fraction(0)] * n, [])
    res = simplex_standard(c, A, b)
    if problem.nonneg:
        x = res.x[:n]
    else:
        x = [res.x[j] - res.x[n + j] for j in range(n)]
    value = res.value if problem.maximize else -res.value
    return LpResult(value, x, res.basis)


def brute_force_lp(problem):
    """Reference solver for tiny problems: enumerate all vertices of the feasible set.

    Only bounded problems with a pointed feasible region are supported.
    """
    from itertools import combinations

    from .exact import solve_rational

    n = len(problem.objective)
    rows = [([Fraction(v) for v in c], op, Fraction(r)) for c, op, r in problem.rows]
    if problem.nonneg:
        for j in range(n):
            rows.append(([Fraction(int(k == j)) for k in range(n)], ">=", Fraction(0)))
    best = None
    for combo in combinations(range(len(rows)), n):
        active = [rows[i] for i in combo]
        try:
            x = solve_rational([r[0] for r in active], [r[2] for r in active])
        except ValueError:
            continue
        ok = True
        for coeffs, op, rhs in rows:
            lhs = sum(a * v for a, v in zip(coeffs, x))
            if (op == "<=" and lhs > rhs) or (op == ">=" and lhs < rhs) or (op == "=" and lhs != rhs):
                ok = False
                break
        if not ok:
            continue
        val = sum(Fraction(a) * v for a, v in zip(problem.objective, x))
        if best is None or (val > best if problem.maximize else val < best):
            best = val
    if best is None:
        raise LpInfeasible("no feasible vertex")
    return best
