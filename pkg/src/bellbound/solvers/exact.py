"""Exact integer/rational linear algebra used by the classical-side code."""
from fractions import Fraction
from math import gcd


def lcm_denominator(values):
    den = 1
    for v in values:
        v = Fraction(v)
        den = den * v.denominator // gcd(den, v.denominator)
    return den


def integerize(values):
    """Scale rationals to coprime integers, positive factor only.

    Returns (ints, scale) with ints[i] == values[i] * scale.
    """
    vals = [Fraction(v) for v in values]
    den = lcm_denominator(vals)
    ints = [int(v * den) for v in vals]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g > 1:
        ints = [x // g for x in ints]
        return ints, Fraction(den, g)
    return ints, Fraction(den)


def integer_rank(rows):
    """Rank of an integer matrix by fraction-free (Bareiss) elimination."""
    mat = [list(map(int, r)) for r in rows]
    if not mat:
        return 0
    n_cols = len(mat[0])
    # eliminate on the short side
    if n_cols < len(mat):
        mat = [list(col) for col in zip(*mat)]
        n_cols = len(mat[0])
    rank = 0
    prev = 1
    n_rows = len(mat)
    for col in range(n_cols):
        pivot = None
        for r in range(rank, n_rows):
            if mat[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        p = mat[rank][col]
        prow = mat[rank]
        for r in range(rank + 1, n_rows):
            row = mat[r]
            f = row[col]
            for c in range(col + 1, n_cols):
                row[c] = (row[c] * p - f * prow[c]) // prev
            row[col] = 0
        prev = p
        rank += 1
        if rank == n_rows:
            break
    return rank


def rational_rank(rows):
    """Rank by plain Gaussian elimination over Fractions (reference path)."""
    mat = [[Fraction(x) for x in r] for r in rows]
    if not mat:
        return 0
    n_rows, n_cols = len(mat), len(mat[0])
    rank = 0
    for col in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if mat[r][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        for r in range(n_rows):
            if r != rank and mat[r][col] != 0:
                f = mat[r][col] / mat[rank][col]
                mat[r] = [a - f * b for a, b in zip(mat[r], mat[rank])]
        rank += 1
    return rank


def solve_rational(matrix, rhs):
    """Solve a square nonsingular system exactly. Raises ValueError if singular."""
    n = len(matrix)
    aug = [[Fraction(x) for x in row] + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular system")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [aug[r][n] for r in range(n)]
