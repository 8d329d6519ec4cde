from fractions import Fraction

import numpy as np
import pytest

from bellbound.solvers.eig import NotHermitian, eig_hermitian
from bellbound.solvers.exact import integer_rank, integerize, lcm_denominator, rational_rank, solve_rational
from bellbound.solvers.hull import HullCapacityError, HullError, double_description
from bellbound.solvers.lp import (
    LpInfeasible, LpProblem, LpUnbounded, brute_force_lp, lp_solve, simplex_standard,
)
from bellbound.solvers.nelder_mead import NMOptions, nelder_mead
from bellbound.solvers.sdp import SdpProblem, sdp_solve


# exact

def test_integerize():
    ints, scale = integerize([Fraction(1, 2), Fraction(-3, 4), 0])
    assert ints == [2, -3, 0]
    assert scale == 4
    assert integerize([4, 6])[0] == [2, 3]
    assert lcm_denominator([Fraction(1, 6), Fraction(1, 4)]) == 12


def test_ranks_agree():
    rng = np.random.default_rng(1)
    for _ in range(30):
        M = rng.integers(-2, 3, size=(rng.integers(1, 7), rng.integers(1, 7)))
        if rng.random() < 0.5 and len(M) > 1:
            M[-1] = M[0] * 2 - M[-1] * 0
        assert integer_rank(M.tolist()) == rational_rank(M.tolist()) == np.linalg.matrix_rank(M)


def test_solve_rational():
    x = solve_rational([[2, 1], [1, 3]], [3, 5])
    assert x == [Fraction(4, 5), Fraction(7, 5)]
    with pytest.raises(ValueError):
        solve_rational([[1, 2], [2, 4]], [1, 1])


# lp

def test_lp_small():
    p = LpProblem([3, 2], [([1, 1], "<=", 4), ([1, 3], "<=", 6), ([1, 0], "<=", 3)], nonneg=True)
    res = lp_solve(p)
    assert res.value == 11
    assert res.x == [3, 1]
    assert brute_force_lp(p) == 11


def test_lp_min_equality_and_free():
    p = LpProblem([1, 1], [([1, -1], "=", 1), ([1, 0], ">=", Fraction(1, 3)), ([0, 1], ">=", -5)],
                  maximize=False)
    assert lp_solve(p).value == brute_force_lp(p) == Fraction(-1, 3)


def test_lp_infeasible_unbounded():
    with pytest.raises(LpInfeasible):
        lp_solve(LpProblem([1], [([1], "<=", 1), ([1], ">=", 2)]))
    with pytest.raises(LpUnbounded):
        lp_solve(LpProblem([1, 0], [([0, 1], "<=", 1)], nonneg=True))
    with pytest.raises(ValueError):
        LpProblem([1], [([1], "<", 1)])


def test_simplex_standard_degenerate():
    # degenerate vertex at the origin, Bland's rule must not cycle
    c = [10, -57, -9, -24, 0, 0, 0]
    A = [[0.5, -5.5, -2.5, 9, 1, 0, 0], [0.5, -1.5, -0.5, 1, 0, 1, 0], [1, 0, 0, 0, 0, 0, 1]]
    A = [[Fraction(v) for v in r] for r in A]
    res = simplex_standard(c, A, [0, 0, 1])
    assert res.value == 1


# hull

def test_hull_cube():
    pts = [(x, y, z) for x in (0, 1) for y in (0, 1) for z in (0, 1)]
    facets = double_description(pts)
    assert len(facets) == 6
    for b, b0 in facets:
        assert all(sum(bi * pi for bi, pi in zip(b, p)) <= b0 for p in pts)


def test_hull_chsh_polytope():
    from bellbound.core import Scenario
    facets = double_description(Scenario(2, 2).vertex_array().tolist())
    assert len(facets) == 24   # 16 positivity + 8 CHSH


def test_hull_errors():
    with pytest.raises(HullError):
        double_description([(0, 0), (1, 1), (2, 2)])
    with pytest.raises(HullCapacityError):
        double_description([(i, i * i) for i in range(10)], capacity=5)


# nelder-mead

def test_nm_quadratic():
    res = nelder_mead(lambda x: -np.sum((x - np.array([1.0, -2.0, 0.5])) ** 2), np.zeros(3))
    assert np.allclose(res.x, [1, -2, 0.5], atol=1e-4)
    assert res.value > -1e-8


def test_nm_rosenbrock():
    f = lambda x: -((1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2)
    res = nelder_mead(f, np.array([-1.2, 1.0]), NMOptions(max_evals=5000))
    assert np.allclose(res.x, [1, 1], atol=1e-3)


def test_nm_edge_cases():
    assert nelder_mead(lambda x: 3.0, np.zeros(0)).value == 3.0
    with pytest.raises(ValueError):
        nelder_mead(lambda x: np.nan, np.zeros(2))


# eig

def test_eig_hermitian():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    H = X + X.conj().T
    w, V = eig_hermitian(H)
    assert np.allclose(V @ np.diag(w) @ V.conj().T, H, atol=1e-10)
    assert np.all(np.diff(w) >= 0)
    with pytest.raises(NotHermitian):
        eig_hermitian(X)
    with pytest.raises(NotHermitian):
        eig_hermitian(np.ones((2, 3)))


# sdp

def test_sdp_2x2_correlation():
    # [[1, y], [y, 1]] >= 0, max y -> 1
    cm = np.array([[0, 1], [1, 0]])
    res = sdp_solve(SdpProblem(cm, {1: 1.0}, {0: 1.0}))
    assert res.converged
    assert abs(res.primal - 1) < 1e-6
    assert res.dual >= res.primal - 1e-7


def test_sdp_chsh_tsirelson():
    # moment matrix over {1, A0, A1, B0, B1} with unit diagonal; CHSH correlators
    cm = np.zeros((5, 5), dtype=int)
    k = 1
    for i in range(5):
        for j in range(i + 1, 5):
            cm[i, j] = cm[j, i] = k
            k += 1
    obj = {cm[1, 3]: 1.0, cm[1, 4]: 1.0, cm[2, 3]: 1.0, cm[2, 4]: -1.0}
    res = sdp_solve(SdpProblem(cm, obj, {0: 1.0}))
    assert abs(res.primal - 2 * np.sqrt(2)) < 1e-6
    assert res.dual >= res.primal - 1e-7


def test_sdp_problem_validation():
    with pytest.raises(ValueError):
        SdpProblem(np.array([[0, 1], [2, 0]]), {1: 1.0})
    with pytest.raises(ValueError):
        SdpProblem(np.array([[0, 1], [1, 0]]), {0: 1.0}, {0: 1.0})
