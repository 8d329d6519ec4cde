from math import sqrt

import numpy as np
import pytest

from bellbound.catalog import get_inequality
from bellbound.core import Scenario
from bellbound.npa import (
    IDENTITY, CapacityError, LevelError, LevelSpec, NPAUpperBound, Word, adjoint, bell_to_observables,
    build_problem, canonicalize, certify, entry_word, generate_words, matching_level, parse_level, product,
    solve_level,
)

CHSH = get_inequality("CHSH")
TSIRELSON = (sqrt(2) - 1) / 2


def test_canonicalize_cancels_squares():
    w = canonicalize([("a", 0), ("b", 1), ("a", 0), ("b", 1), ("a", 1)])
    assert w == Word((1,), ())
    assert canonicalize(Word((0, 0, 1), (2, 2))) == Word((1,), ())
    assert str(IDENTITY) == "1"
    assert str(Word((0, 1), (2,))) == "a1a2b3"


def test_adjoint_and_product():
    u = Word((0, 1), (1,))
    assert adjoint(adjoint(u)) == u
    assert product(adjoint(u), u) == IDENTITY
    assert entry_word(u, u) == IDENTITY
    v = Word((1,), (0,))
    assert entry_word(u, v) == entry_word(v, u)


def test_parse_level():
    assert [str(s) for s in parse_level("2a")] == ["2a(aab)", "2a(abb)"]
    assert parse_level("1")[0].patterns == parse_level("L1")[0].patterns
    assert "AAB" in parse_level("L2+aab")[0].patterns
    assert parse_level("custom:A,B,AB")[0].patterns == ("", "A", "B", "AB")
    for bad in ("L9", "x+AAB", "custom:AC"):
        with pytest.raises(LevelError):
            parse_level(bad)
    with pytest.raises(LevelError):
        LevelSpec(("A",), sample=0)


def test_word_counts():
    sc = Scenario(2, 2)
    assert len(generate_words(sc, parse_level("L1")[0])) == 5
    assert len(generate_words(sc, parse_level("1a")[0])) == 9
    sc4 = Scenario(4, 4)
    assert len(generate_words(sc4, parse_level("L2")[0])) == 1 + 8 + 12 + 12 + 16
    assert len(generate_words(sc4, parse_level("2b")[0])) == 145


def test_sampling_is_seeded():
    sc = Scenario(3, 3)
    a = generate_words(sc, parse_level("L3", sample=0.5, sample_seed=3)[0])
    b = generate_words(sc, parse_level("L3", sample=0.5, sample_seed=3)[0])
    full = generate_words(sc, parse_level("L3")[0])
    assert a == b
    assert len(a) < len(full)
    assert set(generate_words(sc, parse_level("L2")[0])) <= set(a)


def test_observable_form_matches_vertices():
    q = get_inequality("I3322")
    const, alpha, beta, gamma = bell_to_observables(q)
    from bellbound.core import evaluate
    for v in q.scenario.vertices():
        a = [2 * x - 1 for x in v.alpha]
        b = [2 * y - 1 for y in v.beta]
        val = const + sum(x * y for x, y in zip(alpha, a)) + sum(x * y for x, y in zip(beta, b))
        val += sum(gamma[i][j] * a[i] * b[j] for i in range(len(a)) for j in range(len(b)))
        assert val == evaluate(q, v)


def test_chsh_levels():
    for level in ("L1", "1a", "L2"):
        res = solve_level(CHSH, level)
        assert res.upper >= TSIRELSON - 1e-9
        assert res.upper - TSIRELSON < 2e-6
        assert res.converged


def test_capacity():
    with pytest.raises(CapacityError):
        build_problem(get_inequality("I3322"), "L3", capacity=20)
    with pytest.raises(LevelError):
        build_problem(CHSH, "2a")


def test_missing_moment():
    with pytest.raises(LevelError):
        build_problem(CHSH, "custom:A")


def test_certify_and_matching_level():
    rep = certify(CHSH, "1a", TSIRELSON)
    assert rep.matched
    assert rep.gap >= -1e-9
    assert matching_level(CHSH, TSIRELSON) == "L1"
    assert matching_level(CHSH, TSIRELSON, levels=("L1",)) == "L1"


def test_i3322_not_matched_at_l1():
    rep = certify(get_inequality("I3322"), "L1", 0.25)
    assert not rep.matched


def test_estimator():
    est = NPAUpperBound(level="L1")
    assert est.fit(CHSH).upper_ == pytest.approx(TSIRELSON, abs=2e-6)
    vals = est.predict([CHSH, get_inequality("I3322")])
    assert vals.shape == (2,)
    assert np.all(vals >= 0.2071)
