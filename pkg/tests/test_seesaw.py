from math import sqrt

import numpy as np
import pytest

from bellbound.catalog import get_inequality
from bellbound.seesaw import (
    MeasurementModel, SeesawMaximizer, SpaceError, SpaceSpec, full_value, generator, iterate,
    measurement_update, n_params, projector_from_params, random_model, reduce_dimension, restricted_matrix,
    seesaw, state_update, value,
)

CHSH = get_inequality("CHSH")
I3322 = get_inequality("I3322")
TSIRELSON = (sqrt(2) - 1) / 2


def test_space_spec_validation():
    with pytest.raises(SpaceError):
        SpaceSpec(0)
    with pytest.raises(SpaceError):
        SpaceSpec(2, "quaternion")
    with pytest.raises(SpaceError):
        SpaceSpec(2, "real", (2, 1), (1, 1))
    assert SpaceSpec(4).ranks(2, 3) == ((2, 2), (2, 2, 2))
    with pytest.raises(SpaceError):
        SpaceSpec(3, "real", (1, 1), (1, 1)).ranks(3, 2)


def test_projector_parametrization():
    rng = np.random.default_rng(0)
    for field in ("real", "complex"):
        for n, r in ((2, 1), (4, 2), (5, 3)):
            x = rng.normal(size=n_params(n, r, field))
            K = generator(n, r, x, field)
            assert np.allclose(K, -K.conj().T)
            P = projector_from_params(n, r, x, field)
            assert np.abs(P @ P - P).max() < 1e-12
            assert abs(np.trace(P).real - r) < 1e-12
    with pytest.raises(SpaceError):
        generator(3, 1, np.zeros(5))


def test_restricted_matches_full():
    rng = np.random.default_rng(1)
    for ineq in (CHSH, I3322, get_inequality("J1_4422")):
        for field in ("real", "complex"):
            m = random_model(ineq, SpaceSpec(3, field), rng)
            m.c = np.abs(rng.normal(size=3))
            m.c /= np.linalg.norm(m.c)
            assert abs(value(ineq, m) - full_value(ineq, m)) < 1e-10


def test_state_update_gives_top_eigenvalue():
    rng = np.random.default_rng(2)
    m = random_model(I3322, SpaceSpec(3, "complex"), rng)
    M = restricted_matrix(I3322, m)
    c, _ = state_update(M)
    assert np.all(c >= 0)
    assert abs(np.linalg.norm(c) - 1) < 1e-12


def test_updates_never_decrease():
    rng = np.random.default_rng(3)
    m = random_model(I3322, SpaceSpec(2), rng)
    v0 = value(I3322, m)
    for method in ("eig", "nm"):
        m2 = measurement_update(I3322, m.copy(), method=method)
        assert value(I3322, m2) >= v0 - 1e-12
        assert m2.check()
    with pytest.raises(ValueError):
        measurement_update(I3322, m, method="bfgs")


def test_iterate_converges_monotone():
    rng = np.random.default_rng(4)
    m = random_model(CHSH, SpaceSpec(2), rng)
    m, v, conv, aborted = iterate(CHSH, m, ((1, 1), (1, 1)), 500)
    assert conv and not aborted
    assert v <= TSIRELSON + 1e-9
    assert m.check()


def test_chsh_tsirelson():
    rep = seesaw(CHSH, SpaceSpec(2), restarts=4, probes=8)
    assert abs(rep.violation - TSIRELSON) < 1e-7
    assert rep.model.check()
    assert abs(full_value(CHSH, rep.model) - rep.violation) < 1e-10


def test_seed_determinism():
    a = seesaw(I3322, SpaceSpec(2), restarts=2, probes=4, seed=5)
    b = seesaw(I3322, SpaceSpec(2), restarts=2, probes=4, seed=5)
    assert a.violation == b.violation


def test_nm_method_reaches_tsirelson():
    rep = seesaw(CHSH, SpaceSpec(2), restarts=2, probes=4, method="nm")
    assert abs(rep.violation - TSIRELSON) < 1e-6


def test_reduce_dimension_drops_dead_direction():
    rep = seesaw(CHSH, SpaceSpec(3), restarts=4, probes=8)
    assert rep.violation == pytest.approx(TSIRELSON, abs=1e-7)
    red = reduce_dimension(CHSH, rep)
    assert red.violation >= rep.violation - 1e-8
    assert red.reduced_dim <= 3
    assert red.model.check()


def test_report_json():
    rep = seesaw(CHSH, SpaceSpec(2, "complex"), restarts=1, probes=2)
    js = rep.to_json()
    assert js["model"]["field"] == "complex"
    assert len(js["model"]["A"]) == 2


def test_estimator():
    est = SeesawMaximizer(dim=2, restarts=2, probes=4)
    assert est.get_params()["dim"] == 2
    est.fit(CHSH)
    assert est.violation_ == pytest.approx(TSIRELSON, abs=1e-7)
    fixed = SeesawMaximizer(dim=2, ranks=((1, 1), (1, 1)), restarts=2, probes=4).fit(CHSH)
    assert fixed.report_.op_ranks == ((1, 1), (1, 1))


def test_model_check_detects_bad_projector():
    m = MeasurementModel(2, "real", [np.eye(2) * 0.5], [np.eye(2)], np.array([1.0, 0.0]))
    assert not m.check()
