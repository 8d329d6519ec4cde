import numpy as np
import pytest

from bellbound.core import DimensionMismatch, Scenario
from bellbound.validation import check_inequality, check_projector, check_ranks, check_scenario


def test_check_inequality_forms():
    assert check_inequality("CHSH").name == "CHSH"
    q = check_inequality(([-1, 0, -1, 0, 1, 1, 1, -1], 0), Scenario(2, 2))
    assert q.scenario == Scenario(2, 2)
    assert check_inequality(q) is q
    with pytest.raises(ValueError):
        check_inequality([1, 2, 3])
    with pytest.raises(DimensionMismatch):
        check_inequality("CHSH", Scenario(3, 3))


def test_check_scenario():
    assert check_scenario("3322") == Scenario(3, 3)
    assert check_scenario((2, 4)) == Scenario(2, 4)
    s = Scenario(1, 1)
    assert check_scenario(s) is s


def test_check_projector():
    P = np.diag([1.0, 0.0])
    assert check_projector(P) is not None
    with pytest.raises(ValueError):
        check_projector(np.ones((2, 3)))
    with pytest.raises(ValueError):
        check_projector(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        check_projector(np.eye(2) * 0.5)


def test_check_ranks():
    assert check_ranks("auto", 4, 4) == (None, None)
    assert check_ranks(None, 2, 2) == (None, None)
    assert check_ranks("1222/1222", 4, 4) == ((1, 2, 2, 2), (1, 2, 2, 2))
    assert check_ranks("1,2,2,2/1,2,2,2", 4, 4) == ((1, 2, 2, 2), (1, 2, 2, 2))
    with pytest.raises(ValueError):
        check_ranks("12/12/12", 2, 2)
    with pytest.raises(ValueError):
        check_ranks("122/12", 2, 2)
