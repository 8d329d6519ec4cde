"""Input checks shared by the estimators and the command line."""
import numpy as np

from .core import BellInequality, DimensionMismatch, Scenario


def check_inequality(x, scenario=None):
    """Accept a ``BellInequality``, a catalog name, or ``(coefficients, b0)``."""
    if isinstance(x, BellInequality):
        ineq = x
    elif isinstance(x, str):
        from .catalog import get_inequality

        ineq = get_inequality(x)
    else:
        if scenario is None:
            raise ValueError("a raw coefficient vector needs a scenario")
        coeffs, b0 = x if isinstance(x, tuple) and len(x) == 2 else (x, 0)
        ineq = BellInequality.from_vector(scenario, list(coeffs), b0)
    if scenario is not None and ineq.scenario != scenario:
        raise DimensionMismatch(f"expected scenario {scenario.label}, got {ineq.scenario.label}")
    return ineq


def check_scenario(x):
    if isinstance(x, Scenario):
        return x
    if isinstance(x, str):
        return Scenario.from_label(x)
    m_A, m_B = x
    return Scenario(int(m_A), int(m_B))


def check_projector(P, tol=1e-9):
    P = np.asarray(P)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("projector must be a square matrix")
    if np.abs(P - P.conj().T).max() > tol:
        raise ValueError("projector is not Hermitian")
    if np.abs(P @ P - P).max() > tol:
        raise ValueError("projector is not idempotent")
    return P


def check_ranks(text, m_A, m_B):
    """``auto``, ``1222/1222`` or ``1,2,2,2/1,2,2,2`` -> (rank_A, rank_B) or (None, None)."""
    if text is None or str(text).lower() == "auto":
        return None, None
    parts = str(text).split("/")
    if len(parts) != 2:
        raise ValueError("ranks must look like 1222/1222")

    def one(s, m):
        vals = [int(v) for v in (s.split(",") if "," in s else list(s.strip()))]
        if len(vals) != m:
            raise ValueError(f"{len(vals)} ranks given for {m} settings")
        return tuple(vals)

    return one(parts[0], m_A), one(parts[1], m_B)
