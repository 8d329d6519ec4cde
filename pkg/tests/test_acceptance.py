"""Acceptance criteria, one test and one PASS/FAIL line each.

Slow-tier items only run with ``--runslow``; the line for a criterion says
which of its items were left out.
"""
import subprocess
import sys
from pathlib import Path

import pytest

from bellbound.catalog import builtin_catalog, get_inequality
from bellbound.core import canonical_key, classical_bound, equivalent, is_tight
from bellbound.detect import optimize_threshold
from bellbound.facets import shelling_run, slicing_run
from bellbound.golden import ITEMS, run_item
from bellbound.npa import matching_level, solve_level
from bellbound.seesaw import SpaceSpec, seesaw


def _item(label):
    return next(it for it in ITEMS if it.label == label)


def _report(acceptance_line, number, title, rows, skipped=()):
    failed = [r for r in rows if not r[1]]
    detail = "; ".join(f"{name}: {msg}" for name, ok, msg in failed)
    if skipped:
        detail = (detail + "; " if detail else "") + "not run without --runslow: " + ", ".join(skipped)
    acceptance_line(number, title, not failed, detail)
    assert not failed, detail


def _golden_rows(labels, runslow):
    rows, skipped = [], []
    for label in labels:
        it = _item(label)
        if it.tier == "slow" and not runslow:
            skipped.append(label)
            continue
        r = run_item(it)
        msg = r.error or f"got {r.value:.7f}, expected {it.expected:.7f} +- {it.tol:g}"
        rows.append((label, r.passed, msg))
    return rows, skipped


def _j_entries():
    return [(k, q) for k, q in builtin_catalog().items() if k.startswith("J") and k.endswith("_4422")]


def test_criterion_1_catalog_integrity(acceptance_line):
    entries = _j_entries()
    rows = [("count", len(entries) == 129, f"{len(entries)} entries")]
    for name, q in entries:
        ok = q.scenario.dim == 24 and classical_bound(q)[0] == 0 and is_tight(q)
        if not ok:
            rows.append((name, False, "bound or tightness check failed"))
    _report(acceptance_line, 1, "129 catalog inequalities parse, bound 0, tight", rows)


def test_criterion_2_pairwise_inequivalent(acceptance_line):
    keys = {}
    for name, q in _j_entries():
        keys.setdefault(canonical_key(q), []).append(name)
    dups = [v for v in keys.values() if len(v) > 1]
    rows = [("classes", len(keys) == 129 and not dups, f"{len(keys)} classes, duplicates {dups}")]
    _report(acceptance_line, 2, "129 catalog inequalities pairwise inequivalent", rows)


SEESAW_LABELS = ("seesaw CHSH R2", "seesaw I3322 R2", "seesaw I1_3422 R2", "seesaw A5 R2",
                 "seesaw I1_4422 R3 rank 1", "seesaw A6 R4 ranks 1222", "seesaw A89 R6", "seesaw J48_4422 R6")


def test_criterion_3_seesaw_golden(acceptance_line, runslow):
    rows, skipped = _golden_rows(SEESAW_LABELS, runslow)
    _report(acceptance_line, 3, "see-saw golden violations", rows, skipped)


NPA_LABELS = ("npa CHSH 1a", "npa I1_3422 1a", "npa AS1 L1", "npa I3322 L2", "npa I3322 L3", "npa gap I20_4422 2b")


def test_criterion_4_npa_golden(acceptance_line, runslow):
    rows, skipped = _golden_rows(NPA_LABELS, runslow)
    _report(acceptance_line, 4, "moment-matrix golden bounds", rows, skipped)


# inequality, see-saw space, level at which the bounds meet
CERTIFY = (
    ("CHSH", SpaceSpec(2), None),
    ("I3322", SpaceSpec(2), None),
    ("I1_3422", SpaceSpec(2), "1a"),
    ("AS1", SpaceSpec(2), "L1"),
    ("A5", SpaceSpec(2), "2a"),
    ("I1_4422", SpaceSpec(3, "real", (1, 1, 2, 1), (2, 1, 1, 2)), None),
    ("A6", SpaceSpec(4, "real", (1, 2, 2, 2), (3, 2, 2, 2)), None),
)


def test_criterion_5_certification(acceptance_line):
    rows = []
    for name, space, level in CERTIFY:
        try:
            q = get_inequality(name)
        except KeyError as exc:
            rows.append((name, False, f"inequality not in catalog: {exc}"))
            continue
        lower = seesaw(q, space, restarts=8, seed=0).violation
        upper = solve_level(q, "L2").upper
        ok = lower <= upper + 1e-6
        msg = f"lower {lower:.7f} upper(L2) {upper:.7f}"
        if level is not None:
            got = matching_level(q, lower)
            ok = ok and got == level
            msg += f", matched at {got}, expected {level}"
        rows.append((name, ok, msg))
    _report(acceptance_line, 5, "see-saw lower <= moment upper, matched levels", rows)


ETA_LABELS = ("eta CHSH sym", "eta I3322 asym complex", "eta A5 sym", "eta A44 asym complex")


def test_criterion_6_detection(acceptance_line, runslow):
    rows, skipped = _golden_rows(ETA_LABELS, runslow)
    names = ["I3322", "A44"] if runslow else ["I3322"]
    for name in names:
        try:
            q = get_inequality(name)
        except KeyError as exc:
            rows.append((f"{name} real", False, f"inequality not in catalog: {exc}"))
            continue
        eta = optimize_threshold(q, "asym", complex_=False).eta_asym_B
        ok = eta is not None and eta >= 2 / 3 - 1e-9
        rows.append((f"{name} real asym", ok, f"real threshold {eta}"))
    _report(acceptance_line, 6, "detection thresholds", rows, skipped)


def test_criterion_7_generation(acceptance_line):
    chsh = get_inequality("CHSH")
    found = slicing_run(chsh, b0_star=-100)
    rows = [("2222 slicing", len(found) == 1 and equivalent(next(iter(found.values())), chsh),
             f"{len(found)} classes")]
    try:
        seed = get_inequality("I19_4422")
    except KeyError as exc:
        rows.append(("I19_4422 shelling", False, f"seed not in catalog: {exc}"))
    else:
        out = shelling_run(seed)
        others = [q for k, q in out.items() if k != canonical_key(seed)]
        ok_each = all(classical_bound(q)[0] == q.b0 and is_tight(q) and q.scenario.dim == 24 for q in others)
        rows.append(("I19_4422 shelling", len(others) >= 5 and ok_each, f"{len(others)} new tight classes"))
    _report(acceptance_line, 7, "facet generation", rows)


def test_criterion_8_property_suites(acceptance_line):
    path = Path(__file__).with_name("test_properties.py")
    res = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(path)],
                         capture_output=True, text=True)
    tail = res.stdout.strip().splitlines()[-1] if res.stdout.strip() else res.stderr[-200:]
    _report(acceptance_line, 8, "standalone property suites", [("properties", res.returncode == 0, tail)])
