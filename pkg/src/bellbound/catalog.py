"""Reading and writing inequality catalogs.

Two line formats are understood::

    J1_4422<TAB>0-200-2-2-201-11-12121-111011-10
    CHSH<TAB>2222<TAB>-1 0 -1 0 1 1 1 -1 <= 0

The first is the compact single-digit encoding (b0 implicitly 0, scenario
taken from the last ``# scenario`` directive); the second lists explicit
rationals with the scenario label and the bound, and also accepts ``>=``.
"""
import hashlib
import re
from collections import OrderedDict
from fractions import Fraction
from importlib import resources

from .core import BellError, BellInequality, Scenario

BUILTIN_FILES = ("cg_bg.txt", "avis89.txt", "j129.txt")
J129_SHA256 = "d754d78bd530de394b8898c67280ed105209ee6d0d50354f986105ad9fcca0c6"
# alternative names used in the literature
ALIASES = {"A3": "I3322", "A4": "I2_3422", "A7": "I1_4422"}

_COMPACT = re.compile(r"^(-?\d)+$")
_DIGIT = re.compile(r"-?\d")
_SCENARIO_DIRECTIVE = re.compile(r"^#\s*scenario\s+(\d\d22)\s*$")


class CatalogError(BellError):
    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


class Catalog(OrderedDict):
    """Ordered ``name -> BellInequality`` mapping with unique names."""

    def add(self, ineq, line=None):
        if not ineq.name:
            raise CatalogError("inequality without a name", line)
        if ineq.name in self:
            raise CatalogError(f"duplicate name {ineq.name!r}", line)
        self[ineq.name] = ineq

    def merged(self, other):
        out = Catalog(self)
        for ineq in other.values():
            out.add(ineq)
        return out


def parse_compact(digits, scenario, name=""):
    if not _COMPACT.match(digits):
        raise CatalogError(f"not a compact digit string: {digits!r}")
    coeffs = [int(t) for t in _DIGIT.findall(digits)]
    if len(coeffs) != scenario.dim:
        raise CatalogError(f"{len(coeffs)} digits for scenario {scenario.label} (needs {scenario.dim})")
    return BellInequality.from_vector(scenario, coeffs, 0, name)


def _parse_general(name, body, scenario, lineno, offset):
    m = re.search(r"(<=|>=)", body)
    if not m:
        raise CatalogError("missing '<=' or '>=' bound", lineno, offset + len(body) + 1)
    lhs, op, rhs = body[:m.start()], m.group(1), body[m.end():]
    tokens = lhs.split()
    if tokens and re.fullmatch(r"\d\d22", tokens[0]):
        scenario = Scenario.from_label(tokens[0])
        tokens = tokens[1:]
    if scenario is None:
        raise CatalogError("no scenario given and no '# scenario' directive in effect", lineno, offset + 1)
    try:
        coeffs = [Fraction(t) for t in tokens]
    except (ValueError, ZeroDivisionError):
        bad = next(t for t in tokens if not re.fullmatch(r"-?\d+(/\d+)?", t))
        raise CatalogError(f"bad coefficient {bad!r}", lineno, offset + body.find(bad) + 1) from None
    try:
        b0 = Fraction(rhs.strip())
    except (ValueError, ZeroDivisionError):
        raise CatalogError(f"bad bound {rhs.strip()!r}", lineno, offset + m.end() + 1) from None
    if len(coeffs) != scenario.dim:
        raise CatalogError(f"{len(coeffs)} coefficients for scenario {scenario.label} (needs {scenario.dim})",
                           lineno, offset + 1)
    if op == ">=":
        coeffs = [-c for c in coeffs]
        b0 = -b0
    return BellInequality.from_vector(scenario, coeffs, b0, name)


def parse_catalog_text(text, scenario=None):
    catalog = Catalog()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if line.lstrip().startswith("#"):
            m = _SCENARIO_DIRECTIVE.match(line.strip())
            if m:
                scenario = Scenario.from_label(m.group(1))
            continue
        if "\t" in line:
            name, body = line.split("\t", 1)
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise CatalogError("expected NAME followed by coefficients", lineno, 1)
            name, body = parts
        name = name.strip()
        offset = line.find(body)
        body = body.strip()
        if _COMPACT.match(body):
            if scenario is None:
                raise CatalogError("compact line without a '# scenario' directive", lineno, offset + 1)
            try:
                ineq = parse_compact(body, scenario, name)
            except CatalogError as exc:
                raise CatalogError(str(exc), lineno, offset + 1) from None
        else:
            ineq = _parse_general(name, body, scenario, lineno, offset)
        catalog.add(ineq, lineno)
    return catalog


def parse_catalog(path, scenario=None):
    with open(path, encoding="utf-8") as fh:
        return parse_catalog_text(fh.read(), scenario)


def _fmt(v):
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def format_line(ineq, scenario=None):
    """One catalog line; compact when the inequality fits the digit encoding."""
    compact = (
        scenario == ineq.scenario
        and ineq.b0 == 0
        and all(v.denominator == 1 and -9 <= v <= 9 for v in ineq.vector)
    )
    if compact:
        return f"{ineq.name}\t" + "".join(str(int(v)) for v in ineq.vector)
    coeffs = " ".join(_fmt(v) for v in ineq.vector)
    return f"{ineq.name}\t{ineq.scenario.label}\t{coeffs} <= {_fmt(ineq.b0)}"


def format_catalog(catalog, scenario=None):
    lines = []
    if scenario is not None:
        lines.append(f"# scenario {scenario.label}")
    lines += [format_line(ineq, scenario) for ineq in catalog.values()]
    return "\n".join(lines) + "\n"


def write_catalog(catalog, path, scenario=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_catalog(catalog, scenario))


def builtin_text(filename):
    return resources.files("bellbound").joinpath("data", filename).read_text(encoding="utf-8")


def builtin_checksum(filename="j129.txt"):
    return hashlib.sha256(builtin_text(filename).encode("utf-8")).hexdigest()


_BUILTIN = None


def builtin_catalog():
    """All shipped inequalities, keyed by name."""
    global _BUILTIN
    if _BUILTIN is None:
        verify_builtin()
        cat = Catalog()
        for fname in BUILTIN_FILES:
            cat = cat.merged(parse_catalog_text(builtin_text(fname)))
        _BUILTIN = cat
    return _BUILTIN


class ChecksumError(BellError):
    pass


def verify_builtin():
    """Raise if the shipped J catalog file has drifted from its checksum."""
    got = builtin_checksum("j129.txt")
    if got != J129_SHA256:
        raise ChecksumError(f"j129.txt checksum {got} does not match {J129_SHA256}")


def _key(name):
    # I^{19}_{4422}, I19_4422 and i19_4422 all name the same entry
    return re.sub(r"[\^{}_\s]", "", str(name)).lower()


def get_inequality(name_or_path):
    """Look up a shipped inequality by name, or load the first entry of a catalog file."""
    cat = builtin_catalog()
    name = ALIASES.get(str(name_or_path), name_or_path)
    if name in cat:
        return cat[name]
    keyed = {_key(k): k for k in cat}
    keyed.update({_key(a): t for a, t in ALIASES.items() if t in cat})
    if _key(name) in keyed:
        return cat[keyed[_key(name)]]
    try:
        loaded = parse_catalog(name_or_path)
    except FileNotFoundError:
        raise KeyError(f"unknown inequality {name_or_path!r}") from None
    if not loaded:
        raise KeyError(f"{name_or_path!r} holds no inequalities")
    return next(iter(loaded.values()))
