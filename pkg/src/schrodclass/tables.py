"""Classification table fixtures.

Instantiated representatives of every case of the three classification
tables (complex potentials, the linear-imaginary subclass, real potentials),
each bundling a concrete potential, the expected invariants, and the
expected symmetry-field basis.  The self-test reclassifies every fixture and
checks that the engine reproduces its own row.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import sympy as sp

from .classify import classify_full, classify_real, classify_subclass
from .lie import D, G, I, M, StructuredField
from .symexpr import parse, t

__all__ = ["TableFixture", "FIXTURES", "fixtures", "self_test", "render_table"]


@dataclass(frozen=True)
class TableFixture:
    """One instantiated table row."""

    table: int
    case: str
    k1: int
    k2: int
    #: grammar strings; several entries when the row allows distinct constants
    potentials: tuple
    dim: int
    basis: tuple
    #: condition under which the row is the maximal (not higher) case
    maximality: str = ""
    #: for table 2, the potential strings are the gamma profiles of i*gamma*x
    gamma_form: bool = False

    def instantiate(self):
        """Parsed potential expressions (or gamma profiles for table 2)."""
        return tuple(parse(p) for p in self.potentials)

    def classify(self, potential_text):
        if self.table == 1:
            return classify_full(potential_text)
        if self.table == 2:
            return classify_subclass(potential_text)
        return classify_real(potential_text)

    def check(self):
        """True when every instantiation reclassifies to this row."""
        for text in self.potentials:
            report = self.classify(text)
            if (
                report.case != self.case
                or (report.k1, report.k2) != (self.k1, self.k2)
                or report.dim_ess != self.dim
            ):
                return False
        return True


def _f(*args, **kwargs):
    return TableFixture(*args, **kwargs)


_HALF = sp.Rational(1, 2)

FIXTURES = (
    # -- complex potentials -------------------------------------------------
    _f(
        1,
        "1",
        0,
        0,
        ("x^3 + t*x",),
        2,
        (M, I),
        maximality="no nonzero (tau, chi) solves the classifying condition",
    ),
    _f(
        1,
        "2",
        0,
        2,
        ("i*t*x",),
        4,
        (
            M,
            I,
            G(1) - StructuredField(rho=t**2 / 2),
            G(t) - StructuredField(rho=t**3 / 3),
        ),
        maximality="gamma not of the form c*|quadratic|^(-3/2) up to Moebius "
        "reparameterization",
    ),
    _f(
        1,
        "3",
        1,
        0,
        ("exp(x)",),
        3,
        (M, I, D(1)),
        maximality="V(x) not of the form b2*x^2 + b1*x + b0 + c*(x+a)^(-2) "
        "with c*Im(b1) = 0",
    ),
    _f(
        1,
        "4a",
        1,
        2,
        ("x^2/4 + i*x",),
        5,
        (
            M,
            I,
            D(1),
            G(sp.exp(t)) - StructuredField(rho=sp.exp(t)),
            G(sp.exp(-t)) + StructuredField(rho=sp.exp(-t)),
        ),
        maximality="b > 0 after normalization",
    ),
    _f(
        1,
        "4b",
        1,
        2,
        ("-1*x^2/4 + i*x",),
        5,
        (
            M,
            I,
            D(1),
            G(sp.cos(t)) - StructuredField(rho=sp.sin(t)),
            G(sp.sin(t)) + StructuredField(rho=sp.cos(t)),
        ),
        maximality="b > 0 after normalization",
    ),
    _f(
        1,
        "4c",
        1,
        2,
        ("i*x",),
        5,
        (
            M,
            I,
            D(1),
            G(1) - StructuredField(rho=t),
            G(t) - StructuredField(rho=t**2 / 2),
        ),
        maximality="b > 0 after normalization",
    ),
    _f(
        1,
        "5",
        3,
        0,
        ("1/x^2", "i/x^2"),
        5,
        (M, I, D(1), D(t), D(t**2) - _HALF * StructuredField(rho=t)),
        maximality="c != 0 (any nonzero complex constant)",
    ),
    _f(
        1,
        "6",
        3,
        2,
        ("0",),
        7,
        (
            M,
            I,
            D(1),
            D(t),
            D(t**2) - _HALF * StructuredField(rho=t),
            G(1),
            G(t),
        ),
    ),
    # -- linear-imaginary subclass (gamma profiles of V = i*gamma(t)*x) -----
    _f(
        2,
        "1",
        0,
        2,
        ("t",),
        4,
        (
            M,
            I,
            G(1) - StructuredField(rho=t**2 / 2),
            G(t) - StructuredField(rho=t**3 / 3),
        ),
        maximality="gamma not of the form c*|quadratic|^(-3/2) up to Moebius "
        "reparameterization",
        gamma_form=True,
    ),
    _f(
        2,
        "2a",
        1,
        2,
        ("1",),
        5,
        (
            M,
            I,
            D(1),
            G(1) - StructuredField(rho=t),
            G(t) - StructuredField(rho=t**2 / 2),
        ),
        maximality="b > 0 after normalization",
        gamma_form=True,
    ),
    _f(
        2,
        "2b",
        1,
        2,
        ("abs(t)^(-3/2)",),
        5,
        (
            M,
            I,
            D(t),
            G(1) + 2 * StructuredField(rho=t * sp.Abs(t) ** sp.Rational(-3, 2)),
            G(t) - 2 * StructuredField(rho=t**2 * sp.Abs(t) ** sp.Rational(-3, 2)),
        ),
        maximality="b > 0 after normalization; quadratic with two distinct "
        "real roots",
        gamma_form=True,
    ),
    _f(
        2,
        "2c",
        1,
        2,
        ("(t^2+1)^(-3/2)",),
        5,
        (
            M,
            I,
            D(t**2 + 1) - _HALF * StructuredField(rho=t),
            G(1) - StructuredField(rho=t * (t**2 + 1) ** -_HALF),
            G(t) + StructuredField(rho=(t**2 + 1) ** -_HALF),
        ),
        maximality="b > 0 after normalization; quadratic with no real roots",
        gamma_form=True,
    ),
    _f(
        2,
        "3",
        3,
        2,
        ("0",),
        7,
        (
            M,
            I,
            D(1),
            D(t),
            D(t**2) - _HALF * StructuredField(rho=t),
            G(1),
            G(t),
        ),
        gamma_form=True,
    ),
    # -- real potentials ----------------------------------------------------
    _f(
        3,
        "1",
        0,
        0,
        ("x^3 + t*x",),
        2,
        (M, I),
        maximality="no nonzero (tau, chi) solves the classifying condition",
    ),
    _f(
        3,
        "2",
        1,
        0,
        ("sin(x)",),
        3,
        (M, I, D(1)),
        maximality="V(x) not of the form b2*x^2 + b1*x + b0 + c*(x+a)^(-2) "
        "with real constants",
    ),
    _f(
        3,
        "3",
        3,
        0,
        ("1/x^2",),
        5,
        (M, I, D(1), D(t), D(t**2) - _HALF * StructuredField(rho=t)),
        maximality="c != 0 (real)",
    ),
    _f(
        3,
        "4",
        3,
        2,
        ("0",),
        7,
        (
            M,
            I,
            D(1),
            D(t),
            D(t**2) - _HALF * StructuredField(rho=t),
            G(1),
            G(t),
        ),
    ),
)


def fixtures(table=None):
    """All fixtures, optionally restricted to one table."""
    if table is None:
        return list(FIXTURES)
    return [f for f in FIXTURES if f.table == table]


def self_test(table=None):
    """(results, summary): per-fixture pass/fail and a one-line summary."""
    chosen = fixtures(table)
    results = [(fixture, fixture.check()) for fixture in chosen]
    passed = sum(1 for _, ok in results if ok)
    summary = f"{passed}/{len(results)} fixtures reproduced"
    return results, summary


def render_table(table):
    """Plain-text listing of one table's fixtures."""
    lines = [f"Table {table}"]
    for fixture in fixtures(table):
        potentials = ", ".join(fixture.potentials)
        if fixture.gamma_form:
            potentials = f"gamma = {potentials}"
        basis = "; ".join(str(q) for q in fixture.basis)
        lines.append(
            f"  Case {fixture.case}: k=({fixture.k1},{fixture.k2}), "
            f"dim {fixture.dim}, {potentials}"
        )
        lines.append(f"    basis: {basis}")
        if fixture.maximality:
            lines.append(f"    maximal iff: {fixture.maximality}")
    return "\n".join(lines)
