"""End-to-end acceptance suite.

Each test class corresponds to one acceptance criterion: table reproduction,
the symbolic residual sweep, commutator consistency, the numeric dimension
oracle, group laws, pinned canonical-mapping regressions, PDE verification,
and the randomized invariant sweep.
"""

import random

import pytest
import sympy as sp

from schrodclass.classify import (
    classify_full,
    classifying_residual,
    numeric_dimension,
)
from schrodclass.equiv import (
    AdmissibleTransform,
    EquivTransform,
    compose,
    inverse,
    transform_potential,
)
from schrodclass.lie import (
    D,
    G,
    I,
    M,
    StructuredField,
    commutator,
    commutator_via_coefficients,
)
from schrodclass.numverify import (
    Grid,
    crank_nicolson,
    invariance_residual,
    verify_map,
)
from schrodclass.symexpr import is_zero, parse, t, x
from schrodclass.tables import FIXTURES, fixtures, self_test


class TestCriterion1TableReproduction:
    def test_all_fixtures_reproduced(self):
        results, summary = self_test()
        failed = [(f.table, f.case) for f, ok in results if not ok]
        assert summary == "17/17 fixtures reproduced", failed

    def test_complex_table_dimensions(self):
        assert [f.dim for f in fixtures(1)] == [2, 4, 3, 5, 5, 5, 5, 7]


class TestCriterion2ResidualSuite:
    def test_fixture_bases_annihilate_classifying_condition(self):
        checks = 0
        for fixture in FIXTURES:
            for potential in fixture.instantiate():
                V = sp.I * potential * x if fixture.gamma_form else potential
                for field in fixture.basis:
                    verdict = is_zero(classifying_residual(V, field))
                    assert verdict, (fixture.table, fixture.case, str(field))
                    checks += 1
        assert checks >= 40


def _random_field(rng):
    def poly():
        return sum(
            sp.Rational(rng.randint(-3, 3)) * t**k for k in range(rng.randint(1, 4))
        )

    return StructuredField(poly(), poly(), poly(), poly())


class TestCriterion3CommutatorConsistency:
    def test_closed_form_matches_coefficient_bracket(self):
        rng = random.Random(2024)
        for _ in range(50):
            q1, q2 = _random_field(rng), _random_field(rng)
            assert commutator(q1, q2) == commutator_via_coefficients(q1, q2)

    def test_jacobi_identity(self):
        generators = [
            D(1),
            D(t),
            D(t**2),
            G(1),
            G(t),
            M,
            I,
        ]
        for a in generators:
            for b in generators:
                for c in generators:
                    total = (
                        commutator(a, commutator(b, c))
                        + commutator(b, commutator(c, a))
                        + commutator(c, commutator(a, b))
                    )
                    assert all(sp.expand(p) == 0 for p in total.params())


class TestCriterion4NumericOracle:
    def test_dimension_and_gap_on_all_fixtures(self):
        for fixture in FIXTURES:
            for potential in fixture.instantiate():
                V = sp.I * potential * x if fixture.gamma_form else potential
                dim, gap = numeric_dimension(V, detail=True)
                assert dim == fixture.dim, (fixture.table, fixture.case)
                assert gap >= 1e4, (fixture.table, fixture.case, gap)


class TestCriterion5GroupLaws:
    def test_round_trips(self):
        rng = random.Random(31)
        times = [2 * t, t + 1, t / 2, 3 * t - 1]
        shifts = [sp.S.Zero, sp.S.One, t, t**2 / 2]
        phases = [sp.S.Zero, t, t**2]
        potentials = [
            sp.S.Zero,
            x**2,
            x ** (-2),
            sp.I * x,
            x**3 + t * x,
            sp.exp(x),
        ]
        for _ in range(200):
            g = EquivTransform(
                rng.choice(times),
                rng.choice(shifts),
                rng.choice(phases),
                rng.choice(phases),
                rng.choice([1, -1]),
            )
            V = rng.choice(potentials)
            back = transform_potential(transform_potential(V, g), inverse(g))
            assert is_zero(sp.simplify(back - V)), (V, g)

    def test_compose_inverse_is_identity(self):
        rng = random.Random(32)
        times = [2 * t, t + 1, t / 2]
        for _ in range(25):
            g = EquivTransform(
                rng.choice(times), rng.choice([sp.S.Zero, t]), t**2, 0
            )
            assert compose(g, inverse(g)).is_identity


class TestCriterion6MappingRegressions:
    """Pinned images of the decaying and smooth linear-imaginary sources
    under their canonical time reparameterizations."""

    def test_decaying_source_quarter_log(self):
        # T = sgn(t)/4 * ln|t| with the amplitude conversion Upsilon =
        # -ln|T_t|/4 sends i*b*|t|^(-3/2)*x to x^2 + 8i*b*x (pinned).
        for b in (1, 2):
            V = sp.I * b * sp.Abs(t) ** sp.Rational(-3, 2) * x
            g = EquivTransform(
                sp.sign(t) / 4 * sp.log(sp.Abs(t)),
                0,
                0,
                sp.log(sp.Abs(t)) / 4,
            )
            image = sp.expand(sp.simplify(transform_potential(V, g)))
            assert is_zero(image - (x**2 + 8 * sp.I * b * x)), image

    def test_decaying_source_half_log(self):
        # the extra time scaling T = sgn(t)/2 * ln|t| lands on the canonical
        # x^2/4 + i*b~*x shape with b~ = 2*sqrt(2)*b (pinned)
        V = sp.I * sp.Abs(t) ** sp.Rational(-3, 2) * x
        g = EquivTransform(
            sp.sign(t) / 2 * sp.log(sp.Abs(t)),
            0,
            0,
            sp.log(sp.Abs(t)) / 4 + sp.log(2) / 4,
        )
        image = sp.expand(sp.simplify(transform_potential(V, g)))
        assert is_zero(image - (x**2 / 4 + 2 * sp.sqrt(2) * sp.I * x)), image

    def test_smooth_source_arctangent(self):
        # T = arctan(t) with Upsilon = ln(1+t^2)/4 sends
        # i*b*(t^2+1)^(-3/2)*x to -x^2/4 + i*b*x, with b~ = b unchanged
        for b in (1, 3):
            V = sp.I * b * (t**2 + 1) ** sp.Rational(-3, 2) * x
            g = EquivTransform(sp.atan(t), 0, 0, sp.log(t**2 + 1) / 4)
            image = sp.expand(sp.simplify(transform_potential(V, g)))
            assert is_zero(image - (-(x**2) / 4 + sp.I * b * x)), image

    def test_classifier_reports_matching_canonical_forms(self):
        report = classify_full(sp.I * sp.Abs(t) ** sp.Rational(-3, 2) * x)
        assert report.case == "4a"
        assert is_zero(
            report.canonical_potential
            - (x**2 / 4 + 2 * sp.sqrt(2) * sp.I * x)
        )
        report = classify_full(3 * sp.I * (t**2 + 1) ** sp.Rational(-3, 2) * x)
        assert report.case == "4b"
        assert is_zero(report.canonical_potential - (-(x**2) / 4 + 3 * sp.I * x))


def _pde_setup(case):
    if case == "3":
        V = sp.exp(x)
        grid = Grid(-6.0, 2.0, 256, 0.0, 0.1, 1024)
        initial = sp.exp(-4 * (x + 2) ** 2)
        adm = AdmissibleTransform(EquivTransform(t + sp.Rational(1, 2)))
    elif case == "4c":
        V = sp.I * x
        grid = Grid(-12.0, 12.0, 256, 0.0, 0.1, 1024)
        initial = sp.exp(-((2 * x / 3) ** 2))
        adm = AdmissibleTransform(EquivTransform(t + sp.Rational(1, 2)))
    elif case == "5":
        V = x ** (-2)
        grid = Grid(0.5, 7.0, 256, 0.0, 0.1, 1024)
        initial = sp.exp(-4 * (x - sp.Rational(15, 4)) ** 2)
        adm = AdmissibleTransform(EquivTransform(4 * t))
    else:  # case 6
        V = sp.S.Zero
        grid = Grid(-12.0, 12.0, 256, 0.0, 0.1, 1024)
        initial = sp.exp(-((2 * x / 3) ** 2))
        adm = AdmissibleTransform(EquivTransform(t, t, t / 4))
    basis = next(
        f.basis for f in fixtures(1) if f.case == case
    )
    return V, grid, initial, adm, basis


class TestCriterion7PDEVerification:
    @pytest.mark.parametrize("case", ["3", "4c", "5", "6"])
    def test_invariance_and_map_convergence(self, case):
        V, grid, initial, adm, basis = _pde_setup(case)
        coarse = crank_nicolson(V, initial, grid)
        fine = crank_nicolson(V, initial, grid.refined())

        finest_good = None
        for field in basis:
            r1 = invariance_residual(V, field, coarse)
            r2 = invariance_residual(V, field, fine)
            assert r2 < 1e-9 or 3.2 <= r1 / r2 <= 4.8, (case, str(field), r1, r2)
            finest_good = r2 if finest_good is None else max(finest_good, r2)

        corrupted = basis[-1] + StructuredField(rho=t / 10)
        r_bad = invariance_residual(V, corrupted, fine)
        assert r_bad >= 10 * finest_good, (case, r_bad, finest_good)

        b1, a1 = verify_map(adm, V, coarse)
        b2, a2 = verify_map(adm, V, fine)
        assert a1 <= 5 * b1 + 10 * grid.dx**2
        assert a2 < 1e-9 or 3.2 <= a1 / a2 <= 4.8, (case, a1, a2)


def _random_corpus(count):
    rng = random.Random(8123)
    pool = []
    while len(pool) < count:
        kind = rng.randrange(6)
        a = rng.randint(1, 4)
        b = rng.randint(-3, 3) or 1
        if kind == 0:  # generic: essential dependence on both variables
            pool.append(f"x^3 + {a}*t*x")
        elif kind == 1:  # static polynomial
            pool.append(f"{b}*x^{rng.choice([3, 4])} + {a}*x")
        elif kind == 2:  # linear imaginary
            gamma = rng.choice(["1", "t", f"{a}", f"{a}*t", "abs(t)^(-3/2)"])
            pool.append(f"i*({gamma})*x")
        elif kind == 3:  # inverse-square family
            pool.append(f"{a}/x^2")
        elif kind == 4:  # quadratic (free-equation orbit)
            pool.append(f"{b}*x^2 + {a}*x + 1")
        else:  # static transcendental
            pool.append(rng.choice([f"exp({b}*x)", f"sin({a}*x)", "ln(x)"]))
    return pool


class TestCriterion8InvariantSweep:
    def test_corpus_invariants_and_stability(self):
        rng = random.Random(914)
        times = [2 * t, t + 1, t / 2]
        shifts = [sp.S.Zero, sp.S.One]
        phases = [sp.S.Zero, t]
        for text in _random_corpus(100):
            report = classify_full(text)
            assert report.k1 in (0, 1, 3), text
            assert report.k2 in (0, 2), text
            assert report.dim_ess <= 7, text
            assert report.dim_ess == report.k1 + report.k2 + 2, text

            g = EquivTransform(
                rng.choice(times), rng.choice(shifts), rng.choice(phases)
            )
            moved = sp.simplify(transform_potential(parse(text), g))
            again = classify_full(moved)
            assert again.case == report.case, (text, str(g))
            assert (again.k1, again.k2) == (report.k1, report.k2), text
