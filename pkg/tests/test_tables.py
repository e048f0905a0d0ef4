import sympy as sp

from schrodclass.classify import classifying_residual
from schrodclass.symexpr import is_zero, x
from schrodclass.tables import FIXTURES, fixtures, render_table, self_test


class TestFixtureInventory:
    def test_counts(self):
        assert len(FIXTURES) == 17
        assert len(fixtures(1)) == 8
        assert len(fixtures(2)) == 5
        assert len(fixtures(3)) == 4

    def test_case_ids(self):
        assert [f.case for f in fixtures(1)] == [
            "1",
            "2",
            "3",
            "4a",
            "4b",
            "4c",
            "5",
            "6",
        ]
        assert [f.case for f in fixtures(2)] == ["1", "2a", "2b", "2c", "3"]
        assert [f.case for f in fixtures(3)] == ["1", "2", "3", "4"]

    def test_expected_dimensions(self):
        assert [f.dim for f in fixtures(1)] == [2, 4, 3, 5, 5, 5, 5, 7]
        assert [f.dim for f in fixtures(2)] == [4, 5, 5, 5, 7]
        assert [f.dim for f in fixtures(3)] == [2, 3, 5, 7]

    def test_basis_sizes_match_dims(self):
        for fixture in FIXTURES:
            assert len(fixture.basis) == fixture.dim

    def test_invariant_ranges(self):
        for fixture in FIXTURES:
            assert fixture.k1 in (0, 1, 3)
            assert fixture.k2 in (0, 2)


class TestFixtureBases:
    def test_every_basis_field_satisfies_classifying_condition(self):
        checks = 0
        for fixture in FIXTURES:
            for potential in fixture.instantiate():
                V = sp.I * potential * x if fixture.gamma_form else potential
                for field in fixture.basis:
                    assert is_zero(classifying_residual(V, field)), (
                        fixture.table,
                        fixture.case,
                        str(field),
                    )
                    checks += 1
        assert checks >= 40


class TestSelfTest:
    def test_one_fixture_per_table(self):
        for table in (1, 2, 3):
            fixture = fixtures(table)[-1]
            assert fixture.check(), (table, fixture.case)

    def test_summary_format(self):
        results, summary = self_test(table=3)
        assert summary == "4/4 fixtures reproduced"
        assert all(ok for _, ok in results)


class TestRendering:
    def test_tables_render(self):
        for table, rows in ((1, 8), (2, 5), (3, 4)):
            text = render_table(table)
            assert text.startswith(f"Table {table}")
            assert sum(line.strip().startswith("Case ") for line in text.splitlines()) == rows
