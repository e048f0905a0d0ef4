import json

import pytest

from schrodclass.cli import canonical_json, main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestClassifyCommand:
    def test_inverse_square(self, capsys):
        code, out, _ = run(capsys, "classify", "--potential", "1/x^2")
        assert code == 0
        assert "Table 1, Case 5, dim 5, k=(3,0)" in out

    def test_subclass(self, capsys):
        code, out, _ = run(capsys, "classify", "--subclass-gamma", "abs(t)^(-3/2)")
        assert code == 0
        assert "Table 2, Case 2b" in out

    def test_real_linear_maps_to_free(self, capsys):
        code, out, _ = run(capsys, "classify", "--potential", "x", "--real")
        assert code == 0
        assert "Table 3, Case 4, dim 7" in out
        assert "mapping:" in out

    def test_free(self, capsys):
        code, out, _ = run(capsys, "classify", "--potential", "0")
        assert code == 0
        assert "Table 1, Case 6, dim 7" in out

    def test_numeric_cross_check(self, capsys):
        code, out, _ = run(
            capsys, "classify", "--potential", "i*x", "--t-interval", "0.5,2.5"
        )
        assert code == 0
        assert "numeric dimension on (0.5, 2.5): 5 (agrees)" in out

    def test_grammar_error(self, capsys):
        code, _, err = run(capsys, "classify", "--potential", "x +")
        assert code == 2
        assert "grammar error" in err

    def test_missing_potential(self, capsys):
        code, _, err = run(capsys, "classify")
        assert code == 2

    def test_json_report(self, capsys, tmp_path):
        path = tmp_path / "report.json"
        code, _, _ = run(
            capsys, "classify", "--potential", "i*x", "--json", str(path)
        )
        assert code == 0
        raw = path.read_text()
        record = json.loads(raw)
        assert record["case"] == "4c"
        assert set(record) == {
            "table",
            "case",
            "k1",
            "k2",
            "dim_ess",
            "basis",
            "canonical_potential",
            "mapping",
            "maximal",
            "violated_condition",
            "status",
        }
        # canonical serialization round-trips byte-identically
        assert canonical_json(record) == raw

    def test_require_exact_on_numeric_only(self, capsys, monkeypatch):
        import schrodclass.cli as cli

        real = cli.classify_full

        def degraded(text):
            report = real(text)
            object.__setattr__(report, "status", "numeric-only")
            return report

        monkeypatch.setattr(cli, "classify_full", degraded)
        code, _, _ = run(
            capsys, "classify", "--potential", "i*x", "--require-exact"
        )
        assert code == 3
        code, _, _ = run(capsys, "classify", "--potential", "i*x")
        assert code == 0

    def test_outdir_artifacts(self, capsys, tmp_path):
        outdir = tmp_path / "artifacts"
        code, _, _ = run(
            capsys, "classify", "--potential", "1/x^2", "--outdir", str(outdir)
        )
        assert code == 0
        assert (outdir / "report.json").exists()
        assert (outdir / "potential.png").stat().st_size > 0
        lines = (outdir / "basis.csv").read_text().strip().splitlines()
        assert lines[0] == "tau,chi,sigma,rho"
        assert len(lines) == 6


class TestVerifyCommand:
    def test_explicit_field(self, capsys):
        code, out, _ = run(
            capsys,
            "verify",
            "--potential",
            "0",
            "--field",
            "0,1,0,0",
            "--nx",
            "128",
            "--nt",
            "128",
        )
        assert code == 0
        assert "pass" in out

    def test_case_fixture(self, capsys):
        code, out, _ = run(
            capsys, "verify", "--case", "6", "--nx", "128", "--nt", "64"
        )
        assert code == 0
        assert out.count("pass") == 7

    def test_corrupted_field_fails(self, capsys):
        code, out, _ = run(
            capsys,
            "verify",
            "--potential",
            "0",
            "--field",
            "0,1,0,t/10",
            "--nx",
            "128",
            "--nt",
            "128",
        )
        assert code == 1
        assert "FAIL" in out

    def test_missing_arguments(self, capsys):
        code, _, _ = run(capsys, "verify")
        assert code == 2

    def test_outdir_artifacts(self, capsys, tmp_path):
        outdir = tmp_path / "v"
        code, _, _ = run(
            capsys,
            "verify",
            "--case",
            "5",
            "--nx",
            "128",
            "--nt",
            "128",
            "--outdir",
            str(outdir),
        )
        assert code == 0
        lines = (outdir / "residuals.csv").read_text().strip().splitlines()
        assert lines[0] == "field,coarse_residual,fine_residual,ratio,converged"
        assert len(lines) == 6
        assert (outdir / "convergence.png").stat().st_size > 0


class TestTransformCommand:
    def test_identity(self, capsys):
        code, out, _ = run(capsys, "transform", "--potential", "i*x")
        assert code == 0
        assert out.strip() == "i*x"

    def test_galilean_boost(self, capsys):
        code, out, _ = run(
            capsys, "transform", "--potential", "0", "--X0", "t", "--Sigma", "t/4"
        )
        assert code == 0
        assert out.strip() == "0"

    def test_decaying_source_to_quadratic(self, capsys):
        code, out, _ = run(
            capsys,
            "transform",
            "--potential",
            "i*abs(t)^(-3/2)*x",
            "--T",
            "sgn(t)/4*ln(abs(t))",
            "--Upsilon",
            "ln(abs(t))/4",
        )
        assert code == 0
        assert out.strip() == "x^2 + 8*i*x"

    def test_grammar_error(self, capsys):
        code, _, err = run(capsys, "transform", "--potential", "(x")
        assert code == 2


class TestTablesCommand:
    def test_listing(self, capsys):
        code, out, _ = run(capsys, "tables", "--table", "2")
        assert code == 0
        assert out.count("Case ") == 5

    def test_all_tables(self, capsys):
        code, out, _ = run(capsys, "tables")
        assert code == 0
        assert out.count("Case ") == 17

    def test_self_test_one_table(self, capsys):
        code, out, _ = run(capsys, "tables", "--table", "3", "--self-test")
        assert code == 0
        assert "4/4 fixtures reproduced" in out


class TestDimCommand:
    def test_inverse_square(self, capsys):
        code, out, _ = run(capsys, "dim", "--potential", "1/x^2")
        assert code == 0
        assert out.startswith("dim 5")

    def test_interval_flag(self, capsys):
        code, out, _ = run(
            capsys, "dim", "--potential", "t + x^4", "--t-interval", "0.5,2.5"
        )
        assert code == 0
        assert out.startswith("dim 3")
