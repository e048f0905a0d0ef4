"""Command-line interface.

Subcommands: classify | verify | transform | tables | dim.  Reports are
printed human-readably; `--json` writes a canonical machine-readable report,
and `--outdir` renders figures (PNG) next to delimited CSV output.

Exit codes: 0 success, 1 failed verification, 2 grammar error, 3 a
numeric-only classification when --require-exact is set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
import sympy as sp

from .classify import classify_full, classify_real, classify_subclass, numeric_dimension
from .equiv import EquivTransform, TransformError, transform_potential
from .lie import StructuredField
from .numverify import Grid, crank_nicolson, equation_residual, invariance_residual
from .symexpr import ParseError, parse, print_expr, t, x
from .tables import fixtures, render_table, self_test

GOOD_RATIO = (3.2, 4.8)
RESIDUAL_FLOOR = 1e-9


def canonical_json(record) -> str:
    """Deterministic JSON: sorted keys, 2-space indent, round-trip floats."""
    return json.dumps(_canonical(record), indent=2, sort_keys=True) + "\n"


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, float):
        return float(f"{obj:.17g}")
    return obj


def _split_top_level(text, sep=","):
    parts, depth, current = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    parts.append("".join(current))
    return parts


def _parse_interval(text):
    lo, hi = (float(v) for v in _split_top_level(text))
    return lo, hi


# ---------------------------------------------------------------------------
# classify


def cmd_classify(args) -> int:
    if args.subclass_gamma is not None:
        report = classify_subclass(args.subclass_gamma)
    elif args.real:
        report = classify_real(args.potential)
    else:
        report = classify_full(args.potential)

    print(
        f"Table {report.table}, Case {report.case}, dim {report.dim_ess}, "
        f"k=({report.k1},{report.k2})"
    )
    print(f"  canonical potential: {print_expr(report.canonical_potential)}")
    if report.mapping is not None:
        print(f"  mapping: {report.mapping}")
    print(f"  maximal: {report.maximal}")
    if report.violated_condition:
        print(f"  violated condition: {report.violated_condition}")
    print(f"  status: {report.status}")
    for field in report.basis:
        print(f"  basis: {field}")

    if args.t_interval:
        interval = _parse_interval(args.t_interval)
        source = (
            sp.I * parse(args.subclass_gamma) * x
            if args.subclass_gamma is not None
            else parse(args.potential)
        )
        dim = numeric_dimension(source, t_interval=interval)
        agree = "agrees" if dim == report.dim_ess else "DISAGREES"
        print(f"  numeric dimension on {interval}: {dim} ({agree})")

    record = report.to_json_dict()
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(canonical_json(record))
    if args.outdir:
        _write_classify_artifacts(args, report, record)
    if args.require_exact and report.status == "numeric-only":
        return 3
    return 0


def _write_classify_artifacts(args, report, record):
    os.makedirs(args.outdir, exist_ok=True)
    with open(os.path.join(args.outdir, "report.json"), "w") as fh:
        fh.write(canonical_json(record))
    with open(os.path.join(args.outdir, "basis.csv"), "w") as fh:
        fh.write("tau,chi,sigma,rho\n")
        for field in report.basis:
            row = field.to_dict()
            fh.write(
                f"{row['tau']},{row['chi']},{row['sigma']},{row['rho']}\n"
            )
    _plot_potential(args, report)


def _plot_potential(args, report):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if args.subclass_gamma is not None:
        V = sp.I * parse(args.subclass_gamma) * x
    else:
        V = parse(args.potential)
    singular = sp.fraction(sp.together(V))[1].has(x)
    xs = np.linspace(0.5, 7.0, 400) if singular else np.linspace(-5.0, 5.0, 400)
    fn = sp.lambdify((t, x), V, modules=[{"sign": np.sign, "Abs": np.abs}, "numpy"])
    values = np.asarray(fn(np.full_like(xs, 1.0), xs), dtype=complex)
    values = np.broadcast_to(values, xs.shape)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, values.real, label="Re V(1, x)")
    ax.plot(xs, values.imag, label="Im V(1, x)", linestyle="--")
    ax.set_xlabel("x")
    ax.set_title(
        f"Table {report.table} Case {report.case} "
        f"(dim {report.dim_ess}, k=({report.k1},{report.k2}))"
    )
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(args.outdir, "potential.png"), dpi=120)
    plt.close(fig)


# ---------------------------------------------------------------------------
# verify


def _field_from_text(text):
    parts = _split_top_level(text)
    if len(parts) != 4:
        raise ParseError("--field expects four components tau,chi,sigma,rho", 0)
    tau, chi, sigma, rho = (parse(p.strip() or "0") for p in parts)
    return StructuredField(tau, chi, sigma, rho)


def _verification_setup(V, args):
    singular = sp.fraction(sp.together(V))[1].has(x)
    x_min = args.xmin if args.xmin is not None else (0.5 if singular else -12.0)
    x_max = args.xmax if args.xmax is not None else (7.0 if singular else 12.0)
    t_min, t_max = args.tmin, args.tmax
    if t_min is None or t_max is None:
        # keep clear of time singularities (e.g. |t|^(-3/2) profiles)
        probe = V.subs({t: 0, x: sp.nsimplify((x_min + x_max) / 2 + 0.125, rational=True)})
        try:
            regular_at_zero = bool(sp.N(sp.Abs(probe)) < sp.oo)
        except (TypeError, ValueError):
            regular_at_zero = False
        t_min = t_min if t_min is not None else (0.0 if regular_at_zero else 0.5)
        t_max = t_max if t_max is not None else t_min + 0.1
    grid = Grid(x_min, x_max, args.nx, t_min, t_max, args.nt)
    center = sp.Rational(sp.nsimplify((x_min + x_max) / 2, rational=True))
    width = sp.Rational(sp.nsimplify((x_max - x_min) / 16, rational=True))
    initial = sp.exp(-(((x - center) / width) ** 2))
    return grid, initial


def _converged(coarse, fine):
    if fine < RESIDUAL_FLOOR:
        return True
    ratio = coarse / fine
    return GOOD_RATIO[0] <= ratio <= GOOD_RATIO[1]


def cmd_verify(args) -> int:
    if args.case is not None:
        matches = [f for f in fixtures(args.table) if f.case == args.case]
        if not matches:
            print(f"no fixture with case id {args.case!r}", file=sys.stderr)
            return 1
        fixture = matches[0]
        potential = fixture.instantiate()[0]
        V = sp.I * potential * x if fixture.gamma_form else potential
        fields = list(fixture.basis)
    else:
        V = parse(args.potential)
        fields = [_field_from_text(args.field)]

    grid, initial = _verification_setup(V, args)
    coarse_sol = crank_nicolson(V, initial, grid)
    fine_sol = crank_nicolson(V, initial, grid.refined())

    rows = []
    all_ok = True
    for field in fields:
        coarse = invariance_residual(V, field, coarse_sol)
        fine = invariance_residual(V, field, fine_sol)
        ok = _converged(coarse, fine)
        all_ok = all_ok and ok
        rows.append((str(field), coarse, fine, ok))

    eq_coarse = equation_residual(coarse_sol, V)
    eq_fine = equation_residual(fine_sol, V)
    print(f"potential: {print_expr(V)}")
    print(f"grid: {grid.n_x} x {grid.n_t} on [{grid.x_min}, {grid.x_max}] x [{grid.t0}, {grid.t1}]")
    print(f"equation residual: {eq_coarse:.3e} -> {eq_fine:.3e} (ratio {eq_coarse / max(eq_fine, 1e-300):.2f})")
    print(f"{'field':<40} {'coarse':>12} {'fine':>12} {'ratio':>8}  verdict")
    for name, coarse, fine, ok in rows:
        ratio = coarse / max(fine, 1e-300)
        verdict = "pass" if ok else "FAIL"
        print(f"{name:<40} {coarse:>12.3e} {fine:>12.3e} {ratio:>8.2f}  {verdict}")

    if args.outdir:
        _write_verify_artifacts(args, rows)
    return 0 if all_ok else 1


def _write_verify_artifacts(args, rows):
    os.makedirs(args.outdir, exist_ok=True)
    with open(os.path.join(args.outdir, "residuals.csv"), "w") as fh:
        fh.write("field,coarse_residual,fine_residual,ratio,converged\n")
        for name, coarse, fine, ok in rows:
            ratio = coarse / max(fine, 1e-300)
            fh.write(f'"{name}",{coarse:.17g},{fine:.17g},{ratio:.17g},{ok}\n')

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    idx = np.arange(len(rows))
    width = 0.4
    ax.bar(idx - width / 2, [r[1] for r in rows], width, label="coarse")
    ax.bar(idx + width / 2, [r[2] for r in rows], width, label="fine (halved steps)")
    ax.set_yscale("log")
    ax.set_xticks(idx)
    ax.set_xticklabels([r[0] for r in rows], rotation=30, ha="right", fontsize=7)
    ax.set_ylabel("invariance residual")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(args.outdir, "convergence.png"), dpi=120)
    plt.close(fig)


# ---------------------------------------------------------------------------
# transform / tables / dim


def cmd_transform(args) -> int:
    g = EquivTransform(
        parse(args.T) if args.T else t,
        parse(args.X0) if args.X0 else 0,
        parse(args.Sigma) if args.Sigma else 0,
        parse(args.Upsilon) if args.Upsilon else 0,
        eps=args.eps,
    )
    moved = sp.expand(sp.simplify(transform_potential(parse(args.potential), g)))
    try:
        print(print_expr(moved))
    except (ValueError, NotImplementedError):
        print(f"numeric-only (outside the printable grammar): {moved}")
    return 0


def cmd_tables(args) -> int:
    if args.self_test:
        results, summary = self_test(args.table)
        for fixture, ok in results:
            if not ok:
                print(f"MISMATCH: table {fixture.table} case {fixture.case}")
        print(summary)
        return 0 if all(ok for _, ok in results) else 1
    tables = (args.table,) if args.table else (1, 2, 3)
    print("\n\n".join(render_table(n) for n in tables))
    return 0


def cmd_dim(args) -> int:
    interval = _parse_interval(args.t_interval) if args.t_interval else (0.5, 2.5)
    dim, gap = numeric_dimension(parse(args.potential), t_interval=interval, detail=True)
    print(f"dim {dim} (singular-value gap {gap:.3e})")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schrodclass",
        description="Lie symmetry classification of i*psi_t + psi_xx + V(t,x)*psi = 0",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify a potential")
    p.add_argument("--potential", help="potential V(t,x) in grammar form")
    p.add_argument("--real", action="store_true", help="use the real-potential table")
    p.add_argument(
        "--subclass-gamma",
        help="classify V = i*gamma(t)*x against the subclass table",
    )
    p.add_argument("--json", help="write the report as canonical JSON")
    p.add_argument("--t-interval", help="cross-check dimension numerically on a,b")
    p.add_argument("--require-exact", action="store_true")
    p.add_argument("--outdir", help="write report.json, basis.csv, potential.png")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify", help="numerically verify symmetry fields")
    p.add_argument("--case", help="fixture case id (with --table)")
    p.add_argument("--table", type=int, default=1)
    p.add_argument("--potential", help="explicit potential (with --field)")
    p.add_argument("--field", help='field components "tau,chi,sigma,rho"')
    p.add_argument("--nx", type=int, default=256)
    p.add_argument("--nt", type=int, default=1024)
    p.add_argument("--xmin", type=float)
    p.add_argument("--xmax", type=float)
    p.add_argument("--tmin", type=float)
    p.add_argument("--tmax", type=float)
    p.add_argument("--outdir", help="write residuals.csv and convergence.png")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("transform", help="apply an equivalence transformation")
    p.add_argument("--potential", required=True)
    p.add_argument("--T")
    p.add_argument("--X0")
    p.add_argument("--Sigma")
    p.add_argument("--Upsilon")
    p.add_argument("--eps", type=int, default=1, choices=(1, -1))
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("tables", help="print or self-test the table fixtures")
    p.add_argument("--table", type=int, choices=(1, 2, 3))
    p.add_argument("--self-test", action="store_true")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("dim", help="numeric dimension oracle")
    p.add_argument("--potential", required=True)
    p.add_argument("--t-interval", help="sampling interval a,b (default 0.5,2.5)")
    p.set_defaults(func=cmd_dim)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "classify" and not (args.potential or args.subclass_gamma):
        print("classify needs --potential or --subclass-gamma", file=sys.stderr)
        return 2
    if args.command == "verify" and args.case is None and not (
        args.potential and args.field
    ):
        print("verify needs --case or --potential with --field", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"grammar error: {exc}", file=sys.stderr)
        return 2
    except (TransformError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
