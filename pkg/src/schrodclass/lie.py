"""Structured vector fields D(tau)+G(chi)+sigma*M+rho*I+Z(eta0), their
commutators, real spans and the adjoint analysis used during classification.

A field is stored by its five parameter functions; the coefficient form
(xi, psi-multiplier) is derived.  All parameters are sympy expressions in t
(eta0 in t and x).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import sympy as sp

from .symexpr import (
    EvalError,
    eval_expr,
    is_zero,
    normalize,
    parse,
    print_expr,
    t,
    x,
    zero_verdict,
)

SVD_RTOL = 1e-8


class SpanError(Exception):
    pass


@dataclass(frozen=True)
class StructuredField:
    tau: sp.Expr = sp.S.Zero
    chi: sp.Expr = sp.S.Zero
    sigma: sp.Expr = sp.S.Zero
    rho: sp.Expr = sp.S.Zero
    eta0: sp.Expr = sp.S.Zero

    def __post_init__(self):
        for name in ("tau", "chi", "sigma", "rho", "eta0"):
            object.__setattr__(self, name, normalize(getattr(self, name)))

    # -- algebra ------------------------------------------------------------

    def __add__(self, other):
        return StructuredField(
            self.tau + other.tau,
            self.chi + other.chi,
            self.sigma + other.sigma,
            self.rho + other.rho,
            self.eta0 + other.eta0,
        )

    def __sub__(self, other):
        return self + (-1) * other

    def __rmul__(self, scalar):
        return StructuredField(
            scalar * self.tau,
            scalar * self.chi,
            scalar * self.sigma,
            scalar * self.rho,
            scalar * self.eta0,
        )

    def __neg__(self):
        return (-1) * self

    # -- structure ----------------------------------------------------------

    @property
    def is_z_free(self):
        return self.eta0 == 0

    @property
    def is_zero_field(self):
        return all(p == 0 for p in self.params())

    def params(self):
        return (self.tau, self.chi, self.sigma, self.rho, self.eta0)

    def coefficient_form(self):
        """(xi, psi-multiplier, eta0) of the expanded vector field."""
        xi = sp.Rational(1, 2) * sp.diff(self.tau, t) * x + self.chi
        mult = (
            sp.I / 8 * sp.diff(self.tau, t, 2) * x**2
            + sp.I / 2 * sp.diff(self.chi, t) * x
            + self.rho
            + sp.I * self.sigma
        )
        return normalize(xi), normalize(mult), self.eta0

    def to_dict(self):
        return {
            name: ("" if value == 0 else print_expr(value))
            for name, value in zip(("tau", "chi", "sigma", "rho", "eta0"), self.params())
        }

    @classmethod
    def from_dict(cls, record):
        def get(name):
            text = record.get(name, "")
            return parse(text) if text else sp.S.Zero

        return cls(get("tau"), get("chi"), get("sigma"), get("rho"), get("eta0"))

    def __str__(self):
        parts = []
        if self.tau != 0:
            parts.append(f"D({print_expr(self.tau)})")
        if self.chi != 0:
            parts.append(f"G({print_expr(self.chi)})")
        if self.sigma != 0:
            parts.append(f"({print_expr(self.sigma)})M")
        if self.rho != 0:
            parts.append(f"({print_expr(self.rho)})I")
        if self.eta0 != 0:
            parts.append(f"Z({print_expr(self.eta0)})")
        return " + ".join(parts) if parts else "0"


def D(tau):
    return StructuredField(tau=sp.sympify(tau))


def G(chi):
    return StructuredField(chi=sp.sympify(chi))


M = StructuredField(sigma=sp.S.One)
I = StructuredField(rho=sp.S.One)


def Z(eta0):
    return StructuredField(eta0=sp.sympify(eta0))


# ---------------------------------------------------------------------------
# commutators

def _act_on_z(Q, zeta):
    """Action of a Z-free field on the Z-parameter, from the closed-form
    bracket relations [.,Z(zeta)]."""
    out = (
        Q.tau * sp.diff(zeta, t)
        + sp.Rational(1, 2) * sp.diff(Q.tau, t) * x * sp.diff(zeta, x)
        - sp.I / 8 * sp.diff(Q.tau, t, 2) * x**2 * zeta
        + Q.chi * sp.diff(zeta, x)
        - sp.I / 2 * sp.diff(Q.chi, t) * x * zeta
        - sp.I * Q.sigma * zeta
        - Q.rho * zeta
    )
    return out


def commutator(Q1, Q2):
    """Closed-form bracket on structured fields."""
    t1, c1 = Q1.tau, Q1.chi
    t2, c2 = Q2.tau, Q2.chi
    tau = t1 * sp.diff(t2, t) - t2 * sp.diff(t1, t)
    chi = (
        t1 * sp.diff(c2, t)
        - sp.Rational(1, 2) * sp.diff(t1, t) * c2
        - t2 * sp.diff(c1, t)
        + sp.Rational(1, 2) * sp.diff(t2, t) * c1
    )
    # the G-G central term carries 1/2, matching the coefficient-level
    # bracket of chi*dx + (1/2)chi_t*x*M fields
    sigma = (
        t1 * sp.diff(Q2.sigma, t)
        - t2 * sp.diff(Q1.sigma, t)
        + sp.Rational(1, 2) * (c1 * sp.diff(c2, t) - c2 * sp.diff(c1, t))
    )
    rho = t1 * sp.diff(Q2.rho, t) - t2 * sp.diff(Q1.rho, t)
    eta0 = _act_on_z(Q1, Q2.eta0) - _act_on_z(Q2, Q1.eta0)
    return StructuredField(tau, chi, sigma, rho, eta0)


def commutator_via_coefficients(Q1, Q2):
    """Bracket computed from the expanded coefficient form; cross-check for
    commutator() on Z-free fields."""
    if not (Q1.is_z_free and Q2.is_z_free):
        raise ValueError("coefficient-level bracket implemented for Z-free fields")
    xi1, m1, _ = Q1.coefficient_form()
    xi2, m2, _ = Q2.coefficient_form()
    tau3 = Q1.tau * sp.diff(Q2.tau, t) - Q2.tau * sp.diff(Q1.tau, t)
    xi3 = (
        Q1.tau * sp.diff(xi2, t)
        + xi1 * sp.diff(xi2, x)
        - Q2.tau * sp.diff(xi1, t)
        - xi2 * sp.diff(xi1, x)
    )
    m3 = (
        Q1.tau * sp.diff(m2, t)
        + xi1 * sp.diff(m2, x)
        - Q2.tau * sp.diff(m1, t)
        - xi2 * sp.diff(m1, x)
    )
    return field_from_coefficients(tau3, xi3, m3)


def field_from_coefficients(tau, xi, mult):
    """Reassemble a Z-free StructuredField from (tau, xi, psi-multiplier)."""
    tau = normalize(tau)
    chi = normalize(xi - sp.Rational(1, 2) * sp.diff(tau, t) * x)
    if x in chi.free_symbols and not is_zero(sp.diff(chi, x)):
        raise ValueError(f"xi component {xi} is not of the admitted form")
    chi = normalize(chi.subs(x, 0))
    rem = normalize(
        mult
        - sp.I / 8 * sp.diff(tau, t, 2) * x**2
        - sp.I / 2 * sp.diff(chi, t) * x
    )
    if x in rem.free_symbols and not is_zero(sp.diff(rem, x)):
        raise ValueError(f"multiplier {mult} is not of the admitted form")
    rem = rem.subs(x, 0)
    rho, sigma = rem.as_real_imag()
    return StructuredField(tau, chi, normalize(sigma), normalize(rho))


# ---------------------------------------------------------------------------
# spans and invariants

_SAMPLE_SEED = 20240811


def _sample_ts(count, exprs):
    """Deterministic sample times avoiding singularities of the given exprs."""
    rng = np.random.default_rng(_SAMPLE_SEED)
    ts = []
    trials = 0
    while len(ts) < count and trials < 200 * count:
        trials += 1
        tv = float(rng.uniform(-2.5, 2.5))
        if abs(tv) < 0.05:
            continue
        try:
            for e in exprs:
                eval_expr(e, tv, 0.7)
        except EvalError:
            continue
        ts.append(tv)
    if len(ts) < count:
        raise SpanError("could not find enough regular sample times")
    return ts


def _evaluation_matrix(fields, n_times=None):
    """Rows are per-field samples of (tau, chi, sigma, rho[, eta0]) split into
    real and imaginary parts."""
    n_times = n_times or max(12, 3 * len(fields))
    exprs = [p for f in fields for p in (f.tau, f.chi, f.sigma, f.rho)]
    ts = _sample_ts(n_times, [e for e in exprs if e != 0] or [t])
    with_eta = any(f.eta0 != 0 for f in fields)
    xs = np.linspace(-1.7, 1.9, 5)
    rows = []
    for f in fields:
        row = []
        for p in (f.tau, f.chi, f.sigma, f.rho):
            for tv in ts:
                v = eval_expr(p, tv, 0.0)
                row += [v.real, v.imag]
        if with_eta:
            for tv in ts:
                for xv in xs:
                    v = eval_expr(f.eta0, tv, xv) if f.eta0 != 0 else 0j
                    row += [v.real, v.imag]
        rows.append(row)
    return np.array(rows, dtype=float)


def numeric_rank(matrix, rtol=SVD_RTOL):
    if matrix.size == 0:
        return 0, np.inf
    svals = np.linalg.svd(matrix, compute_uv=False)
    if svals[0] == 0.0:
        return 0, np.inf
    keep = svals > rtol * svals[0]
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        return 0, np.inf
    if rank < len(svals) and svals[rank] > 0.0:
        gap = svals[rank - 1] / svals[rank]
    else:
        gap = np.inf
    return rank, gap


def span_dimension(fields):
    """Dimension of the real linear span of the parameter tuples."""
    fields = [f for f in fields if not f.is_zero_field]
    if not fields:
        return 0
    exact = _exact_rank(fields)
    if exact is not None:
        return exact
    matrix = _evaluation_matrix(fields)
    # rank is scale-free per field: normalize rows so a rapidly growing
    # parameter (e.g. exp(8t)) cannot swamp the singular-value threshold
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    rank, _ = numeric_rank(matrix / norms)
    return rank


def _exact_rank(fields):
    """Exact coefficient-vector rank when every parameter is polynomial in
    its variables; None when outside that class."""
    columns = {}
    rows = []
    for f in fields:
        entries = {}
        for slot, p in enumerate(f.params()):
            if p == 0:
                continue
            if not p.is_polynomial(t, x):
                return None
            try:
                poly = sp.Poly(p, t, x)
            except sp.PolynomialError:
                return None
            for monom, coeff in poly.terms():
                if not coeff.is_rational and not (sp.I * coeff).is_rational:
                    if not coeff.is_number:
                        return None
                entries[(slot, monom)] = coeff
        rows.append(entries)
    for entries in rows:
        for key in entries:
            columns.setdefault(key, len(columns))
    matrix = sp.zeros(len(rows), 2 * len(columns))
    for i, entries in enumerate(rows):
        for key, coeff in entries.items():
            j = columns[key]
            re_part, im_part = coeff.as_real_imag()
            matrix[i, 2 * j] = re_part
            matrix[i, 2 * j + 1] = im_part
    return matrix.rank()


def contains_kernel(fields):
    """True when the span contains both M and I."""
    base = span_dimension(fields)
    return span_dimension(list(fields) + [M, I]) == base


def k_invariants(fields):
    """(k1, k2): dimension of the tau-projection and the tau-free excess
    over the kernel."""
    if not contains_kernel(fields):
        raise SpanError("span must contain the kernel fields M and I")
    dim = span_dimension(fields)
    tau_fields = [StructuredField(tau=f.tau) for f in fields if f.tau != 0]
    k1 = span_dimension(tau_fields)
    return k1, dim - k1 - 2


# ---------------------------------------------------------------------------
# decomposition in a finite span

def rationalize(value, max_den=10**6):
    from fractions import Fraction

    return sp.Rational(Fraction(value).limit_denominator(max_den))


def _exact_coefficient(value, max_den=10**4):
    """Closed form of a float coordinate: a rational, a root of a rational
    (degree 2..4), or a small surd combination; Float as a last resort."""
    from fractions import Fraction

    value = float(value)
    frac = Fraction(value).limit_denominator(max_den)
    if abs(float(frac) - value) <= 1e-9 * max(1.0, abs(value)):
        return sp.Rational(frac)
    for power in (2, 3, 4):
        powered = value**power
        frac = Fraction(powered).limit_denominator(max_den)
        if frac == 0:
            continue
        if abs(float(frac) - powered) <= 1e-8 * max(1.0, abs(powered)):
            cand = (-1 if value < 0 else 1) * sp.Abs(sp.Rational(frac)) ** sp.Rational(1, power)
            if abs(float(cand) - value) <= 1e-9 * max(1.0, abs(value)):
                return sp.nsimplify(cand)
    guess = sp.nsimplify(value, [sp.sqrt(2), sp.sqrt(3), sp.sqrt(5)], rational=False)
    if abs(float(guess) - value) <= 1e-9 * max(1.0, abs(value)):
        return guess
    return sp.Float(value)


def decompose(target, basis, seed=0):
    """Exact coordinates of target in the given field basis, found
    numerically and certified symbolically; None if not representable."""
    matrix = _evaluation_matrix(list(basis) + [target])
    a = matrix[:-1].T
    b = matrix[-1]
    coeffs, *_ = np.linalg.lstsq(a, b, rcond=None)
    exact = [_exact_coefficient(round(c, 9)) for c in coeffs]
    residual = target
    for c, q in zip(exact, basis):
        residual = residual - c * q
    if residual.is_zero_field or all(is_zero(p, seed=seed) for p in residual.params()):
        return exact
    return None


def adjoint_gpart(P0, Q1, Q2):
    """2x2 adjoint matrix of P0 on span{Q1, Q2} mod <M, I>, plus its real
    Jordan type ('hyperbolic' | 'elliptic' | 'nilpotent')."""
    rows = []
    for Qp in (Q1, Q2):
        bracket = commutator(P0, Qp)
        coords = decompose(bracket, [Q1, Q2, M, I])
        if coords is None:
            raise SpanError(f"[P0, {Qp}] does not lie in span(Q1, Q2, M, I)")
        rows.append(coords[:2])
    a = sp.Matrix(rows)
    if sp.simplify(a.trace()) != 0:
        raise SpanError(f"adjoint matrix {a} has nonzero trace")
    det = sp.simplify(a.det())
    if det < 0:
        jordan = "hyperbolic"
    elif det > 0:
        jordan = "elliptic"
    elif not a.is_zero_matrix:
        jordan = "nilpotent"
    else:
        raise SpanError("adjoint matrix vanishes; no Jordan type")
    return a, jordan


def jordan_canonical(jordan):
    return {
        "hyperbolic": sp.Matrix([[1, 0], [0, -1]]),
        "elliptic": sp.Matrix([[0, -1], [1, 0]]),
        "nilpotent": sp.Matrix([[0, 0], [1, 0]]),
    }[jordan]
