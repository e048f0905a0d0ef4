"""Point equivalence transformations of the class i*psi_t + psi_xx + V*psi = 0.

A transformation is stored by its parameter functions (T, X0, Sigma, Upsilon)
and the sign eps.  It acts on points by

    t~ = T(t),    x~ = eps*|T_t|^(1/2)*x + X0(t),

on solutions by a Gaussian-exponential multiplier (with complex conjugation of
the dependent variable when T is decreasing), and on potentials by the induced
closed-form expression.  The module also provides composition, inversion,
pushforward of structured symmetry fields, the Moebius-parameterized subgroup
preserving potentials of the form i*gamma(t)*x, and the infinitesimal
generator actions on potentials.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import sympy as sp

from .lie import StructuredField, field_from_coefficients
from .symexpr import (
    EvalError,
    eval_expr,
    is_zero,
    normalize,
    parse,
    print_expr,
    t,
    x,
)


class InversionError(Exception):
    """The time reparameterization cannot be inverted in closed form."""


class TransformError(Exception):
    pass


_HALF = sp.Rational(1, 2)


def _tidy(e):
    e = sp.cancel(sp.together(e))
    if sp.count_ops(e) <= 400:
        simpler = sp.simplify(e)
        if sp.count_ops(simpler) <= sp.count_ops(e):
            e = simpler
    return normalize(e)


def _conjugate(e):
    return sp.conjugate(e)


@dataclass(frozen=True)
class EquivTransform:
    T: sp.Expr = t
    X0: sp.Expr = sp.S.Zero
    Sigma: sp.Expr = sp.S.Zero
    Upsilon: sp.Expr = sp.S.Zero
    eps: int = 1
    #: a time at which all parameter functions are regular; fixes the working
    #: branch for sign resolution and inversion
    domain_point: float = dc_field(default=0.75, compare=False)

    def __post_init__(self):
        for name in ("T", "X0", "Sigma", "Upsilon"):
            # sign(u) -> u/|u| keeps t-derivatives free of distributions
            value = sp.sympify(getattr(self, name)).replace(
                sp.sign, lambda u: u / sp.Abs(u)
            )
            object.__setattr__(self, name, normalize(value))
        if self.eps not in (1, -1):
            raise ValueError("eps must be +1 or -1")
        tt = sp.diff(self.T, t)
        if tt == 0:
            raise ValueError("T must have nonzero derivative")

    # -- structure ----------------------------------------------------------

    @property
    def eps_prime(self):
        """Constant sign of T_t on the working domain."""
        tt = sp.diff(self.T, t)
        if tt.is_positive:
            return 1
        if tt.is_negative:
            return -1
        value = eval_expr(tt, self.domain_point, 0.0)
        if abs(value.imag) > 1e-12 or value.real == 0.0:
            raise TransformError(f"cannot fix sgn(T_t) at t={self.domain_point}")
        return 1 if value.real > 0 else -1

    @property
    def is_identity(self):
        return (
            self.T == t
            and self.X0 == 0
            and self.Sigma == 0
            and self.Upsilon == 0
            and self.eps == 1
        )

    def point_map(self):
        """(t~, x~) as expressions in the source variables."""
        tt = sp.diff(self.T, t)
        return self.T, self.eps * sp.sqrt(sp.Abs(tt)) * x + self.X0

    def multiplier_exponent(self):
        """Exponent E(t, x) of the solution multiplier exp(E)."""
        tt = sp.diff(self.T, t)
        return (
            sp.I / 8 * sp.diff(self.T, t, 2) / sp.Abs(tt) * x**2
            + sp.I
            / 2
            * self.eps
            * self.eps_prime
            * sp.diff(self.X0, t)
            / sp.sqrt(sp.Abs(tt))
            * x
            + sp.I * self.Sigma
            + self.Upsilon
        )

    def to_dict(self):
        return {
            "T": print_expr(self.T),
            "X0": print_expr(self.X0),
            "Sigma": print_expr(self.Sigma),
            "Upsilon": print_expr(self.Upsilon),
            "eps": self.eps,
        }

    @classmethod
    def from_dict(cls, record):
        return cls(
            parse(record["T"]),
            parse(record["X0"]),
            parse(record["Sigma"]),
            parse(record["Upsilon"]),
            int(record.get("eps", 1)),
        )

    def __str__(self):
        return (
            f"T={print_expr(self.T)}, X0={print_expr(self.X0)}, "
            f"Sigma={print_expr(self.Sigma)}, Upsilon={print_expr(self.Upsilon)}, "
            f"eps={self.eps}"
        )


IDENTITY = EquivTransform()


@dataclass(frozen=True)
class AdmissibleTransform:
    """An equivalence transformation combined with a linear-superposition
    shift by a solution Phi of the source equation."""

    base: EquivTransform
    Phi: sp.Expr = sp.S.Zero

    def __post_init__(self):
        object.__setattr__(self, "Phi", normalize(sp.sympify(self.Phi)))


def check_superposition(Phi, V):
    """True when Phi solves the source equation with potential V."""
    residual = sp.I * sp.diff(Phi, t) + sp.diff(Phi, x, 2) + V * Phi
    return is_zero(residual)


# ---------------------------------------------------------------------------
# branch-aware inversion of time reparameterizations

def _fix_branch(e, t0):
    """Replace sign(f(t)) and abs(f(t)) by their branch values near t0."""

    def branch_sign(arg):
        try:
            value = eval_expr(arg, t0, 0.0)
        except EvalError:
            return None
        if abs(value.imag) > 1e-12 or value.real == 0.0:
            return None
        return 1 if value.real > 0 else -1

    def repl_sign(arg):
        s = branch_sign(arg)
        return sp.Integer(s) if s is not None else sp.sign(arg)

    def repl_abs(arg):
        s = branch_sign(arg)
        return s * arg if s is not None else sp.Abs(arg)

    e = e.replace(sp.sign, repl_sign)
    e = e.replace(sp.Abs, repl_abs)
    return e


def invert_tfunction(T, domain_point=0.75):
    """Closed-form inverse of T on the branch containing domain_point,
    returned as an expression in t (standing for the target time)."""
    T = sp.sympify(T)
    branch = _fix_branch(T, domain_point)
    s = sp.Symbol("_s", real=True)
    try:
        candidates = sp.solve(sp.Eq(branch, s), t)
    except Exception as exc:  # sympy raises a mix of error types here
        raise InversionError(f"cannot invert T={T}: {exc}") from exc
    try:
        target = complex(sp.N(branch.subs(t, domain_point)))
    except (TypeError, ValueError) as exc:
        raise InversionError(f"cannot evaluate T at t={domain_point}") from exc
    try:
        period = sp.periodicity(branch, t)
    except Exception:
        period = None
    shifts = [sp.S.Zero]
    if period is not None and period != 0:
        shifts += [n * period for n in range(-8, 9) if n != 0]
    scale = max(1.0, abs(domain_point))
    for candidate in candidates:
        for shift in shifts:
            try:
                value = complex(sp.N((candidate + shift).subs(s, target.real)))
            except (TypeError, ValueError):
                continue
            if abs(value.imag) < 1e-9 and abs(value.real - domain_point) < 1e-8 * scale:
                return normalize((candidate + shift).subs(s, t))
    raise InversionError(f"no real inverse branch of T={T} through t={domain_point}")


def _to_target(expr, g):
    """Re-express a source-variable expression in the target variables,
    renaming them back to (t, x)."""
    t_inv = invert_tfunction(g.T, g.domain_point)
    tt = sp.diff(g.T, t)
    x_src = (x - g.X0) / (g.eps * sp.sqrt(sp.Abs(tt)))
    t_mark, x_mark = sp.Dummy("t", real=True), sp.Dummy("x", real=True)
    out = expr.subs(x, x_src.subs(x, x_mark))
    out = out.subs(t, t_inv.subs(t, t_mark))
    out = out.subs({t_mark: t, x_mark: x}).doit()
    return _tidy(_fix_branch(out, _target_domain_point(g)))


def _target_domain_point(g):
    return float(eval_expr(g.T, g.domain_point, 0.0).real)


# ---------------------------------------------------------------------------
# actions

def transform_potential(V, g):
    """The potential of the transformed equation, in target variables."""
    V = sp.sympify(V)
    tt = sp.diff(g.T, t)
    ttt = sp.diff(g.T, t, 2)
    tttt = sp.diff(g.T, t, 3)
    x0t = sp.diff(g.X0, t)
    ep = g.eps_prime
    v_hat = _conjugate(V) if ep < 0 else V
    source_form = (
        v_hat / sp.Abs(tt)
        + (2 * tttt * tt - 3 * ttt**2) / (16 * ep * tt**3) * x**2
        + g.eps * ep / (2 * sp.sqrt(sp.Abs(tt))) * sp.diff(x0t / tt, t) * x
        - (sp.I * ttt + x0t**2) / (4 * tt**2)
        + (sp.diff(g.Sigma, t) - sp.I * sp.diff(g.Upsilon, t)) / tt
    )
    return _to_target(source_form, g)


def transform_solution(adm, psi, V=None):
    """Image of a solution under an admissible transformation; symbolic
    expressions map to symbolic expressions, sampled solutions to sampled
    solutions."""
    g = adm.base
    if hasattr(psi, "values"):
        from .numverify import transform_numeric_solution

        return transform_numeric_solution(adm, psi, V)
    total = sp.sympify(psi) + adm.Phi
    if g.eps_prime < 0:
        total = _conjugate(total)
    expr = sp.exp(g.multiplier_exponent()) * total
    return _to_target(expr, g)


def _split_real_imag(e):
    e = sp.expand(sp.expand_complex(e))
    re_part, im_part = e.as_real_imag()
    return _tidy(re_part), _tidy(im_part)


def compose(g1, g2):
    """The transformation acting as g1 followed by g2."""
    t1_map, x1_map = g1.point_map()
    tc = normalize(g2.T.subs(t, t1_map))
    tt2 = sp.diff(g2.T, t)
    x0c = normalize(
        g2.eps * sp.sqrt(sp.Abs(tt2.subs(t, t1_map))) * g1.X0
        + g2.X0.subs(t, t1_map)
    )
    e2 = g2.multiplier_exponent().subs({t: t1_map, x: x1_map}, simultaneous=True)
    e1 = g1.multiplier_exponent()
    if g2.eps_prime < 0:
        e1 = _conjugate(e1)
    constant_part = (e2 + e1).subs(x, 0)
    upsilon, sigma = _split_real_imag(constant_part)
    return EquivTransform(
        tc,
        x0c,
        sigma,
        upsilon,
        g1.eps * g2.eps,
        domain_point=g1.domain_point,
    )


def inverse(g):
    """The transformation undoing g."""
    t_inv = invert_tfunction(g.T, g.domain_point)
    tt = sp.diff(g.T, t)
    scale = g.eps * sp.sqrt(sp.Abs(tt))
    x0_inv = _tidy((-g.X0 / scale).subs(t, t_inv))
    exponent = g.multiplier_exponent()
    if g.eps_prime < 0:
        exponent = _conjugate(exponent)
    constant_part = (-exponent).subs(x, -g.X0 / scale).subs(t, t_inv)
    constant_part = _fix_branch(constant_part, _target_domain_point(g))
    upsilon, sigma = _split_real_imag(constant_part)
    return EquivTransform(
        t_inv,
        x0_inv,
        sigma,
        upsilon,
        g.eps,
        domain_point=_target_domain_point(g),
    )


def pushforward(g, Q):
    """Image of a structured symmetry field under the point transformation,
    computed at the coefficient level and reassembled."""
    if not Q.is_z_free:
        raise ValueError("pushforward implemented for Z-free fields")
    xi, mult, _ = Q.coefficient_form()
    tt = sp.diff(g.T, t)
    _, x_map = g.point_map()
    exponent = g.multiplier_exponent()
    if g.eps_prime < 0:
        mult = _conjugate(mult)
    tau_new = Q.tau * tt
    xi_new = Q.tau * sp.diff(x_map, t) + xi * sp.diff(x_map, x)
    mult_new = Q.tau * sp.diff(exponent, t) + xi * sp.diff(exponent, x) + mult
    t_inv = invert_tfunction(g.T, g.domain_point)
    tau_target = _tidy(_fix_branch(tau_new.subs(t, t_inv), _target_domain_point(g)))
    xi_target = _to_target(xi_new, g)
    mult_target = _to_target(mult_new, g)
    return field_from_coefficients(tau_target, xi_target, mult_target)


def factor_admissible(adm, V):
    """Split an admissible transformation into its linear-superposition part
    (applied first) and its pure equivalence part."""
    if adm.Phi != 0 and not check_superposition(adm.Phi, V):
        raise TransformError("Phi does not solve the source equation")
    superposition = AdmissibleTransform(
        EquivTransform(domain_point=adm.base.domain_point), adm.Phi
    )
    return superposition, adm.base


# ---------------------------------------------------------------------------
# infinitesimal generator actions on the potential

def equiv_generator_action(kind, param, V):
    """Infinitesimal change of V along the one-parameter flow of the named
    generator (transport terms included): the potential V is preserved by the
    flow exactly when the result vanishes."""
    p = sp.sympify(param)
    V = sp.sympify(V)
    if kind == "D":
        out = (
            -sp.diff(p, t) * V
            + sp.diff(p, t, 3) * x**2 / 8
            - sp.I * sp.diff(p, t, 2) / 4
            - p * sp.diff(V, t)
            - _HALF * sp.diff(p, t) * x * sp.diff(V, x)
        )
    elif kind == "G":
        out = _HALF * sp.diff(p, t, 2) * x - p * sp.diff(V, x)
    elif kind == "M":
        out = sp.diff(p, t)
    elif kind == "I":
        out = -sp.I * sp.diff(p, t)
    else:
        raise ValueError(f"unknown generator kind {kind!r}")
    return normalize(out)


def symmetry_action(Q, V):
    """Combined generator action of a Z-free structured field on V; vanishes
    exactly when Q is a symmetry candidate for the potential."""
    return normalize(
        equiv_generator_action("D", Q.tau, V)
        + equiv_generator_action("G", Q.chi, V)
        + equiv_generator_action("M", Q.sigma, V)
        + equiv_generator_action("I", Q.rho, V)
    )


# ---------------------------------------------------------------------------
# the subclass of potentials i*gamma(t)*x

@dataclass(frozen=True)
class SubclassEquivTransform:
    """A Moebius time map with affine shift and constant multiplier, which is
    the residual equivalence freedom of potentials of the form i*gamma(t)*x."""

    a0: sp.Rational = sp.S.Zero
    a1: sp.Rational = sp.S.One
    a2: sp.Rational = sp.S.One
    a3: sp.Rational = sp.S.Zero
    b0: sp.Expr = sp.S.Zero
    b1: sp.Expr = sp.S.Zero
    c: sp.Expr = sp.S.One
    eps: int = 1
    domain_point: float = dc_field(default=0.75, compare=False)

    def __post_init__(self):
        for name in ("a0", "a1", "a2", "a3", "b0", "b1", "c"):
            object.__setattr__(self, name, sp.nsimplify(sp.sympify(getattr(self, name))))
        if self.eps not in (1, -1):
            raise ValueError("eps must be +1 or -1")
        det = self.a1 * self.a2 - self.a0 * self.a3
        if det not in (sp.S.One, sp.S.NegativeOne):
            raise ValueError("a1*a2 - a0*a3 must be +1 or -1")
        if self.c == 0:
            raise ValueError("c must be nonzero")

    @property
    def det(self):
        return self.a1 * self.a2 - self.a0 * self.a3

    @property
    def eps_prime(self):
        return 1 if self.det == 1 else -1

    @property
    def T(self):
        return normalize((self.a1 * t + self.a0) / (self.a3 * t + self.a2))

    @property
    def T_inverse(self):
        return normalize((self.a2 * t - self.a0) / (self.a1 - self.a3 * t))

    def to_equiv(self, gamma):
        """The full equivalence transformation preserving the subclass shape,
        for the given coefficient function gamma."""
        gamma = sp.sympify(gamma)
        T = self.T
        tt = sp.diff(T, t)
        x0 = self.b1 * T + self.b0
        c0 = sp.log(sp.Abs(self.c))
        c1 = sp.arg(self.c)
        sigma = self.b1**2 / 4 * T + c1
        integrand = gamma * x0 * sp.Abs(tt) ** sp.Rational(-1, 2)
        integral = sp.integrate(integrand, t)
        if integral.has(sp.Integral):
            raise TransformError(f"cannot integrate {integrand} in closed form")
        upsilon = (
            -sp.Rational(1, 4) * sp.log(sp.Abs(tt)) - self.eps * integral + c0
        )
        return EquivTransform(
            T, x0, sigma, upsilon, self.eps, domain_point=self.domain_point
        )

    def to_dict(self):
        record = {
            name: print_expr(getattr(self, name))
            for name in ("a0", "a1", "a2", "a3", "b0", "b1")
        }
        c_re, c_im = self.c.as_real_imag()
        record["c_re"] = print_expr(c_re)
        record["c_im"] = print_expr(c_im)
        record["eps"] = self.eps
        return record

    @classmethod
    def from_dict(cls, record):
        def get(name):
            return parse(record[name]) if record.get(name, "") != "" else sp.S.Zero

        return cls(
            get("a0"),
            get("a1"),
            get("a2"),
            get("a3"),
            get("b0"),
            get("b1"),
            get("c_re") + sp.I * get("c_im"),
            int(record.get("eps", 1)),
        )


def transform_gamma(gamma, g):
    """Image of the coefficient function gamma under a subclass
    transformation, as a function of the target time."""
    gamma = sp.sympify(gamma)
    tt = sp.diff(g.T, t)
    out = g.eps * g.eps_prime * sp.Abs(tt) ** sp.Rational(-3, 2) * gamma
    out = out.subs(t, g.T_inverse)
    return _tidy(out)
