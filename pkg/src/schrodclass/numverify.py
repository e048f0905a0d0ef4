"""Numerical PDE backend.

Crank-Nicolson integration of i*psi_t + psi_xx + V*psi = 0 on a rectangular
grid, finite-difference evaluation of the infinitesimal invariance criterion
for structured symmetry fields, and solution-map verification of admissible
transformations.  Solutions are plain complex arrays wrapped with their grid
and source potential; they can be exported as CSV or a small binary dump.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import sympy as sp
from scipy.interpolate import RectBivariateSpline
from scipy.linalg import solve_banded

from .symexpr import normalize, t, x

__all__ = [
    "Grid",
    "NumericSolution",
    "NumericError",
    "CoverageError",
    "crank_nicolson",
    "equation_residual",
    "invariance_residual",
    "verify_map",
    "transform_numeric_solution",
    "free_gaussian",
    "export_csv",
    "export_binary",
    "load_binary",
]


class NumericError(Exception):
    """Numerical integration or evaluation failure."""


class CoverageError(NumericError):
    """The transformed grid leaves the source solution's domain."""


# ---------------------------------------------------------------------------
# grid and solution containers


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular grid on [t0, t1] x [x_min, x_max]."""

    x_min: float
    x_max: float
    n_x: int
    t0: float
    t1: float
    n_t: int

    def __post_init__(self):
        if self.n_x < 16 or self.n_t < 16:
            raise ValueError("grid needs at least 16 points per axis")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        if self.t1 == self.t0:
            raise ValueError("time interval must be nondegenerate")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / (self.n_t - 1)

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)

    @property
    def ts(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n_t)

    def refined(self) -> "Grid":
        """The grid with both steps halved (same endpoints)."""
        return Grid(
            self.x_min,
            self.x_max,
            2 * (self.n_x - 1) + 1,
            self.t0,
            self.t1,
            2 * (self.n_t - 1) + 1,
        )


@dataclass(frozen=True)
class NumericSolution:
    """A complex field sampled on a grid, indexed (time, space)."""

    grid: Grid
    values: np.ndarray
    V: sp.Expr

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.n_t, self.grid.n_x):
            raise ValueError(
                f"values shape {values.shape} does not match grid "
                f"({self.grid.n_t}, {self.grid.n_x})"
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "V", normalize(sp.sympify(self.V)))

    def norms(self) -> np.ndarray:
        """Discrete L2 norm of each time slice."""
        return np.sqrt(self.grid.dx * np.sum(np.abs(self.values) ** 2, axis=1))


# ---------------------------------------------------------------------------
# evaluation helpers

_LAMBDIFY_MODULES = [
    {
        "sign": np.sign,
        "Abs": np.abs,
        "sgn": np.sign,
        "conjugate": np.conjugate,
    },
    "numpy",
]


def _evaluator(expr):
    expr = sp.sympify(expr).doit()
    fn = sp.lambdify((t, x), expr, modules=_LAMBDIFY_MODULES)

    def call(tv, xv):
        out = fn(tv, xv)
        return np.broadcast_to(np.asarray(out, dtype=complex), np.broadcast_shapes(np.shape(tv), np.shape(xv)))

    return call


def _on_grid(expr, ts, xs):
    """expr(t, x) sampled on the tensor grid, shape (len(ts), len(xs))."""
    tv = np.asarray(ts, dtype=float)[:, None]
    xv = np.asarray(xs, dtype=float)[None, :]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        values = _evaluator(expr)(tv, xv)
    if not np.all(np.isfinite(values)):
        raise NumericError(f"expression {expr} is singular on the grid")
    return np.array(values, dtype=complex)


# ---------------------------------------------------------------------------
# Crank-Nicolson solver


def crank_nicolson(V, initial, grid: Grid) -> NumericSolution:
    """Solution of i*psi_t + psi_xx + V*psi = 0 with homogeneous Dirichlet
    boundaries, by the trapezoidal scheme with one tridiagonal solve per
    step (second order in both steps)."""
    V = normalize(sp.sympify(V))
    xs, ts = grid.xs, grid.ts
    dt, dx = grid.dt, grid.dx

    if isinstance(initial, (sp.Expr, str, int, float, complex)):
        row0 = _on_grid(sp.sympify(initial), [grid.t0], xs)[0]
    else:
        row0 = np.asarray(initial, dtype=complex)
        if row0.shape != (grid.n_x,):
            raise ValueError("initial array must have one value per x node")

    v_grid = _on_grid(V, ts, xs)

    values = np.empty((grid.n_t, grid.n_x), dtype=complex)
    values[0] = row0

    m = grid.n_x - 2
    lam = 1j * dt / (2.0 * dx**2)
    # banded LHS: I - (dt/2)*i*(D_xx + V_{n+1}) on the interior
    ab = np.empty((3, m), dtype=complex)
    for n in range(grid.n_t - 1):
        v_now = v_grid[n, 1:-1]
        v_next = v_grid[n + 1, 1:-1]
        psi = values[n]

        rhs = psi[1:-1] + lam * (psi[2:] - 2.0 * psi[1:-1] + psi[:-2])
        rhs += 1j * dt / 2.0 * v_now * psi[1:-1]

        ab[0, :] = -lam
        ab[2, :] = -lam
        ab[1, :] = 1.0 + 2.0 * lam - 1j * dt / 2.0 * v_next
        ab[0, 0] = 0.0
        ab[2, -1] = 0.0
        interior = solve_banded((1, 1), ab, rhs)
        if not np.all(np.isfinite(interior)):
            raise NumericError(f"integration became non-finite at step {n + 1}")
        values[n + 1, 0] = 0.0
        values[n + 1, -1] = 0.0
        values[n + 1, 1:-1] = interior

    return NumericSolution(grid, values, V)


# ---------------------------------------------------------------------------
# residuals


def _dt_central(values, dt):
    return (values[2:, :] - values[:-2, :]) / (2.0 * dt)


def _dx_central(values, dx):
    return (values[:, 2:] - values[:, :-2]) / (2.0 * dx)


def _dxx_central(values, dx):
    return (values[:, 2:] - 2.0 * values[:, 1:-1] + values[:, :-2]) / dx**2


def equation_residual(sol: NumericSolution, V) -> float:
    """Max over interior grid points of |i*D_t psi + D_xx psi + V psi|
    with second-order central differences."""
    grid = sol.grid
    psi = sol.values
    v_grid = _on_grid(sp.sympify(V), grid.ts, grid.xs)
    res = (
        1j * _dt_central(psi, grid.dt)[:, 1:-1]
        + _dxx_central(psi, grid.dx)[1:-1, :]
        + (v_grid * psi)[1:-1, 1:-1]
    )
    return float(np.max(np.abs(res))) if res.size else 0.0


def invariance_residual(V, Q, sol: NumericSolution) -> float:
    """Finite-difference magnitude of the infinitesimal invariance criterion
    for the field Q on a discrete solution.

    On solutions the criterion reduces to the linearized equation for the
    characteristic w = eta - tau*psi_t - xi*psi_x; the time derivative of psi
    is eliminated analytically via psi_t = i*(psi_xx + V*psi) so that only x
    differences of psi enter w."""
    grid = sol.grid
    V = normalize(sp.sympify(V))
    psi = sol.values
    xs_in = grid.xs[1:-1]

    xi, mult, eta0 = Q.coefficient_form()
    tau = Q.tau

    v_full = _on_grid(V, grid.ts, grid.xs)
    psi_x = _dx_central(psi, grid.dx)
    psi_xx = _dxx_central(psi, grid.dx)
    psi_t = 1j * (psi_xx + (v_full * psi)[:, 1:-1])

    def sample(expr):
        return (
            _on_grid(expr, grid.ts, xs_in)
            if expr != 0
            else np.zeros((grid.n_t, grid.n_x - 2), dtype=complex)
        )

    w = (
        sample(mult) * psi[:, 1:-1]
        + sample(eta0)
        - sample(tau) * psi_t
        - sample(xi) * psi_x
    )

    res = (
        1j * _dt_central(w, grid.dt)[:, 1:-1]
        + _dxx_central(w, grid.dx)[1:-1, :]
        + (v_full[:, 1:-1] * w)[1:-1, 1:-1]
    )
    return float(np.max(np.abs(res))) if res.size else 0.0


# ---------------------------------------------------------------------------
# transformation of sampled solutions


def _scalar_series(expr, ts):
    fn = _evaluator(expr)
    out = np.asarray(fn(np.asarray(ts, dtype=float), np.zeros_like(ts)))
    if not np.all(np.isfinite(out)):
        raise NumericError(f"transformation parameter {expr} is singular")
    return out


def transform_numeric_solution(adm, sol: NumericSolution, V=None) -> NumericSolution:
    """Image of a sampled solution under an admissible transformation.

    The target grid is the largest uniform rectangle covered by the image of
    the source grid; values are obtained by inverting the point map and
    bilinearly interpolating the source samples, then applying the solution
    multiplier (and the superposition shift, if any)."""
    g = adm.base
    grid = sol.grid
    ts, xs = grid.ts, grid.xs
    if V is None:
        V = sol.V

    tt = sp.diff(g.T, t)
    t_img = np.real(_scalar_series(g.T, ts))
    scale = np.real(_scalar_series(g.eps * sp.sqrt(sp.Abs(tt)), ts))
    offset = np.real(_scalar_series(g.X0, ts))

    if not (np.all(np.diff(t_img) > 0) or np.all(np.diff(t_img) < 0)):
        raise NumericError("time map is not monotone on the grid")

    # per-time image of the x-interval, intersected over all times
    lo = np.minimum(scale * grid.x_min, scale * grid.x_max) + offset
    hi = np.maximum(scale * grid.x_min, scale * grid.x_max) + offset
    x_lo, x_hi = float(np.max(lo)), float(np.min(hi))
    pad = 1e-9 * max(1.0, abs(x_hi - x_lo))
    x_lo += pad
    x_hi -= pad
    if not x_hi > x_lo:
        raise CoverageError("image x-intervals have empty intersection")

    target = Grid(x_lo, x_hi, grid.n_x, float(t_img[0]), float(t_img[-1]), grid.n_t)

    # invert the time map by monotone interpolation of its samples
    order = np.argsort(t_img)
    t_src = np.interp(target.ts, t_img[order], ts[order])
    s_t = np.interp(t_src, ts, scale)
    o_t = np.interp(t_src, ts, offset)
    x_src = (target.xs[None, :] - o_t[:, None]) / s_t[:, None]

    ts_asc = ts if ts[0] < ts[-1] else ts[::-1]
    vals_asc = sol.values if ts[0] < ts[-1] else sol.values[::-1, :]
    # bicubic spline interpolation keeps the interpolation error smooth
    # enough that second differences of the image still converge at second
    # order
    interp_re = RectBivariateSpline(ts_asc, xs, vals_asc.real, kx=3, ky=3, s=0)
    interp_im = RectBivariateSpline(ts_asc, xs, vals_asc.imag, kx=3, ky=3, s=0)
    t_pts = np.broadcast_to(t_src[:, None], x_src.shape).ravel()
    x_pts = x_src.ravel()
    if (
        t_pts.min() < min(ts[0], ts[-1]) - 1e-9
        or t_pts.max() > max(ts[0], ts[-1]) + 1e-9
        or x_pts.min() < grid.x_min - 1e-9
        or x_pts.max() > grid.x_max + 1e-9
    ):
        raise CoverageError("inverse point map leaves the source domain")
    total = (
        interp_re(t_pts, x_pts, grid=False) + 1j * interp_im(t_pts, x_pts, grid=False)
    ).reshape(x_src.shape)

    if adm.Phi != 0:
        total = total + _evaluator(adm.Phi)(t_src[:, None], x_src)
    if g.eps_prime < 0:
        total = np.conjugate(total)
    total = total * _evaluator(sp.exp(g.multiplier_exponent()))(t_src[:, None], x_src)

    from .equiv import transform_potential

    return NumericSolution(target, total, transform_potential(V, g))


def verify_map(adm, V, sol: NumericSolution):
    """(residual_before, residual_after): equation residuals of a sampled
    solution and of its image under an admissible transformation."""
    before = equation_residual(sol, V)
    image = transform_numeric_solution(adm, sol, V)
    after = equation_residual(image, image.V)
    return before, after


# ---------------------------------------------------------------------------
# closed-form reference solution and I/O


def free_gaussian(s0=1):
    """Spreading Gaussian wave packet solving the free equation
    (i*psi_t + psi_xx = 0): (s0 + i*t)^(-1/2) * exp(-x^2/(4*(s0 + i*t)))."""
    s = sp.sympify(s0) + sp.I * t
    return s ** sp.Rational(-1, 2) * sp.exp(-(x**2) / (4 * s))


def export_csv(sol: NumericSolution, path):
    """Rows (t, x, Re psi, Im psi) for every grid node."""
    grid = sol.grid
    tv = np.repeat(grid.ts, grid.n_x)
    xv = np.tile(grid.xs, grid.n_t)
    flat = sol.values.reshape(-1)
    data = np.column_stack([tv, xv, flat.real, flat.imag])
    np.savetxt(
        path,
        data,
        delimiter=",",
        header="t,x,re_psi,im_psi",
        comments="",
        fmt="%.17g",
    )


_BINARY_MAGIC = b"SCHRODN1"
_HEADER = struct.Struct("<dd q dd q")


def export_binary(sol: NumericSolution, path):
    """Binary dump: grid header followed by row-major (Re, Im) pairs of
    little-endian IEEE-754 doubles."""
    grid = sol.grid
    with open(path, "wb") as fh:
        fh.write(_BINARY_MAGIC)
        fh.write(
            _HEADER.pack(grid.x_min, grid.x_max, grid.n_x, grid.t0, grid.t1, grid.n_t)
        )
        pairs = np.empty((sol.values.size, 2), dtype="<f8")
        flat = sol.values.reshape(-1)
        pairs[:, 0] = flat.real
        pairs[:, 1] = flat.imag
        fh.write(pairs.tobytes())


def load_binary(path, V=0) -> NumericSolution:
    """Inverse of export_binary (the potential is not stored)."""
    with open(path, "rb") as fh:
        if fh.read(len(_BINARY_MAGIC)) != _BINARY_MAGIC:
            raise ValueError("not a solution dump")
        x_min, x_max, n_x, t0, t1, n_t = _HEADER.unpack(fh.read(_HEADER.size))
        grid = Grid(x_min, x_max, int(n_x), t0, t1, int(n_t))
        pairs = np.frombuffer(fh.read(), dtype="<f8").reshape(-1, 2)
    values = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(grid.n_t, grid.n_x)
    return NumericSolution(grid, values, V)
