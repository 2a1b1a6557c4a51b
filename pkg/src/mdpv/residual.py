"""Residual construction for the b-family wave equation and windowed
numeric scanning.

The equation, in evolution form with one real parameter b (excluding
b = -1 and b = -2 where the family degenerates):

    u_t - u_xxt + (b+1) u^p u_x  =  b u_x u_xx + u u_xxx

with p = 2 for the cubic-convection (modified) variant and p = 1 for
the quadratic-convection variant.  A traveling profile U on the moving
coordinate xi = x + lam*t satisfies

    (b+1) U' U^p - U''' U - lam U''' + lam U' - b U' U''  =  0.

Scanning is relative to the cancellation scale: a claimed solution makes
the residual's top-level terms cancel, so the pass criterion compares
the residual magnitude against the largest single term magnitude seen
on the grid, not against machine zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence, Union

import numpy as np

from .expr import (
    Add, Const, Expr, compile_fn, con, diff, free_symbols, simplify, sym,
)

__all__ = [
    "EquationVariant", "modified_eq", "classic_eq",
    "pde_residual", "ode_residual", "traveling_profile",
    "ResidualReport", "scan", "find_zeros",
]


def _as_coeff(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, float):
        return Const(v)
    return con(Fraction(v))


@dataclass(frozen=True)
class EquationVariant:
    """One member of the b-family: convection u^p u_x with p in {1, 2}."""

    b: Expr
    convection_power: int
    label: str

    def __post_init__(self):
        if self.convection_power not in (1, 2):
            raise ValueError("convection power must be 1 or 2")


def modified_eq(b) -> EquationVariant:
    """Cubic convection (p = 2)."""
    return EquationVariant(_as_coeff(b), 2, "mdp")


def classic_eq(b) -> EquationVariant:
    """Quadratic convection (p = 1)."""
    return EquationVariant(_as_coeff(b), 1, "dp")


def require_valid_b(b: float) -> None:
    """The family degenerates at b = -1 and b = -2."""
    if abs(b + 1.0) <= 1e-9 or abs(b + 2.0) <= 1e-9:
        raise ValueError(f"b = {b} is outside the admissible family")


def pde_residual(u: Expr, eq: EquationVariant,
                 x: str = "x", t: str = "t") -> Expr:
    """Left-minus-right of the evolution equation for a candidate u(x,t)."""
    b = eq.b
    p = eq.convection_power
    u_x = diff(u, x)
    u_xx = diff(u_x, x)
    u_xxx = diff(u_xx, x)
    u_t = diff(u, t)
    u_xxt = diff(u_xx, t)
    conv = u * u_x if p == 1 else u * u * u_x
    return (u_t - u_xxt + (b + 1) * conv - b * u_x * u_xx - u * u_xxx)


def ode_residual(U: Expr, eq: EquationVariant, lam,
                 xi: str = "xi") -> Expr:
    """Residual of the traveling-profile reduction on xi = x + lam*t."""
    b = eq.b
    lam_e = _as_coeff(lam)
    Up = diff(U, xi)
    Upp = diff(Up, xi)
    Uppp = diff(Upp, xi)
    conv = U if eq.convection_power == 1 else U * U
    return ((b + 1) * conv * Up - Uppp * U - lam_e * Uppp
            + lam_e * Up - b * Up * Upp)


def traveling_profile(U: Expr, lam, xi: str = "xi",
                      x: str = "x", t: str = "t") -> Expr:
    """Substitute xi = x + lam*t, turning a profile into a candidate
    solution of the evolution equation."""
    from .expr import substitute
    lam_e = _as_coeff(lam)
    return substitute(U, xi, sym(x) + lam_e * sym(t))


@dataclass(frozen=True)
class ResidualReport:
    max_abs_residual: float
    points_evaluated: int
    points_excluded: int
    tolerance: float
    scale: float
    passed: bool

    def line(self, label: str) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return (f"{label}: {verdict}  max|R| = {self.max_abs_residual:.3e}"
                f"  scale = {self.scale:.3e}  ({self.points_evaluated} pts,"
                f" {self.points_excluded} excluded)")


def scan(residual: Expr, env: Mapping[str, float],
         window: tuple[float, float] = (-8.0, 8.0), n: int = 257,
         exclusions: Sequence[float] = (), tol: float = 1e-9,
         exclusion_radius: float = 0.1) -> ResidualReport:
    """Evaluate a residual on a uniform grid and judge it against the
    cancellation scale.

    The scan variable is the single free symbol of `residual` not bound
    by `env`.  Grid points within `exclusion_radius` of a declared
    exclusion are skipped.  A non-finite residual anywhere else fails
    the scan outright.
    """
    free = free_symbols(residual)
    unbound = sorted(free - set(env.keys()))
    if len(unbound) != 1:
        raise ValueError(f"scan needs exactly one unbound symbol, "
                         f"got {unbound!r}")
    var = unbound[0]
    bound = sorted(free - {var})

    grid = np.linspace(window[0], window[1], n)
    keep = np.ones(n, dtype=bool)
    for x0 in exclusions:
        keep &= np.abs(grid - x0) > exclusion_radius
    pts = grid[keep]
    excluded = int(n - pts.size)
    if pts.size == 0:
        return ResidualReport(float("inf"), 0, excluded, tol, 0.0, False)

    args = {nm: float(env[nm]) for nm in bound}

    def ev(e: Expr) -> np.ndarray:
        f = compile_fn(e, [var] + bound)
        out = f(pts, *[args[nm] for nm in bound])
        return np.broadcast_to(np.asarray(out, dtype=float), pts.shape)

    rvals = ev(residual)
    terms = residual.terms if isinstance(residual, Add) else (residual,)
    scale = 0.0
    for term in terms:
        tv = ev(term)
        finite = tv[np.isfinite(tv)]
        if finite.size:
            scale = max(scale, float(np.max(np.abs(finite))))

    if not np.all(np.isfinite(rvals)):
        return ResidualReport(float("inf"), int(pts.size), excluded,
                              tol, scale, False)
    max_abs = float(np.max(np.abs(rvals)))
    passed = max_abs <= tol * (1.0 + scale)
    return ResidualReport(max_abs, int(pts.size), excluded, tol, scale,
                          passed)


def find_zeros(f: Expr, var: str, window: tuple[float, float],
               n: int = 4001, refine_tol: float = 1e-10,
               env: Mapping[str, float] | None = None) -> list[float]:
    """Zeros of a scalar expression on an open interval, including
    tangential ones (where the function touches zero without a sign
    change, as 1 - cosh does at the origin).

    Sign changes are bisected; tangential zeros are found by bisecting
    the derivative's sign changes and accepting critical points where
    the function value is negligible against its window-wide scale.
    """
    env = dict(env or {})
    names = sorted(free_symbols(f) - {var})
    fn = compile_fn(f, [var] + names)
    extra = [float(env[nm]) for nm in names]

    def f_at(x: float) -> float:
        return float(fn(x, *extra))

    lo, hi = window
    xs = np.linspace(lo, hi, n)
    vals = np.broadcast_to(
        np.asarray(fn(xs, *extra), dtype=float), xs.shape).copy()
    finite = np.isfinite(vals)
    fscale = float(np.max(np.abs(vals[finite]))) if finite.any() else 1.0

    def bisect(func, a: float, b: float) -> float:
        fa = func(a)
        for _ in range(200):
            m = 0.5 * (a + b)
            fm = func(m)
            if b - a < refine_tol or fm == 0.0:
                return m
            if (fa < 0) != (fm < 0):
                b = m
            else:
                a, fa = m, fm
        return 0.5 * (a + b)

    roots: list[float] = []
    for i in range(n - 1):
        a, b = float(xs[i]), float(xs[i + 1])
        va, vb = vals[i], vals[i + 1]
        if not (np.isfinite(va) and np.isfinite(vb)):
            continue
        if va == 0.0:
            roots.append(a)
        elif (va < 0) != (vb < 0):
            roots.append(bisect(f_at, a, b))
    if np.isfinite(vals[-1]) and vals[-1] == 0.0:
        roots.append(float(xs[-1]))

    # tangential zeros: critical points where f is essentially zero
    df = diff(f, var)
    dfn = compile_fn(df, [var] + names)
    dvals = np.broadcast_to(
        np.asarray(dfn(xs, *extra), dtype=float), xs.shape).copy()

    def df_at(x: float) -> float:
        return float(dfn(x, *extra))

    for i in range(n - 1):
        da, db = dvals[i], dvals[i + 1]
        if not (np.isfinite(da) and np.isfinite(db)):
            continue
        if da == 0.0 or (da < 0) != (db < 0):
            xc = float(xs[i]) if da == 0.0 else bisect(
                df_at, float(xs[i]), float(xs[i + 1]))
            vc = f_at(xc)
            if np.isfinite(vc) and abs(vc) <= 1e-8 * (1.0 + fscale):
                roots.append(xc)

    out: list[float] = []
    for r in sorted(roots):
        if lo < r < hi and (not out or r - out[-1] > 1e-8):
            out.append(r)
    return out
