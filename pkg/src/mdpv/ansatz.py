"""Coefficient-collection engines behind the closed-form catalog.

Three construction routes turn the wave equation into algebraic
systems:

* an exponential-kernel route: u is a second log-derivative of
  1 + exp(mu*x + lam*t + delta) plus a background level, which makes
  the residual a rational function of the exponential; clearing the
  denominator and collecting powers gives equations in the amplitude,
  background, wavenumber, and speed;
* a rational-hyperbolic route: u is a ratio of degree-one sinh/cosh
  combinations; rewriting in the exponential of the wave variable
  gives a polynomial collection in that exponential;
* a quadratic-ODE (Laurent) route: u is a Laurent polynomial of
  degree two in a kernel function whose derivative is a quadratic
  polynomial of itself; the derivative rule closes the algebra, and
  collecting kernel powers gives the third system.

Each engine regenerates its system symbolically; family parameter
maps substitute the catalog's closed-form parameters and must
annihilate every equation.  Verification replaces derivation: no
nonlinear solver is included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .expr import (
    Add, Expr, Sym, add, con, cosh, diff, evaluate, evaluate_exact, exp,
    format_expr, free_symbols, log, mul, pow_, simplify, sinh,
    substitute_map,
)
from . import polytools as pt
from .riccati import RiccatiSpec

__all__ = [
    "LaurentPoly", "AlgebraicSystem",
    "cole_hopf_build", "cole_hopf_system",
    "rational_hyperbolic_build", "rational_hyperbolic_system",
    "balance_m", "BALANCE_PAIRS", "CHOSEN_DEGREE", "CLEARING_POWER",
    "laurent_residual", "tanh_coth_substitute", "tanh_coth_system",
    "system_for_family", "family_system_env",
    "verify_family_against_system",
]

_ZERO = con(0)


def _as_expr(v) -> Expr:
    return v if isinstance(v, Expr) else con(v)


# ---------------------------------------------------------------------
# Laurent polynomials in the quadratic-ODE kernel

class LaurentPoly:
    """Finite Laurent polynomial sum_k coeff[k] * phi^k with Expr
    coefficients.  Coefficients that expand to the zero polynomial are
    dropped, so the stored support is exact."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: dict[int, Expr], *, trusted: bool = False):
        if trusted:
            self.coeffs = coeffs
            return
        clean: dict[int, Expr] = {}
        for k, c in coeffs.items():
            c = _as_expr(c)
            if not _expands_to_zero(c):
                clean[int(k)] = c
        self.coeffs = clean

    @property
    def k_min(self) -> int:
        return min(self.coeffs) if self.coeffs else 0

    @property
    def k_max(self) -> int:
        return max(self.coeffs) if self.coeffs else 0

    def is_zero(self) -> bool:
        return not self.coeffs

    def items(self):
        return sorted(self.coeffs.items())

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = add(out[k], c) if k in out else c
        return LaurentPoly(out)

    def __mul__(self, other: "LaurentPoly") -> "LaurentPoly":
        out: dict[int, Expr] = {}
        for k1, c1 in self.coeffs.items():
            for k2, c2 in other.coeffs.items():
                k = k1 + k2
                p = mul(c1, c2)
                out[k] = add(out[k], p) if k in out else p
        return LaurentPoly(out)

    def scale(self, c) -> "LaurentPoly":
        c = _as_expr(c)
        return LaurentPoly({k: mul(c, v) for k, v in self.coeffs.items()})

    def shift(self, n: int) -> "LaurentPoly":
        """Multiply by phi^n (exact exponent shift)."""
        return LaurentPoly({k + n: v for k, v in self.coeffs.items()},
                           trusted=True)

    def derivative(self, alpha: Expr, beta: Expr,
                   gamma: Expr) -> "LaurentPoly":
        """Termwise rule D(phi^k) = k phi^(k-1) (alpha + beta phi
        + gamma phi^2), the closure coming from the kernel ODE."""
        out: dict[int, Expr] = {}

        def acc(k, e):
            out[k] = add(out[k], e) if k in out else e

        for k, c in self.coeffs.items():
            if k == 0:
                continue
            kc = mul(con(k), c)
            acc(k - 1, mul(kc, alpha))
            acc(k, mul(kc, beta))
            acc(k + 1, mul(kc, gamma))
        return LaurentPoly(out)

    def as_expr(self, phi: Expr) -> Expr:
        terms = [mul(c, pow_(phi, k)) for k, c in self.items()]
        return add(*terms) if terms else _ZERO

    def eval_at(self, phi_value: float, env: dict[str, float]) -> float:
        total = 0.0
        for k, c in self.items():
            total += evaluate(c, env) * phi_value ** k
        return total

    def __repr__(self):
        body = ", ".join(f"{k}: {format_expr(c)}" for k, c in self.items())
        return f"LaurentPoly({{{body}}})"


def _expands_to_zero(e: Expr) -> bool:
    """Exact zero test for polynomial coefficient expressions; falls
    back to simplification if a non-polynomial form sneaks in."""
    syms = sorted(free_symbols(e))
    try:
        return pt.poly_is_zero(pt.to_poly(e, syms))
    except pt.NotPolynomial:
        s = simplify(e)
        return getattr(s, "is_rational", False) and not s.value


# ---------------------------------------------------------------------
# balance of leading exponents

# Exponent laws (slope, offset): the cubic convection term carries
# 3m+1, the mixed second/third-derivative products carry 2m+1, and the
# linear dispersive part carries m+3 at ansatz degree m.
BALANCE_PAIRS = (((3, 1), (2, 1)), ((3, 1), (1, 1)), ((2, 1), (1, 3)))

CHOSEN_DEGREE = 2  # degree 0 only reproduces constant states


def balance_m() -> set[int]:
    """Nonnegative integer degrees at which two leading exponent laws
    coincide."""
    out: set[int] = set()
    for (s1, o1), (s2, o2) in BALANCE_PAIRS:
        num, den = o2 - o1, s1 - s2
        if den != 0 and num % den == 0 and num // den >= 0:
            out.add(num // den)
    return out


# ---------------------------------------------------------------------
# algebraic systems

@dataclass(frozen=True)
class AlgebraicSystem:
    """One coefficient equation per collected power, all required to
    vanish.  `powers` records the exponent each equation came from
    (before any clearing shift); `distinct` indexes one representative
    per proportionality class."""

    method: str
    variable: str
    unknowns: tuple[str, ...]
    powers: tuple[int, ...]
    equations: tuple[Expr, ...]
    normalization: str
    distinct: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.equations)

    def max_abs_at(self, env: dict[str, float]) -> float:
        worst = 0.0
        for eq in self.equations:
            v = abs(evaluate(eq, env))
            if math.isnan(v):
                return math.inf
            worst = max(worst, v)
        return worst

    def scale_at(self, env: dict[str, float]) -> float:
        """Largest contributing monomial magnitude: the cancellation
        scale a zero judgement must be measured against."""
        scale = 0.0
        for eq in self.equations:
            terms = eq.terms if isinstance(eq, Add) else (eq,)
            for term in terms:
                v = abs(evaluate(term, env))
                if math.isfinite(v):
                    scale = max(scale, v)
        return scale

    def holds_at(self, env: dict[str, float], tol: float = 1e-10) -> bool:
        """Zero test judged against the cancellation scale, the same
        convention the residual scans use: large parameter values make
        the monomials large, and roundoff grows with them."""
        return self.max_abs_at(env) <= tol * (1.0 + self.scale_at(env))

    def holds_exactly(self, env: dict[str, Fraction]) -> bool:
        return all(evaluate_exact(eq, env) == 0 for eq in self.equations)

    def substituted(self, env: dict[str, Expr | float]) -> \
            "AlgebraicSystem":
        sub = {k: _as_expr(v) for k, v in env.items()}
        eqs = tuple(simplify(substitute_map(e, sub))
                    for e in self.equations)
        unknowns = tuple(u for u in self.unknowns if u not in sub)
        return AlgebraicSystem(self.method, self.variable, unknowns,
                               self.powers, eqs, self.normalization,
                               self.distinct)

    def dump(self) -> list[dict]:
        return [{"power": p, "coefficient": format_expr(eq)}
                for p, eq in zip(self.powers, self.equations)]


def _assemble_system(method: str, variable: str, unknowns: tuple[str, ...],
                     groups: dict[int, pt.Poly], param_names: tuple[str, ...],
                     nonzero: tuple[str, ...], normalization: str,
                     ) -> AlgebraicSystem:
    """Normalize per-power coefficient polynomials into a system:
    strip guaranteed-nonzero monomial factors, divide out rational
    content, drop zero rows, and index proportionality classes."""
    powers: list[int] = []
    equations: list[Expr] = []
    normalized: list[frozenset] = []
    for j in sorted(groups):
        poly = pt.normalize_primitive(
            pt.strip_monomial_gcd(groups[j], param_names, nonzero))
        if pt.poly_is_zero(poly):
            continue
        powers.append(j)
        equations.append(pt.from_poly(poly, param_names))
        normalized.append(frozenset(poly.items()))
    distinct: list[int] = []
    seen: set[frozenset] = set()
    for i, key in enumerate(normalized):
        if key not in seen:
            seen.add(key)
            distinct.append(i)
    return AlgebraicSystem(method, variable, unknowns, tuple(powers),
                           tuple(equations), normalization,
                           tuple(distinct))


def _collect_powers(numerator: Expr, variables: tuple[str, ...],
                    ) -> dict[int, pt.Poly]:
    """Split a polynomial in variables[0] into per-power coefficient
    polynomials over the remaining variables."""
    whole = pt.to_poly(numerator, variables)
    groups: dict[int, pt.Poly] = {}
    for mono, c in whole.items():
        j, rest = mono[0], mono[1:]
        bucket = groups.setdefault(j, {})
        bucket[rest] = bucket.get(rest, Fraction(0)) + c
    return {j: {m: c for m, c in g.items() if c} for j, g in groups.items()}


def _maybe_substitute_b(system: AlgebraicSystem, b) -> AlgebraicSystem:
    if b is None or (isinstance(b, str) and b == "b") or \
            (isinstance(b, Sym) and b.name == "b"):
        return system
    return system.substituted({"b": b})


# ---------------------------------------------------------------------
# route 1: exponential-kernel transformation

def cole_hopf_build(amplitude, background, wavenumber, speed, phase):
    """Profile pair (log-derivative form, cosh form) in x and t.

    The two are pointwise equal: the second x-derivative of
    log(1 + e^theta) is e^theta/(1+e^theta)^2 = 1/(2(1+cosh theta)).
    Amplitude, wavenumber, and speed must be nonzero when given
    numerically.
    """
    for label, v in (("amplitude", amplitude), ("wavenumber", wavenumber),
                     ("speed", speed)):
        if not isinstance(v, Expr) and float(v) == 0.0:
            raise ValueError(f"{label} must be nonzero")
    A, B = _as_expr(amplitude), _as_expr(background)
    mu, lam, delta = map(_as_expr, (wavenumber, speed, phase))
    theta = add(mul(mu, Sym("x")), mul(lam, Sym("t")), delta)
    log_form = add(mul(A, diff(diff(log(add(con(1), exp(theta))), "x"),
                               "x")), B)
    cosh_form = add(mul(A, pow_(mu, 2),
                        pow_(mul(con(2), add(con(1), cosh(theta))), -1)),
                    B)
    return log_form, cosh_form


_CH_UNKNOWNS = ("amp", "bg", "mu", "lam")
_CH_VARS = ("z", "amp", "bg", "mu", "lam", "b")
_SYSTEM_CACHE: dict[str, AlgebraicSystem] = {}


def _euler_step(num: Expr, den_pow: int, scale: Expr, den: Expr,
                dden: Expr) -> tuple[Expr, int]:
    """One application of scale * z * d/dz to num / den^den_pow."""
    z = Sym("z")
    dnum = diff(num, "z")
    new = mul(scale, z, add(mul(dnum, den),
                            mul(con(-den_pow), num, dden)))
    return new, den_pow + 1


def _cole_hopf_system_symbolic() -> AlgebraicSystem:
    got = _SYSTEM_CACHE.get("cole-hopf")
    if got is not None:
        return got
    z = Sym("z")
    A, B, mu, lam, b = (Sym(s) for s in ("amp", "bg", "mu", "lam", "b"))
    w = add(con(1), z)
    dw = con(1)
    # u = (A mu^2 z + B (1+z)^2) / (1+z)^2 in z = exp(mu x + lam t + d)
    P0 = add(mul(A, pow_(mu, 2), z), mul(B, pow_(w, 2)))
    P1, k1 = _euler_step(P0, 2, mu, w, dw)          # u_x
    P2, k2 = _euler_step(P1, k1, mu, w, dw)         # u_xx
    P3, k3 = _euler_step(P2, k2, mu, w, dw)         # u_xxx
    Pt, kt = _euler_step(P0, 2, lam, w, dw)         # u_t
    Pq, kq = _euler_step(Pt, kt, mu, w, dw)
    Pxxt, kxxt = _euler_step(Pq, kq, mu, w, dw)     # u_xxt
    assert (k3, kxxt) == (5, 5)
    # residual u_t - u_xxt + (b+1)u^2 u_x - b u_x u_xx - u u_xxx,
    # multiplied through by (1+z)^7
    total = add(
        mul(Pt, pow_(w, 4)),
        mul(con(-1), Pxxt, pow_(w, 2)),
        mul(add(b, con(1)), P0, P0, P1),
        mul(con(-1), b, P1, P2),
        mul(con(-1), P0, P3),
    )
    groups = _collect_powers(total, _CH_VARS)
    system = _assemble_system(
        "cole-hopf", "exponential of the phase", _CH_UNKNOWNS, groups,
        _CH_VARS[1:], ("amp", "mu"),
        "multiplied by (1+z)^7; amp/mu monomial factors stripped "
        "(both are nonzero by construction); rational content removed")
    _SYSTEM_CACHE["cole-hopf"] = system
    return system


def cole_hopf_system(b="b") -> AlgebraicSystem:
    """Coefficient system of the exponential-kernel route, collected in
    the traveling exponential; b may stay symbolic or be a number."""
    return _maybe_substitute_b(_cole_hopf_system_symbolic(), b)


# ---------------------------------------------------------------------
# route 2: rational hyperbolic ansatz

def rational_hyperbolic_build(a0, a1, a2, c1, c2, lam) -> Expr:
    """(a0 + a1 sinh + a2 cosh)/(1 + c1 sinh + c2 cosh) of x + lam t."""
    a0, a1, a2, c1, c2, lam = map(_as_expr, (a0, a1, a2, c1, c2, lam))
    xi = add(Sym("x"), mul(lam, Sym("t")))
    num = add(a0, mul(a1, sinh(xi)), mul(a2, cosh(xi)))
    den = add(con(1), mul(c1, sinh(xi)), mul(c2, cosh(xi)))
    return mul(num, pow_(den, -1))


_HYP_UNKNOWNS = ("lam", "a0", "a1", "a2", "c1", "c2")
_HYP_VARS = ("z", "lam", "a0", "a1", "a2", "c1", "c2", "b")


def _rational_hyperbolic_system_symbolic() -> AlgebraicSystem:
    got = _SYSTEM_CACHE.get("hyperbolic")
    if got is not None:
        return got
    z = Sym("z")
    lam, a0, a1, a2, c1, c2, b = (Sym(s) for s in _HYP_VARS[1:])
    # numerator and denominator scaled by 2 e^xi, in z = e^xi
    P = add(mul(add(a1, a2), pow_(z, 2)), mul(con(2), a0, z),
            add(a2, mul(con(-1), a1)))
    Q = add(mul(add(c1, c2), pow_(z, 2)), mul(con(2), z),
            add(c2, mul(con(-1), c1)))
    dQ = diff(Q, "z")
    one = con(1)
    N1, n1 = _euler_step(P, 1, one, Q, dQ)       # U'
    N2, n2 = _euler_step(N1, n1, one, Q, dQ)     # U''
    N3, n3 = _euler_step(N2, n2, one, Q, dQ)     # U'''
    assert n3 == 4
    # wave ODE residual times Q^5
    total = add(
        mul(add(b, con(1)), N1, P, P, Q),
        mul(con(-1), N3, P),
        mul(con(-1), lam, N3, Q),
        mul(lam, N1, pow_(Q, 3)),
        mul(con(-1), b, N1, N2),
    )
    groups = _collect_powers(total, _HYP_VARS)
    system = _assemble_system(
        "hyperbolic", "exponential of the wave variable", _HYP_UNKNOWNS,
        groups, _HYP_VARS[1:], (),
        "multiplied by denominator^5 in the exponential variable; "
        "common exponential powers dropped (collection variable is "
        "nonvanishing); rational content removed")
    _SYSTEM_CACHE["hyperbolic"] = system
    return system


def rational_hyperbolic_system(b="b") -> AlgebraicSystem:
    """Coefficient system of the rational hyperbolic route."""
    return _maybe_substitute_b(_rational_hyperbolic_system_symbolic(), b)


# ---------------------------------------------------------------------
# route 3: quadratic-ODE kernel expansion

CLEARING_POWER = 7  # 3*CHOSEN_DEGREE + 1: lowest/highest kernel power


def laurent_residual(a0, a1, a2, c1, c2, alpha, beta, gamma, lam,
                     b) -> LaurentPoly:
    """Wave ODE residual of u = a0 + a1 phi + a2 phi^2 + c1/phi
    + c2/phi^2 as a Laurent polynomial in the kernel phi."""
    a0, a1, a2, c1, c2, alpha, beta, gamma, lam, b = map(
        _as_expr, (a0, a1, a2, c1, c2, alpha, beta, gamma, lam, b))
    U = LaurentPoly({-2: c2, -1: c1, 0: a0, 1: a1, 2: a2})
    U1 = U.derivative(alpha, beta, gamma)
    U2 = U1.derivative(alpha, beta, gamma)
    U3 = U2.derivative(alpha, beta, gamma)
    bp1 = add(b, con(1))
    neg = con(-1)
    return (U1 * U * U).scale(bp1) \
        + (U3 * U).scale(neg) \
        + U3.scale(mul(neg, lam)) \
        + U1.scale(lam) \
        + (U1 * U2).scale(mul(neg, b))


def tanh_coth_substitute(a0, a1, a2, c1, c2, spec: RiccatiSpec, lam,
                         b) -> LaurentPoly:
    """Residual Laurent polynomial for concrete kernel-ODE
    coefficients, cleared of negative powers by the minimal shift
    (phi^7 for the full degree-2 ansatz)."""
    L = laurent_residual(a0, a1, a2, c1, c2, con(spec.alpha),
                         con(spec.beta), con(spec.gamma), lam, b)
    if L.is_zero():
        return L
    return L.shift(max(0, -L.k_min))


_TC_UNKNOWNS = ("lam", "a0", "a1", "a2", "c1", "c2", "alpha", "beta",
                "gamma")
_TC_VARS = _TC_UNKNOWNS + ("b",)


def _tanh_coth_system_symbolic() -> AlgebraicSystem:
    got = _SYSTEM_CACHE.get("tanh-coth")
    if got is not None:
        return got
    syms = {n: Sym(n) for n in _TC_VARS}
    L = laurent_residual(*(syms[n] for n in
                           ("a0", "a1", "a2", "c1", "c2", "alpha",
                            "beta", "gamma", "lam", "b")))
    groups = {k: pt.to_poly(c, _TC_VARS) for k, c in L.items()}
    system = _assemble_system(
        "tanh-coth", "kernel function of the quadratic ODE",
        _TC_UNKNOWNS, groups, _TC_VARS, (),
        "kernel powers collected directly from the Laurent residual; "
        "powers quoted before the phi^7 clearing shift; rational "
        "content removed")
    _SYSTEM_CACHE["tanh-coth"] = system
    return system


def tanh_coth_system(b="b") -> AlgebraicSystem:
    """Coefficient system of the quadratic-ODE kernel route."""
    return _maybe_substitute_b(_tanh_coth_system_symbolic(), b)


# ---------------------------------------------------------------------
# family parameter maps

def _sqrt_checked(v, what: str):
    if v < 0:
        raise ValueError(f"negative radicand for {what}: {v}")
    if isinstance(v, Fraction):
        # keep perfect squares exact so rational maps stay rational
        rn, rd = math.isqrt(v.numerator), math.isqrt(v.denominator)
        if rn * rn == v.numerator and rd * rd == v.denominator:
            return Fraction(rn, rd)
    return math.sqrt(v)


def _ch_env(sign: int, b: float, mu: float) -> dict[str, float]:
    s = _sqrt_checked(1 - b * (b + 2) * (mu ** 4 - 1), "exponential map")
    return {
        "amp": -6 * (b + 2) / (b + 1),
        "bg": (2 * mu ** 2 - 1 + b * (mu ** 2 - 1) + sign * s)
        / (2 * (b + 1)),
        "mu": mu,
        "lam": -mu * (b + 1 - sign * s) / 2,
        "b": b,
    }


def _hyp_env(b: float, lam, a0, a1, a2, c1, c2) -> dict[str, float]:
    return {"lam": lam, "a0": a0, "a1": a1, "a2": a2, "c1": c1,
            "c2": c2, "b": b}


def _tc_env(b: float, lam, a0, a1, a2, c1, c2, alpha, beta,
            gamma) -> dict[str, float]:
    return {"lam": lam, "a0": a0, "a1": a1, "a2": a2, "c1": c1,
            "c2": c2, "alpha": alpha, "beta": beta, "gamma": gamma,
            "b": b}


def _env_u1(b, p, aux):
    return _ch_env(+1, b, p["mu"])


def _env_u2(b, p, aux):
    return _ch_env(-1, b, p["mu"])


def _env_u3(b, p, aux):
    return _hyp_env(b, -b / 2, -(3 * b + 5) / (b + 1), 0,
                    1 / (b + 1), 0, 1)


def _env_u4(b, p, aux):
    return _hyp_env(b, -b / 2, -(3 * b + 5) / (b + 1), 0,
                    -1 / (b + 1), 0, -1)


def _env_u5(b, p, aux):
    return _hyp_env(b, -b / 2 - 1, -3 * (b + 2) / (b + 1), 0, 0,
                    0, -1)


def _env_u6(b, p, aux):
    return _hyp_env(b, -b / 2 - 1, -3 * (b + 2) / (b + 1), 0, 0,
                    0, 1)


def _env_u78(sign: int, b: float, a2: float) -> dict[str, float]:
    s = _sqrt_checked((b + 1) ** 2 * a2 ** 2 - 1, "hyperbolic root")
    return _hyp_env(b, -b / 2, -(3 * b + 5) / (b + 1),
                    sign * s / (b + 1), a2, sign * s, a2 * (b + 1))


def _env_u7(b, p, aux):
    return _env_u78(-1, b, p["a2"])


def _env_u8(b, p, aux):
    return _env_u78(+1, b, p["a2"])


def _env_u910(sign: int, b: float, c2: float) -> dict[str, float]:
    s = _sqrt_checked(c2 ** 2 - 1, "shifted-pole root")
    return _hyp_env(b, -b / 2 - 1, -3 * (b + 2) / (b + 1), 0, 0,
                    sign * s, c2)


def _env_u9(b, p, aux):
    return _env_u910(+1, b, p["c2"])


def _env_u10(b, p, aux):
    return _env_u910(-1, b, p["c2"])


def _env_u11(b, p, aux):
    beta = p["beta"]
    alpha = aux.get("alpha", 1.0) if aux else 1.0
    gamma = beta ** 2 / (4 * alpha)
    k = 6 * (b + 2) / (b + 1)
    return _tc_env(b, -b - 1, 3 * (b + 2) * beta ** 2 / (2 * (b + 1)) - 1,
                   0, 0, k * alpha * beta, k * alpha ** 2,
                   alpha, beta, gamma)


def _env_u1213(sign: int, b: float, beta: float,
               gamma: float) -> dict[str, float]:
    s = _sqrt_checked(1 - b * (b + 2) * (beta ** 4 - 1), "exp-pole map")
    k = 6 * (b + 2) / (b + 1)
    return _tc_env(b, (-b + sign * s - 1) / 2,
                   ((b + 2) * beta ** 2 - b - 1 + sign * s)
                   / (2 * (b + 1)),
                   k * beta * gamma, k * gamma ** 2, 0, 0,
                   0, beta, gamma)


def _env_u12(b, p, aux):
    return _env_u1213(-1, b, p["beta"], p["gamma"])


def _env_u13(b, p, aux):
    return _env_u1213(+1, b, p["beta"], p["gamma"])


def _env_u1415(sign: int, b: float, alpha: float,
               gamma: float) -> dict[str, float]:
    s = _sqrt_checked(b * (b + 2) * (1 - 256 * alpha ** 2 * gamma ** 2)
                      + 1, "paired trig map")
    k = 6 * (b + 2) / (b + 1)
    ag = alpha * gamma
    return _tc_env(b, (-b + sign * s - 1) / 2,
                   (8 * ag * b - b + 16 * ag + sign * s - 1)
                   / (2 * (b + 1)),
                   0, k * gamma ** 2, 0, k * alpha ** 2,
                   alpha, 0, gamma)


def _env_u14(b, p, aux):
    return _env_u1415(-1, b, p["alpha"], p["gamma"])


def _env_u15(b, p, aux):
    return _env_u1415(+1, b, p["alpha"], p["gamma"])


def _env_u16_19(sign: int, keep_a2: bool, b: float, alpha: float,
                gamma: float) -> dict[str, float]:
    s = _sqrt_checked(b * (b + 2) * (1 - 16 * alpha ** 2 * gamma ** 2)
                      + 1, "single trig map")
    k = 6 * (b + 2) / (b + 1)
    ag = alpha * gamma
    a0 = (8 * ag * b - b + 16 * ag + sign * s - 1) / (2 * (b + 1))
    a2 = k * gamma ** 2 if keep_a2 else 0
    c2 = 0 if keep_a2 else k * alpha ** 2
    return _tc_env(b, (-b + sign * s - 1) / 2, a0, 0, a2, 0, c2,
                   alpha, 0, gamma)


def _env_u16(b, p, aux):
    return _env_u16_19(-1, False, b, p["alpha"], p["gamma"])


def _env_u17(b, p, aux):
    return _env_u16_19(-1, True, b, p["alpha"], p["gamma"])


def _env_u18(b, p, aux):
    return _env_u16_19(+1, False, b, p["alpha"], p["gamma"])


def _env_u19(b, p, aux):
    return _env_u16_19(+1, True, b, p["alpha"], p["gamma"])


def _env_u20_23(sign: int, inverse_branch: bool, b: float, alpha: float,
                beta: float, gamma: float) -> dict[str, float]:
    delta = beta ** 2 - 4 * alpha * gamma
    s = _sqrt_checked(1 - b * (b + 2) * (delta ** 2 - 1),
                      "composite map")
    k = 6 * (b + 2) / (b + 1)
    ag = alpha * gamma
    a0 = (24 * ag + 2 * delta + b * (12 * ag + delta - 1) + sign * s - 1) \
        / (2 * (b + 1))
    if inverse_branch:
        a1 = a2 = 0
        c1, c2 = k * alpha * beta, k * alpha ** 2
    else:
        a1, a2 = k * beta * gamma, k * gamma ** 2
        c1 = c2 = 0
    return _tc_env(b, (-b + sign * s - 1) / 2, a0, a1, a2, c1, c2,
                   alpha, beta, gamma)


def _env_u20(b, p, aux):
    return _env_u20_23(-1, False, b, p["alpha"], p["beta"], p["gamma"])


def _env_u21(b, p, aux):
    return _env_u20_23(+1, False, b, p["alpha"], p["beta"], p["gamma"])


def _env_u22(b, p, aux):
    return _env_u20_23(+1, True, b, p["alpha"], p["beta"], p["gamma"])


def _env_u23(b, p, aux):
    return _env_u20_23(-1, True, b, p["alpha"], p["beta"], p["gamma"])


_ENV_BUILDERS = {
    "u1": _env_u1, "u2": _env_u2, "u3": _env_u3, "u4": _env_u4,
    "u5": _env_u5, "u6": _env_u6, "u7": _env_u7, "u8": _env_u8,
    "u9": _env_u9, "u10": _env_u10, "u11": _env_u11, "u12": _env_u12,
    "u13": _env_u13, "u14": _env_u14, "u15": _env_u15, "u16": _env_u16,
    "u17": _env_u17, "u18": _env_u18, "u19": _env_u19, "u20": _env_u20,
    "u21": _env_u21, "u22": _env_u22, "u23": _env_u23,
}


def _method_for(fid: str) -> str:
    n = int(fid[1:])
    if n <= 2:
        return "cole-hopf"
    if n <= 10:
        return "hyperbolic"
    return "tanh-coth"


def system_for_family(fid: str, b="b") -> AlgebraicSystem:
    if fid not in _ENV_BUILDERS:
        raise KeyError(f"unknown family '{fid}' (expected u1..u23)")
    method = _method_for(fid)
    if method == "cole-hopf":
        return cole_hopf_system(b)
    if method == "hyperbolic":
        return rational_hyperbolic_system(b)
    return tanh_coth_system(b)


def family_system_env(fid: str, b: float, params: dict[str, float],
                      aux: dict[str, float] | None = None,
                      ) -> dict[str, float]:
    """Substitution environment sending the family's closed-form
    parameters into its route's system unknowns.  `aux` supplies
    values for auxiliary degrees of freedom the closed form does not
    pin down (the degenerate-discriminant family leaves one kernel
    coefficient free)."""
    if fid not in _ENV_BUILDERS:
        raise KeyError(f"unknown family '{fid}' (expected u1..u23)")
    if not isinstance(b, Fraction):
        b = float(b)
    return _ENV_BUILDERS[fid](b, params, aux)


def verify_family_against_system(fid: str, b: float,
                                 params: dict[str, float],
                                 tol: float = 1e-10,
                                 aux: dict[str, float] | None = None,
                                 ) -> bool:
    """True iff the family's parameter map annihilates every equation
    of its route's regenerated system at these values."""
    env = family_system_env(fid, b, params, aux)
    return system_for_family(fid).holds_at(env, tol)
