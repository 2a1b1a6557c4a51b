"""Registry of closed-form traveling-wave families for the cubic-
convection b-family equation.

Each family is a profile U(xi) on the moving coordinate xi = x + lam*t,
with its speed lam, parameter list, admissibility constraints, and the
denominators whose zeros are profile poles.  Profiles and speeds are
symbolic in b and the parameters, so one cached residual per family
serves every numeric scan.

Families come in structural groups that mirror how they were derived:

  u1-u2    bell profiles from a log-second-derivative ansatz
  u3-u10   ratios of {1, sinh, cosh} combinations
  u11      rational-in-xi degenerate branch
  u12-u13  exponential pole pairs
  u14-u19  trigonometric (csc^2 / cot^2 / tan^2) branches
  u20-u23  tanh^2 and tanh-composite branches

u10's widely circulated closed form does not satisfy the equation (two
sign slips); the registry entry is built from its generating parameter
set instead, and `printed_u10` preserves the circulated rendering for
negative-control tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .expr import (
    Expr, cos, cosh, cot, csc, evaluate, exp, format_expr, free_symbols,
    simplify, sin, sinh, sqrt, sym, tan, tanh,
)
from .residual import (
    EquationVariant, ResidualReport, classic_eq, find_zeros, modified_eq,
    ode_residual, require_valid_b, scan,
)

__all__ = [
    "Family", "FamilyInstance", "FAMILIES", "family", "family_ids",
    "profile_with_values", "speed_value", "is_valid", "singular_points",
    "verify_family", "draw_params", "method_tag", "catalog_manifest",
    "printed_u10",
    "tanh_composite_profile",
]

XI = sym("xi")
B = sym("b")
MU = sym("mu")
A2 = sym("a2")
C2 = sym("c2")
AL = sym("alpha")
BE = sym("beta")
GA = sym("gamma")

# constraint kinds: value must be far from zero / nonnegative / positive
NONZERO, NONNEG, POSITIVE = "nonzero", "nonneg", "positive"


@dataclass(frozen=True)
class Family:
    family_id: str
    description: str
    parameters: tuple
    profile: Expr            # symbols: xi, b, *parameters
    speed: Expr              # symbols: b, *parameters
    constraints: tuple       # (label, expr, kind)
    singular_denoms: tuple   # expressions of xi whose zeros are poles
    draw: Callable           # (rng, b) -> params dict

    def bound_symbols(self) -> frozenset:
        return frozenset(("b",) + self.parameters)


def _check(label: str, e: Expr, kind: str):
    return (label, simplify(e), kind)


# ---------------------------------------------------------------------
# group builders

def _r_quartic(p: Expr) -> Expr:
    # 1 - b(b+2)(p^4 - 1): under the radical in several speed formulas
    return 1 - B * (B + 2) * (p ** 4 - 1)


def _bell_family(sign: int):
    # U = head - 3(b+2)mu^2 / ((b+1)(1+cosh(mu xi)))
    sr = sqrt(_r_quartic(MU))
    lam = -(B + 1 + sign * sr) / 2
    if sign < 0:
        head = (2 * MU ** 2 - 1 + B * (MU ** 2 - 1) + sr) / (2 * (B + 1))
    else:
        head = (B * MU ** 2 + 2 * MU ** 2 - 1 - B - sr) / (2 * (B + 1))
    U = head - 3 * (B + 2) * MU ** 2 / ((B + 1) * (1 + cosh(MU * XI)))
    return U, lam


def _bell_draw(rng, b):
    return {"mu": float(rng.uniform(0.4, 1.0))}


def _cosh_ratio(numer_sign: int, denom_sign: int):
    # u3/u4: (-(3b+5) +- cosh)/((b+1)(1 +- cosh))
    U = (-(3 * B + 5) - numer_sign * cosh(XI)) / \
        ((B + 1) * (1 + denom_sign * cosh(XI)))
    return U, -B / 2


def _pure_bell(denom_sign: int):
    # u5/u6: -3(b+2)/((b+1)(1 +- cosh))
    U = -3 * (B + 2) / ((B + 1) * (1 + denom_sign * cosh(XI)))
    return U, -B / 2 - 1


def _mixed_hyperbolic(sign: int):
    # u7/u8: numerator and denominator share the sinh/cosh combination
    q = sqrt((B + 1) ** 2 * A2 ** 2 - 1)
    combo = sign * q * sinh(XI) + (B + 1) * A2 * cosh(XI)
    U = (-(3 * B + 5) + combo) / ((B + 1) * (1 + combo))
    return U, -B / 2, (1 + combo,)


def _mixed_draw(rng, b):
    m = float(rng.uniform(1.05, 2.5)) * float(rng.choice([-1.0, 1.0]))
    return {"a2": m / (b + 1.0)}


def _pole_hyperbolic(sign: int):
    # u9/u10: -3(b+2) over a unit-discriminant sinh/cosh denominator
    c1 = sqrt(C2 ** 2 - 1)
    D = 1 + sign * c1 * sinh(XI) + C2 * cosh(XI)
    U = -3 * (B + 2) / ((B + 1) * D)
    return U, -B / 2 - 1, (D,)


def _pole_draw(rng, b):
    return {"c2": float(rng.uniform(1.05, 2.5)) *
            float(rng.choice([-1.0, 1.0]))}


def _rational_quadratic():
    # u11: lone rational branch, double pole at xi = -2/beta
    U = 6 * (B + 2) * BE ** 2 / ((B + 1) * (BE * XI + 2) ** 2) - 1
    return U, -B - 1, (BE * XI + 2,)


def _exp_pole(sign: int):
    # u12/u13: simple-plus-double exponential pole
    sr = sqrt(_r_quartic(BE))
    lam = (-B + sign * sr - 1) / 2
    head = ((B + 2) * BE ** 2 - B - 1 + sign * sr) / (2 * (B + 1))
    D = BE * exp(-BE * XI) - GA
    U = head + (6 * (B + 2) * GA * BE ** 2 / (B + 1)) * \
        (1 / D + GA / D ** 2)
    return U, lam, (D,)


def _exp_pole_draw(rng, b):
    return {
        "beta": float(rng.uniform(0.4, 1.0)) *
        float(rng.choice([-1.0, 1.0])),
        "gamma": float(rng.uniform(0.3, 2.0)) *
        float(rng.choice([-1.0, 1.0])),
    }


def _csc_branch(sign: int):
    # u14/u15
    root = sqrt(B * (B + 2) * (1 - 256 * AL ** 2 * GA ** 2) + 1)
    s = sqrt(AL * GA)
    lam = (-B + sign * root - 1) / 2
    U = (-(B + 1) - 16 * AL * GA * (B + 2) + sign * root
         + 48 * AL * GA * (B + 2) * csc(2 * s * XI) ** 2) / (2 * (B + 1))
    return U, lam, (sin(2 * s * XI),)


def _csc_draw(rng, b):
    p = float(rng.uniform(0.01, 0.06))
    a = float(rng.uniform(0.2, 1.2)) * float(rng.choice([-1.0, 1.0]))
    return {"alpha": a, "gamma": p / a}


def _trig_sq_branch(kind: str, sign: int):
    # u16-u19: cot^2 or tan^2 over the shared constant block
    root = sqrt(B * (B + 2) * (1 - 16 * AL ** 2 * GA ** 2) + 1)
    s = sqrt(AL * GA)
    lam = (-B + sign * root - 1) / 2
    osc = cot(s * XI) if kind == "cot" else tan(s * XI)
    U = (-(B + 1) + 8 * AL * GA * (B + 2) + sign * root
         + 12 * AL * GA * (B + 2) * osc ** 2) / (2 * (B + 1))
    denom = sin(s * XI) if kind == "cot" else cos(s * XI)
    return U, lam, (denom,)


def _trig_draw(rng, b):
    p = float(rng.uniform(0.02, 0.24))
    a = float(rng.uniform(0.2, 1.2)) * float(rng.choice([-1.0, 1.0]))
    return {"alpha": a, "gamma": p / a}


_DELTA = BE ** 2 - 4 * AL * GA
_R_DELTA = 1 - B * (B + 2) * (_DELTA ** 2 - 1)


def _tanh_sq(sign: int):
    # u20/u21: flat background plus tanh^2 bump
    root = sqrt(_R_DELTA)
    lam = (-B + sign * root - 1) / 2
    U = -(2 * _DELTA * (B + 2) + B + 1 - sign * root) / (2 * (B + 1)) \
        + (3 * (B + 2) * _DELTA / (2 * (B + 1))) * \
        tanh(sqrt(_DELTA) * XI / 2) ** 2
    return U, lam


def tanh_composite_profile(sign: int, tanh_sign: int = 1,
                           inverse_term_sign: int = 1):
    """u22/u23 structure, exposed for symmetry and corruption probes.

    tanh_sign = -1 reflects the profile in xi; the wave equation is
    invariant under xi -> -xi, so the reflection still solves it.
    inverse_term_sign = -1 flips the first inverse-power coefficient
    only -- a genuine corruption that must fail the residual scan."""
    root = sqrt(_R_DELTA)
    sd = sqrt(_DELTA)
    T = tanh_sign * tanh(sd * XI / 2)
    lam = (-B + sign * root - 1) / 2
    head = ((_DELTA + 12 * AL * GA) * (B + 2) - (B + 1) + sign * root) / \
        (2 * (B + 1))
    denom = BE + sd * T
    inv1 = -12 * (B + 2) * AL * BE * GA / ((B + 1) * denom)
    inv2 = 24 * (B + 2) * AL ** 2 * GA ** 2 / ((B + 1) * denom ** 2)
    U = head + inverse_term_sign * inv1 + inv2
    return U, lam, (denom,)


def _tanh_draw(rng, b, need_ag: bool = False):
    while True:
        delta = float(rng.uniform(0.3, 1.0))
        beta = float(rng.uniform(0.3, 1.2)) * float(rng.choice([-1.0, 1.0]))
        if not need_ag or abs(beta ** 2 - delta) >= 0.05:
            break
    a = float(rng.uniform(0.3, 1.0)) * float(rng.choice([-1.0, 1.0]))
    g = (beta ** 2 - delta) / (4 * a)
    return {"alpha": a, "beta": beta, "gamma": g}


def printed_u10() -> tuple[Expr, Expr]:
    """u10 exactly as circulated (profile, speed).  Fails the equation:
    kept as a negative control and provenance record."""
    c1 = sqrt(C2 ** 2 - 1)
    D = 1 + c1 * sinh(XI) - C2 * cosh(XI)
    U = 3 * (B + 2) / ((B + 1) * D)
    return simplify(U), simplify(-B / 2 - 1)


# ---------------------------------------------------------------------
# registry

def _fam(fid, desc, params, profile, speed, constraints, denoms, draw):
    return Family(fid, desc, tuple(params), simplify(profile),
                  simplify(speed), tuple(constraints),
                  tuple(simplify(d) for d in denoms), draw)


def _build_families() -> dict:
    fams = {}

    U, lam = _bell_family(-1)
    fams["u1"] = _fam(
        "u1", "bell profile over 1+cosh(mu*xi), slow-speed branch",
        ("mu",), U, lam,
        [_check("mu != 0", MU, NONZERO),
         _check("1 - b(b+2)(mu^4-1) >= 0", _r_quartic(MU), NONNEG)],
        (), _bell_draw)

    U, lam = _bell_family(+1)
    fams["u2"] = _fam(
        "u2", "bell profile over 1+cosh(mu*xi), fast-speed branch",
        ("mu",), U, lam,
        [_check("mu != 0", MU, NONZERO),
         _check("1 - b(b+2)(mu^4-1) >= 0", _r_quartic(MU), NONNEG)],
        (), _bell_draw)

    U, lam = _cosh_ratio(-1, +1)
    fams["u3"] = _fam("u3", "cosh ratio over 1+cosh, smooth", (),
                      U, lam, [], (), lambda rng, b: {})
    U, lam = _cosh_ratio(+1, -1)
    fams["u4"] = _fam("u4", "cosh ratio over 1-cosh, pole at origin", (),
                      U, lam, [], (1 - cosh(XI),), lambda rng, b: {})
    U, lam = _pure_bell(-1)
    fams["u5"] = _fam("u5", "pure bell over 1-cosh, pole at origin", (),
                      U, lam, [], (1 - cosh(XI),), lambda rng, b: {})
    U, lam = _pure_bell(+1)
    fams["u6"] = _fam("u6", "pure bell over 1+cosh, smooth", (),
                      U, lam, [], (), lambda rng, b: {})

    U, lam, denoms = _mixed_hyperbolic(-1)
    fams["u7"] = _fam(
        "u7", "shared sinh/cosh ratio, minus-root pairing", ("a2",),
        U, lam,
        [_check("(b+1)^2 a2^2 - 1 >= 0",
                (B + 1) ** 2 * A2 ** 2 - 1, NONNEG)],
        denoms, _mixed_draw)
    U, lam, denoms = _mixed_hyperbolic(+1)
    fams["u8"] = _fam(
        "u8", "shared sinh/cosh ratio, plus-root pairing", ("a2",),
        U, lam,
        [_check("(b+1)^2 a2^2 - 1 >= 0",
                (B + 1) ** 2 * A2 ** 2 - 1, NONNEG)],
        denoms, _mixed_draw)

    U, lam, denoms = _pole_hyperbolic(+1)
    fams["u9"] = _fam(
        "u9", "bell over unit-discriminant sinh/cosh, plus pairing",
        ("c2",), U, lam,
        [_check("c2^2 - 1 >= 0", C2 ** 2 - 1, NONNEG)],
        denoms, _pole_draw)
    U, lam, denoms = _pole_hyperbolic(-1)
    fams["u10"] = _fam(
        "u10", "bell over unit-discriminant sinh/cosh, minus pairing "
        "(rebuilt from its parameter set; circulated rendering is wrong)",
        ("c2",), U, lam,
        [_check("c2^2 - 1 >= 0", C2 ** 2 - 1, NONNEG)],
        denoms, _pole_draw)

    U, lam, denoms = _rational_quadratic()
    fams["u11"] = _fam(
        "u11", "rational double-pole branch (degenerate discriminant)",
        ("beta",), U, lam,
        [_check("beta != 0", BE, NONZERO)],
        denoms, lambda rng, b: {"beta": float(rng.uniform(0.3, 1.5)) *
                                float(rng.choice([-1.0, 1.0]))})

    for fid, sign in (("u12", -1), ("u13", +1)):
        U, lam, denoms = _exp_pole(sign)
        fams[fid] = _fam(
            fid, "exponential simple+double pole, "
            f"{'minus' if sign < 0 else 'plus'}-root speed",
            ("beta", "gamma"), U, lam,
            [_check("beta != 0", BE, NONZERO),
             _check("gamma != 0", GA, NONZERO),
             _check("1 - b(b+2)(beta^4-1) >= 0", _r_quartic(BE), NONNEG)],
            denoms, _exp_pole_draw)

    for fid, sign in (("u14", -1), ("u15", +1)):
        U, lam, denoms = _csc_branch(sign)
        fams[fid] = _fam(
            fid, "csc^2 lattice of singular waves, "
            f"{'minus' if sign < 0 else 'plus'}-root speed",
            ("alpha", "gamma"), U, lam,
            [_check("alpha*gamma > 0", AL * GA, POSITIVE),
             _check("b(b+2)(1-256 a^2 g^2) + 1 >= 0",
                    B * (B + 2) * (1 - 256 * AL ** 2 * GA ** 2) + 1,
                    NONNEG)],
            denoms, _csc_draw)

    trig_constraints = [
        _check("alpha*gamma > 0", AL * GA, POSITIVE),
        _check("b(b+2)(1-16 a^2 g^2) + 1 >= 0",
               B * (B + 2) * (1 - 16 * AL ** 2 * GA ** 2) + 1, NONNEG)]
    for fid, kind, sign in (("u16", "cot", -1), ("u17", "tan", -1),
                            ("u18", "cot", +1), ("u19", "tan", +1)):
        U, lam, denoms = _trig_sq_branch(kind, sign)
        fams[fid] = _fam(
            fid, f"{kind}^2 periodic branch, "
            f"{'minus' if sign < 0 else 'plus'}-root speed",
            ("alpha", "gamma"), U, lam, trig_constraints, denoms,
            _trig_draw)

    tanh_constraints = [
        _check("beta^2 - 4 alpha gamma > 0", _DELTA, POSITIVE),
        _check("1 - b(b+2)(D^2-1) >= 0", _R_DELTA, NONNEG)]
    for fid, sign in (("u20", -1), ("u21", +1)):
        U, lam = _tanh_sq(sign)
        fams[fid] = _fam(
            fid, "tanh^2 kink-squared profile, "
            f"{'minus' if sign < 0 else 'plus'}-root speed",
            ("alpha", "beta", "gamma"), U, lam, tanh_constraints, (),
            lambda rng, b: _tanh_draw(rng, b, need_ag=False))

    comp_constraints = tanh_constraints + [
        _check("alpha*gamma != 0", AL * GA, NONZERO)]
    for fid, sign in (("u22", +1), ("u23", -1)):
        U, lam, denoms = tanh_composite_profile(sign)
        fams[fid] = _fam(
            fid, "tanh composite with moving pole, "
            f"{'plus' if sign > 0 else 'minus'}-root speed",
            ("alpha", "beta", "gamma"), U, lam, comp_constraints, denoms,
            lambda rng, b: _tanh_draw(rng, b, need_ag=True))

    return fams


FAMILIES: dict[str, Family] = _build_families()


def family_ids() -> list[str]:
    return [f"u{i}" for i in range(1, 24)]


def family(fid: str) -> Family:
    try:
        return FAMILIES[fid]
    except KeyError:
        raise KeyError(f"unknown family '{fid}'; known: u1..u23") from None


# ---------------------------------------------------------------------
# numeric services

def _env(fid: str, b: float, params: Mapping[str, float]) -> dict:
    fam = family(fid)
    missing = [p for p in fam.parameters if p not in params]
    if missing:
        raise ValueError(f"{fid} needs parameters {missing}")
    extra = [p for p in params if p not in fam.parameters]
    if extra:
        raise ValueError(f"{fid} does not take parameters {extra}")
    env = {p: float(params[p]) for p in fam.parameters}
    env["b"] = float(b)
    return env


def is_valid(fid: str, b: float, params: Mapping[str, float]
             ) -> tuple[bool, list[str]]:
    """Check b-admissibility and every family constraint; returns
    (ok, list of violated constraint labels)."""
    fam = family(fid)
    bad: list[str] = []
    try:
        require_valid_b(float(b))
    except ValueError as e:
        return False, [str(e)]
    env = _env(fid, b, params)
    for label, e, kind in fam.constraints:
        v = evaluate(e, env)
        if kind == NONZERO and abs(v) <= 1e-9:
            bad.append(label)
        elif kind == NONNEG and v < -1e-12:
            bad.append(label)
        elif kind == POSITIVE and v <= 1e-9:
            bad.append(label)
    return (not bad), bad


def profile_with_values(fid: str, b: float,
                        params: Mapping[str, float]) -> Expr:
    """The profile with b and parameters substituted (still symbolic
    in xi)."""
    from .expr import substitute_map
    fam = family(fid)
    env = _env(fid, b, params)
    return simplify(substitute_map(fam.profile, env))


def speed_value(fid: str, b: float, params: Mapping[str, float]) -> float:
    fam = family(fid)
    return evaluate(fam.speed, _env(fid, b, params))


def singular_points(fid: str, b: float, params: Mapping[str, float],
                    window: tuple[float, float]) -> list[float]:
    """xi locations inside the open window where any singular
    denominator of the family vanishes."""
    fam = family(fid)
    env = _env(fid, b, params)
    pts: list[float] = []
    for d in fam.singular_denoms:
        pts.extend(find_zeros(d, "xi", window, env=env))
    out: list[float] = []
    for p in sorted(pts):
        if not out or p - out[-1] > 1e-8:
            out.append(p)
    return out


_residual_cache: dict[tuple[str, str], Expr] = {}


def _family_residual(fid: str, variant: str) -> Expr:
    key = (fid, variant)
    got = _residual_cache.get(key)
    if got is None:
        fam = family(fid)
        eq = modified_eq(B) if variant == "mdp" else classic_eq(B)
        got = ode_residual(fam.profile, eq, fam.speed)
        _residual_cache[key] = got
    return got


def verify_family(fid: str, b: float, params: Mapping[str, float],
                  window: tuple[float, float] = (-8.0, 8.0),
                  n: int = 257, tol: float = 1e-9,
                  variant: str = "mdp") -> ResidualReport:
    """Scan the traveling-reduction residual of one family member.

    Validity must be checked by the caller (`is_valid`); here invalid
    parameters surface as non-finite values or failed scans.
    """
    env = _env(fid, b, params)
    R = _family_residual(fid, variant)
    excl = singular_points(fid, b, params, window)
    return scan(R, env, window=window, n=n, exclusions=excl, tol=tol)


@dataclass(frozen=True)
class FamilyInstance:
    """A family bound to concrete admissible parameter values.

    Construction validates b-admissibility and every family constraint
    (strict inequalities with margin), so any instance that exists can
    be built and evaluated away from its singular points.
    """
    family_id: str
    b: float
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        frozen = dict(self.params)
        object.__setattr__(self, "params", frozen)
        ok, bad = is_valid(self.family_id, self.b, frozen)
        if not ok:
            raise ValueError(f"{self.family_id} instance is inadmissible:"
                             f" {', '.join(bad)}")

    def profile(self) -> Expr:
        """U(xi) with all parameters substituted."""
        return profile_with_values(self.family_id, self.b, self.params)

    def speed(self) -> float:
        return speed_value(self.family_id, self.b, self.params)

    def build(self) -> Expr:
        """The candidate solution u(x, t) on xi = x + lam*t."""
        from .residual import traveling_profile
        return traveling_profile(self.profile(), self.speed())

    def singularities(self, window: tuple[float, float]) -> list[float]:
        return singular_points(self.family_id, self.b, self.params,
                               window)


def draw_params(fid: str, rng: np.random.Generator, b: float) -> dict:
    """One admissible parameter draw (family-specific strategy with
    safety margins away from constraint boundaries)."""
    fam = family(fid)
    for _ in range(100):
        params = fam.draw(rng, b)
        ok, _bad = is_valid(fid, b, params)
        if ok:
            return params
    raise RuntimeError(f"could not draw valid parameters for {fid}")


def method_tag(fid: str) -> str:
    """Which construction route generated the family."""
    n = int(family(fid).family_id[1:])
    if n <= 2:
        return "colehopf"
    if n <= 10:
        return "hyperbolic"
    return "tanhcoth"


def catalog_manifest() -> list[dict]:
    """JSON-ready description of every family."""
    out = []
    for fid in family_ids():
        fam = FAMILIES[fid]
        out.append({
            "family_id": fam.family_id,
            "method": method_tag(fid),
            "description": fam.description,
            "parameters": list(fam.parameters),
            "profile": format_expr(fam.profile),
            "wave_speed": format_expr(fam.speed),
            "constraints": [label for label, _, _ in fam.constraints],
            "singular_denominators": [format_expr(d)
                                      for d in fam.singular_denoms],
        })
    return out
