"""Command-line front end: reproducible verification runs and reports.

Subcommands
    list            catalog of the 23 families (``--json``: machine form)
    verify          residual scans of catalog families or an explicit
                    profile expression
    riccati-audit   printed-vs-corrected kernel branch table
    system-verify   coefficient-system annihilation for one family
    simulate        manufactured-solution integration run

Every invocation resolves to a run manifest (command, seed, tool
version, resolved parameters, output paths) embedded in any JSON
report it emits.  Reports are deterministic: identical manifests give
byte-identical documents.  JSON keys appear in fixed order and floats
carry 17 significant digits; CSV files use shortest round-trip floats.

Exit codes: 0 all requested checks passed; 1 usage error; 2 validity
violation (excluded b, inadmissible or singular parameters, unstable
step); 3 a scan or system verification failed; 4 numerical blow-up.
The seed defaults to 42; the environment variable MDPV_SEED overrides
the default and ``--seed`` overrides both.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections.abc import Mapping, Sequence

import numpy as np

from . import __version__
from .ansatz import family_system_env, system_for_family
from .catalog import (
    FamilyInstance, catalog_manifest, draw_params, family, family_ids,
    is_valid, method_tag, verify_family,
)
from .expr import ExprError, evaluate, free_symbols, parse
from .residual import ResidualReport, classic_eq, modified_eq, \
    ode_residual, require_valid_b, scan
from .riccati import audit_printed_forms
from .sim import BlowUpError, Grid, InadmissibleFamilyError, SimConfig, \
    run, write_snapshots_csv

__all__ = [
    "main", "render_json", "UsageError",
    "EXIT_OK", "EXIT_USAGE", "EXIT_INVALID", "EXIT_FAIL", "EXIT_BLOWUP",
]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_FAIL = 3
EXIT_BLOWUP = 4

DEFAULT_SEED = 42
SEED_ENV_VAR = "MDPV_SEED"

METHOD_CHOICES = ("colehopf", "hyperbolic", "tanhcoth")


class UsageError(Exception):
    """Bad flags or flag values; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags, which this tool
    # reserves for validity violations; surface a catchable error
    # instead and let main() translate it to exit code 1.
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------
# deterministic JSON

def _float_repr(v: float) -> str:
    if v != v or v in (float("inf"), float("-inf")):
        raise ValueError(f"non-finite value in report: {v!r}")
    return format(v, ".17g")


def render_json(obj, level: int = 0) -> str:
    """Serialize with insertion-ordered keys and 17-significant-digit
    floats, so equal documents are equal byte strings."""
    pad, pad_in = "  " * level, "  " * (level + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float_repr(float(obj))
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        rows = [f"{pad_in}{json.dumps(str(k))}: {render_json(v, level + 1)}"
                for k, v in obj.items()]
        return "{\n" + ",\n".join(rows) + f"\n{pad}}}"
    if isinstance(obj, Sequence):
        if not obj:
            return "[]"
        rows = [f"{pad_in}{render_json(v, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(rows) + f"\n{pad}]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _manifest(command: str, seed: int, parameters: dict,
              outputs: list[str]) -> dict:
    return {
        "command": command,
        "seed": seed,
        "version": __version__,
        "parameters": parameters,
        "outputs": outputs,
    }


def _emit_json(doc: dict, target: str | None) -> None:
    if target is None:
        return
    text = render_json(doc) + "\n"
    if target == "-":
        sys.stdout.write(text)
    else:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)


def _json_outputs(args) -> list[str]:
    paths = []
    if getattr(args, "json", None) not in (None, "-"):
        paths.append(args.json)
    if getattr(args, "csv", None):
        paths.append(args.csv)
    return paths


# ---------------------------------------------------------------------
# flag parsing helpers

def _resolve_seed(flag_value: int | None) -> int:
    if flag_value is not None:
        return flag_value
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV_VAR} must be an integer,"
                             f" got {env!r}") from None
    return DEFAULT_SEED


def _parse_assignments(pairs: list[str] | None, flag: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for item in pairs or ():
        name, sep, value = item.partition("=")
        name = name.strip()
        if not sep or not name:
            raise UsageError(f"{flag} expects name=value, got {item!r}")
        try:
            out[name] = float(value)
        except ValueError:
            raise UsageError(f"{flag} {name}: {value!r} is not a"
                             " number") from None
    return out


def _parse_window(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"--window expects 'a,b', got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"--window expects numbers, got {text!r}") from None
    if not lo < hi:
        raise UsageError(f"--window needs a < b, got {text!r}")
    return lo, hi


def _known_family(fid: str) -> str:
    try:
        family(fid)
    except KeyError as exc:
        raise UsageError(str(exc)) from None
    return fid


def _resolve_param_sets(fid: str, b: float, provided: dict[str, float],
                        seed: int, draws: int) -> list[dict[str, float]]:
    """Explicit values must cover the family's parameters exactly;
    otherwise draw seeded admissible sets (one run if there is nothing
    to draw)."""
    names = family(fid).parameters
    if provided:
        missing = set(names) - set(provided)
        extra = set(provided) - set(names)
        if missing or extra:
            raise UsageError(
                f"{fid} takes exactly --param {{{', '.join(names)}}};"
                f" missing {sorted(missing)}, unknown {sorted(extra)}")
        return [{p: provided[p] for p in names}]
    if not names:
        return [{}]
    rng = np.random.default_rng([seed, int(fid[1:])])
    return [draw_params(fid, rng, b) for _ in range(draws)]


def _print(line: str = "") -> None:
    sys.stdout.write(line + "\n")


def _fail(message: str, code: int) -> int:
    sys.stderr.write(f"error: {message}\n")
    return code


# ---------------------------------------------------------------------
# list

def cmd_list(args) -> int:
    rows = catalog_manifest()
    seed = _resolve_seed(args.seed)
    if args.json is None:
        _print(f"{'id':4} {'method':10} {'speed':26} parameters")
        for row in rows:
            pnames = ", ".join(row["parameters"]) or "-"
            _print(f"{row['family_id']:4} {row['method']:10}"
                   f" {row['wave_speed']:26} {pnames}")
        _print(f"{len(rows)} families")
    doc = {
        "manifest": _manifest("list", seed, {"count": len(rows)},
                              _json_outputs(args)),
        "families": rows,
    }
    _emit_json(doc, args.json)
    return EXIT_OK


# ---------------------------------------------------------------------
# verify

def _verify_expression(args, seed: int) -> int:
    try:
        profile = parse(args.expr)
    except ExprError as exc:
        raise UsageError(f"--expr: {exc}") from None
    stray = free_symbols(profile) - {"xi", "b"}
    if stray:
        raise UsageError(f"--expr may use xi and b only;"
                         f" found {sorted(stray)}")
    eq = modified_eq(args.b) if args.variant == "mdp" \
        else classic_eq(args.b)
    residual = ode_residual(profile, eq, args.speed)
    window = _parse_window(args.window)
    if "xi" in free_symbols(residual):
        report = scan(residual, {"b": args.b}, window=window, n=args.n,
                      tol=args.tol)
    else:
        # constant profiles collapse the residual to a single number
        value = abs(evaluate(residual, {"b": args.b}))
        report = ResidualReport(value, 1, 0, args.tol, value,
                                value <= args.tol * (1.0 + value))
    _print(report.line(f"expr[{args.expr}] b={args.b:g} {args.variant}"))
    doc = {
        "manifest": _manifest("verify", seed, {
            "expr": args.expr,
            "speed": args.speed,
            "b": args.b,
            "variant": args.variant,
            "window": list(window),
            "n": args.n,
            "tol": args.tol,
        }, _json_outputs(args)),
        "results": [{
            "expr": args.expr,
            "b": args.b,
            "max_abs_residual": report.max_abs_residual,
            "scale": report.scale,
            "tolerance": report.tolerance,
            "points_evaluated": report.points_evaluated,
            "points_excluded": report.points_excluded,
            "passed": report.passed,
        }],
        "all_passed": report.passed,
    }
    _emit_json(doc, args.json)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    seed = _resolve_seed(args.seed)
    try:
        require_valid_b(args.b)
    except ValueError as exc:
        return _fail(str(exc), EXIT_INVALID)
    if args.expr is not None:
        if args.family is not None:
            raise UsageError("--expr and --family are exclusive")
        return _verify_expression(args, seed)

    target = args.family or "all"
    fids = family_ids() if target == "all" else [_known_family(target)]
    provided = _parse_assignments(args.param, "--param")
    if provided and len(fids) > 1:
        raise UsageError("--param requires a single --family")
    window = _parse_window(args.window)

    results = []
    all_passed = True
    for fid in fids:
        for params in _resolve_param_sets(fid, args.b, provided, seed,
                                          args.draws):
            ok, bad = is_valid(fid, args.b, params)
            if not ok:
                return _fail(f"{fid} parameters violate:"
                             f" {', '.join(bad)}", EXIT_INVALID)
            report = verify_family(fid, args.b, params, window=window,
                                   n=args.n, tol=args.tol,
                                   variant=args.variant)
            shown = ", ".join(f"{k}={v:g}" for k, v in params.items())
            _print(report.line(f"{fid} b={args.b:g}"
                               + (f" [{shown}]" if shown else "")))
            results.append({
                "family": fid,
                "b": args.b,
                "params": params,
                "max_abs_residual": report.max_abs_residual,
                "scale": report.scale,
                "tolerance": report.tolerance,
                "points_evaluated": report.points_evaluated,
                "points_excluded": report.points_excluded,
                "passed": report.passed,
            })
            all_passed = all_passed and report.passed
    _print(f"{'all passed' if all_passed else 'FAILURES'}"
           f" ({len(results)} scans)")
    doc = {
        "manifest": _manifest("verify", seed, {
            "family": target,
            "b": args.b,
            "variant": args.variant,
            "params": provided,
            "window": list(window),
            "n": args.n,
            "tol": args.tol,
            "draws": args.draws,
        }, _json_outputs(args)),
        "results": results,
        "all_passed": all_passed,
    }
    _emit_json(doc, args.json)
    return EXIT_OK if all_passed else EXIT_FAIL


# ---------------------------------------------------------------------
# riccati-audit

def cmd_riccati_audit(args) -> int:
    seed = _resolve_seed(args.seed)
    rows = audit_printed_forms()
    _print(f"{'case':5} {'(alpha,beta,gamma)':20} {'printed':18}"
           f" {'corrected':18} note")
    for row in rows:
        a, be, g = row["spec"]
        triple = f"({a:g}, {be:g}, {g:g})"
        if row["max_residual_printed"] is None:
            printed = "unevaluable"
        else:
            verdict = "pass" if row["printed_passes"] else "FAIL"
            printed = f"{verdict} {row['max_residual_printed']:.2e}"
        corr = f"{'pass' if row['corrected_passes'] else 'FAIL'}" \
               f" {row['max_residual_corrected']:.2e}"
        note = "as printed" if row["matches_printed"] else "repaired"
        _print(f"{row['case']:5} {triple:20} {printed:18} {corr:18} {note}")
    corrected_ok = all(r["corrected_passes"] for r in rows)
    _print(f"corrected branches: "
           f"{'all pass' if corrected_ok else 'FAILURES'}")
    doc = {
        "manifest": _manifest("riccati-audit", seed, {},
                              _json_outputs(args)),
        "rows": [{
            "case": r["case"],
            "alpha_beta_gamma": list(r["spec"]),
            "printed_passes": r["printed_passes"],
            "max_residual_printed": r["max_residual_printed"],
            "max_residual_corrected": r["max_residual_corrected"],
            "corrected_passes": r["corrected_passes"],
            "matches_printed": r["matches_printed"],
        } for r in rows],
        "all_corrected_pass": corrected_ok,
    }
    _emit_json(doc, args.json)
    return EXIT_OK


# ---------------------------------------------------------------------
# system-verify

def cmd_system_verify(args) -> int:
    seed = _resolve_seed(args.seed)
    fid = _known_family(args.family)
    route = method_tag(fid)
    if route != args.method:
        raise UsageError(f"{fid} was produced by the '{route}' route,"
                         f" not '{args.method}'")
    try:
        b_values = [float(v) for v in args.b.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--b expects comma-separated numbers,"
                         f" got {args.b!r}") from None
    if not b_values:
        raise UsageError("--b lists no values")
    for b in b_values:
        try:
            require_valid_b(b)
        except ValueError as exc:
            return _fail(str(exc), EXIT_INVALID)
    provided = _parse_assignments(args.param, "--param")
    perturb = _parse_assignments(args.perturb, "--perturb")

    system = system_for_family(fid)
    _print(f"{fid}: {len(system)} coefficient equations in"
           f" {system.variable} ({route} route,"
           f" {len(system.distinct)} distinct)")
    rng = np.random.default_rng([seed, int(fid[1:])])
    checks = []
    all_passed = True
    for b in b_values:
        if provided:
            sets = _resolve_param_sets(fid, b, provided, seed, 1)
            ok, bad = is_valid(fid, b, sets[0])
            if not ok:
                return _fail(f"{fid} parameters violate:"
                             f" {', '.join(bad)}", EXIT_INVALID)
        elif family(fid).parameters:
            sets = [draw_params(fid, rng, b) for _ in range(args.draws)]
        else:
            sets = [{}]
        for i, params in enumerate(sets):
            aux = {"alpha": float(rng.uniform(0.5, 2.0))} \
                if fid == "u11" else None
            env = family_system_env(fid, b, params, aux)
            for key, delta in perturb.items():
                if key not in env:
                    raise UsageError(f"--perturb {key}: system unknowns"
                                     f" are {sorted(env)}")
                env[key] += delta
            max_abs = system.max_abs_at(env)
            scale = system.scale_at(env)
            passed = max_abs <= args.tol * (1.0 + scale)
            verdict = "pass" if passed else "FAIL"
            _print(f"  b={b:g} set {i}: max|eq| = {max_abs:.3e}"
                   f"  scale = {scale:.3e}  {verdict}")
            checks.append({
                "b": b,
                "params": params,
                "perturb": dict(perturb),
                "max_abs": max_abs,
                "scale": scale,
                "passed": passed,
            })
            all_passed = all_passed and passed
    _print("system annihilated" if all_passed else "system VIOLATED")
    doc = {
        "manifest": _manifest("system-verify", seed, {
            "method": args.method,
            "family": fid,
            "b": b_values,
            "draws": args.draws,
            "tol": args.tol,
            "params": provided,
            "perturb": perturb,
        }, _json_outputs(args)),
        "method": args.method,
        "family": fid,
        "variable": system.variable,
        "normalization": system.normalization,
        "equations": [{"power": row["power"],
                       "coefficient_formatted": row["coefficient"]}
                      for row in system.dump()],
        "checks": checks,
        "all_passed": all_passed,
    }
    _emit_json(doc, args.json)
    return EXIT_OK if all_passed else EXIT_FAIL


# ---------------------------------------------------------------------
# simulate

def cmd_simulate(args) -> int:
    seed = _resolve_seed(args.seed)
    try:
        require_valid_b(args.b)
    except ValueError as exc:
        return _fail(str(exc), EXIT_INVALID)
    fid = _known_family(args.family)
    provided = _parse_assignments(args.param, "--param")
    params = _resolve_param_sets(fid, args.b, provided, seed, 1)[0]
    try:
        instance = FamilyInstance(fid, args.b, params)
    except ValueError as exc:
        return _fail(str(exc), EXIT_INVALID)
    try:
        grid = Grid(args.N, args.L)
        config = SimConfig(b=args.b, dt=args.dt, t_final=args.T,
                           scheme=args.scheme, snapshots=args.snapshots,
                           blowup_threshold=args.blowup_threshold)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        report = run(instance, config, grid)
    except InadmissibleFamilyError as exc:
        return _fail(str(exc), EXIT_INVALID)
    except BlowUpError as exc:
        return _fail(f"blow-up at t = {exc.t:g} (peak {exc.peak:.3e})",
                     EXIT_BLOWUP)
    except ValueError as exc:
        # the stability guard is a validity refusal; anything else
        # (horizon/step mismatch) is a flag problem
        if "guard" in str(exc):
            return _fail(str(exc), EXIT_INVALID)
        raise UsageError(str(exc)) from None
    summary = report.summary()
    for key, value in summary.items():
        shown = f"{value:.6e}" if isinstance(value, float) else value
        _print(f"  {key} = {shown}")
    if args.csv:
        write_snapshots_csv(report, args.csv)
        _print(f"snapshots -> {args.csv}")
    doc = {
        "manifest": _manifest("simulate", seed, {
            "family": fid,
            "b": args.b,
            "params": params,
            "N": args.N,
            "L": args.L,
            "dt": args.dt,
            "T": args.T,
            "scheme": args.scheme,
            "snapshots": args.snapshots,
            "blowup_threshold": args.blowup_threshold,
        }, _json_outputs(args)),
        "summary": summary,
    }
    _emit_json(doc, args.json)
    return EXIT_OK


# ---------------------------------------------------------------------
# wiring

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help=f"RNG seed (default {DEFAULT_SEED};"
                        f" {SEED_ENV_VAR} overrides the default)")
    p.add_argument("--json", nargs="?", const="-", default=None,
                   metavar="PATH",
                   help="write the JSON report to PATH ('-' or bare"
                        " flag: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mdpv",
                     description="Closed-form traveling-wave workbench:"
                                 " catalog scans, branch audits,"
                                 " coefficient systems, simulation.")
    parser.add_argument("--version", action="version",
                        version=f"mdpv {__version__}")
    sub = parser.add_subparsers(dest="cmd", metavar="COMMAND")

    p = sub.add_parser("list", help="show the 23 catalog families")
    _add_common(p)
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("verify", help="residual scans of families or"
                                      " an explicit profile")
    p.add_argument("--family", default=None,
                   help="family id u1..u23 or 'all' (default: all)")
    p.add_argument("--b", type=float, required=True,
                   help="equation parameter (b not in {-1, -2})")
    p.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="explicit family parameter (repeatable; all or"
                        " none)")
    p.add_argument("--variant", choices=("mdp", "dp"), default="mdp",
                   help="equation variant to scan against")
    p.add_argument("--expr", default=None, metavar="EXPR",
                   help="explicit profile U(xi) instead of a family")
    p.add_argument("--speed", type=float, default=0.0,
                   help="wave speed for --expr (default 0)")
    p.add_argument("--window", default="-8,8", metavar="A,B")
    p.add_argument("--n", type=int, default=257)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--draws", type=int, default=1,
                   help="seeded parameter draws per family (default 1)")
    _add_common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("riccati-audit",
                       help="printed-vs-corrected kernel branch table")
    _add_common(p)
    p.set_defaults(func=cmd_riccati_audit)

    p = sub.add_parser("system-verify",
                       help="coefficient-system annihilation for one"
                            " family")
    p.add_argument("--method", choices=METHOD_CHOICES, required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--b", default="0,0.5,1,3", metavar="B1,B2,...",
                   help="comma-separated b values (default 0,0.5,1,3)")
    p.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="explicit family parameter (repeatable)")
    p.add_argument("--perturb", action="append", metavar="NAME=DELTA",
                   help="offset a system unknown after substitution"
                        " (negative control)")
    p.add_argument("--draws", type=int, default=3)
    p.add_argument("--tol", type=float, default=1e-10)
    _add_common(p)
    p.set_defaults(func=cmd_system_verify)

    p = sub.add_parser("simulate",
                       help="manufactured-solution integration run")
    p.add_argument("--family", required=True)
    p.add_argument("--b", type=float, default=3.0)
    p.add_argument("--param", action="append", metavar="NAME=VALUE")
    p.add_argument("--N", type=int, default=512, help="grid points")
    p.add_argument("--L", type=float, default=40.0, help="domain length")
    p.add_argument("--dt", type=float, default=5e-4)
    p.add_argument("--T", type=float, default=2.0, help="final time")
    p.add_argument("--scheme", choices=("spectral", "fd4"),
                   default="spectral")
    p.add_argument("--snapshots", type=int, default=5)
    p.add_argument("--blowup-threshold", type=float, default=1e6,
                   help="abort when the peak exceeds this (exit 4)")
    p.add_argument("--csv", default=None, metavar="PATH",
                   help="write snapshot table to PATH")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            raise UsageError("a subcommand is required"
                             " (list, verify, riccati-audit,"
                             " system-verify, simulate)")
        return args.func(args)
    except UsageError as exc:
        return _fail(str(exc), EXIT_USAGE)


if __name__ == "__main__":
    sys.exit(main())
