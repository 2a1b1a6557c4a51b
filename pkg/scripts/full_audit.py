#!/usr/bin/env python3
"""Run the complete verification battery and print a compact report.

Covers, for each requested b: residual scans of all 23 families
(seeded parameter draws), coefficient-system annihilation for the
three construction routes, and the kernel-branch audit.  Exits
nonzero if anything fails, so it can anchor a CI job.

Usage:
    python3 scripts/full_audit.py [--b 0,0.5,1,3] [--draws 3] [--seed 42]
"""

import argparse
import sys

import numpy as np

from mdpv.ansatz import verify_family_against_system
from mdpv.catalog import draw_params, family, family_ids, verify_family
from mdpv.riccati import audit_printed_forms


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--b", default="0,0.5,1,3",
                    help="comma-separated b values")
    ap.add_argument("--draws", type=int, default=3,
                    help="parameter draws per family and b")
    ap.add_argument("--seed", type=int, default=42)
    return ap.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    b_values = [float(v) for v in args.b.split(",")]
    failures = 0

    print("== residual scans ==")
    worst = 0.0
    scans = 0
    for fid in family_ids():
        has_params = bool(family(fid).parameters)
        rng = np.random.default_rng([args.seed, int(fid[1:])])
        rel_max = 0.0
        for b in b_values:
            for _ in range(args.draws if has_params else 1):
                params = draw_params(fid, rng, b) if has_params else {}
                rep = verify_family(fid, b, params)
                rel = rep.max_abs_residual / (1.0 + rep.scale)
                rel_max = max(rel_max, rel)
                scans += 1
                if not rep.passed:
                    failures += 1
                    print(f"  {fid} b={b:g} {params}: "
                          f"{rep.line('FAILED scan')}")
        worst = max(worst, rel_max)
        print(f"  {fid:4} worst relative residual {rel_max:.2e}")
    print(f"  -> {scans} scans, overall worst {worst:.2e}")

    print("== coefficient systems ==")
    for fid in family_ids():
        rng = np.random.default_rng([args.seed + 1, int(fid[1:])])
        ok_all = True
        for b in b_values:
            for _ in range(args.draws):
                params = draw_params(fid, rng, b) \
                    if family(fid).parameters else {}
                aux = {"alpha": float(rng.uniform(0.5, 2.0))} \
                    if fid == "u11" else None
                if not verify_family_against_system(fid, b, params,
                                                    aux=aux):
                    ok_all = False
                    failures += 1
                    print(f"  {fid} b={b:g} {params}: system VIOLATED")
        if ok_all:
            print(f"  {fid:4} annihilates its route's system")

    print("== kernel-branch audit ==")
    for row in audit_printed_forms():
        if row["max_residual_printed"] is None:
            printed = "unevaluable"
        else:
            printed = ("pass" if row["printed_passes"] else "FAIL") \
                + f" {row['max_residual_printed']:.1e}"
        corrected = ("pass" if row["corrected_passes"] else "FAIL") \
            + f" {row['max_residual_corrected']:.1e}"
        if not row["corrected_passes"]:
            failures += 1
        print(f"  case {row['case']:3} printed: {printed:18}"
              f" corrected: {corrected}")

    print(f"\n{'ALL CHECKS PASSED' if failures == 0 else f'{failures} FAILURES'}")
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
