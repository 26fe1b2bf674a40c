"""Measure the smallest constants for which every catalog scenario is dominated.

Usage: python scripts/calibrate.py [--samples N] [--seed S] [--workers W]
"""
import argparse

from relanticonc.config import load_catalog
from relanticonc.verify import lcd_necessity, sweep_section


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cat = load_catalog()
    sec = sweep_section(cat, args.samples, args.seed, args.workers)
    print(f"{'theorem':<16}{'constant':<10}{'value':>10}  scenarios")
    for th, c in sorted(sec["calibration"].items()):
        print(f"{th:<16}{c['constant']:<10}{c['value']:>10.5f}  {c['scenarios']}")
    ln = cat["lcd_necessity"]
    nec = lcd_necessity(ln["n"], float(ln["ratio"]), int(ln["beta"]["seed"]), float(ln["ratio_only_C"]))
    print(f"{'conjecture':<16}{'C':<10}{nec['calibrated_C']:>10.5f}  {len(nec['cases'])} (all-ones family)")
    worst = max(sec["unit_constant_rows"], key=lambda r: r["ratio"])
    print(f"\nworst scenario at unit constants: {worst['scenario']} (ci_hi/rhs = {worst['ratio']:.4f})")


if __name__ == "__main__":
    main()
