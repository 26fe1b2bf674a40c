"""Exact table of P{|sum i X_i| <= |sum X_i|} for Rademacher X and n*P.

Usage: python scripts/soze_table.py [--n-max 20]
"""
import argparse
import time

from relanticonc.stress import soze_family


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, default=20)
    args = ap.parse_args()
    t = time.perf_counter()
    res = soze_family(range(1, args.n_max + 1))
    print(f"{'n':>3} {'P(n)':>12} {'n*P(n)':>10}  method")
    for r in res["rows"]:
        print(f"{r.n:>3} {r.prob:>12.8f} {r.n_times_p:>10.6f}  {r.method}")
    print(f"\nmax n*P = {res['constant']:.6f}  ({time.perf_counter() - t:.1f}s)")


if __name__ == "__main__":
    main()
