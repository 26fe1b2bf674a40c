"""Adversarial search against the conjectured bound, with and without the LCD term.

With the LCD weight set to zero the ratio explodes on structured vectors. With the
weight on and C calibrated on the all-ones family, the search still finds pairs
above ratio 1, so that C is not universal.

Usage: python scripts/stress_demo.py [--steps 200] [--restarts 4] [--seed 0]
"""
import argparse

from relanticonc import distributions as dist
from relanticonc.config import load_catalog
from relanticonc.stress import search
from relanticonc.verify import lcd_necessity


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--restarts", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    kw = dict(restarts=args.restarts, steps=args.steps, seed=args.seed, workers=args.workers)

    ln = load_catalog()["lcd_necessity"]
    C = lcd_necessity(ln["n"], float(ln["ratio"]), int(ln["beta"]["seed"]))["calibrated_C"]
    laws = {
        "rademacher": dist.rademacher(),
        "three-point": dist.finite_discrete([(-1, 0.25), (0, 0.5), (1, 0.25)]),
    }
    print(f"calibrated C = {C:.5f}\n")
    print(f"{'law':<12}{'n':>3}  {'ratio (no LCD)':>15}  {'ratio (C, LCD)':>15}  best alpha")
    for name, spec in laws.items():
        for n in (3, 6, 8):
            off = search(spec, n, constants={"C": 1.0, "C_lcd": 0.0}, **kw)
            on = search(spec, n, constants={"C": C}, **kw)
            alpha = " ".join(f"{v:+.3f}" for v in on.best_alpha.entries)
            print(f"{name:<12}{n:>3}  {off.ratio:>15.3f}  {on.ratio:>15.3f}  [{alpha}]")


if __name__ == "__main__":
    main()
