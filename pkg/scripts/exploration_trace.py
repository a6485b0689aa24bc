"""Holes and non-holes left after each exploration cycle, n = 1000, K = 4.

Writes the single-seed trace CSV and prints the ratios pooled over many seeds.

    python scripts/exploration_trace.py --seed 7 --seeds 1000
"""
import argparse
import sys

from adaptsense import experiments as ex
from adaptsense.cli import main

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", default="7")
    p.add_argument("--seeds", type=int, default=1000, help="seeds for the pooled summary")
    p.add_argument("--out", default="trace.csv")
    a = p.parse_args()
    rc = main(["trace", "--n", "1000", "--k", "4", "--m", "5", "--seed", a.seed, "--out", a.out])
    n = 1000
    s = ex.trace_summary(n, n ** (-2 / 3), n**0.2, 4, seeds=range(a.seeds))
    print("non-hole survival per cycle:", [round(r, 4) for r in s.survival_ratio])
    print("hole survival per cycle:    ", [round(r, 4) for r in s.hole_survival_ratio])
    print(f"seeds keeping every hole:    {s.all_holes_kept:.3f}")
    sys.exit(rc)
