"""Detectability regions over eps = n^(alpha-1), gamma = n^beta at n = 1000, M = 5, K = 4.

    python scripts/detectability_regions.py --alpha 0.05:0.95:lin19 --beta 0.01:0.25:lin13
"""
import argparse
import sys

from adaptsense.cli import main

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--alpha", default="0.05:0.95:lin19")
    p.add_argument("--beta", default="0.01:0.25:lin13")
    p.add_argument("--trials", default="1000")
    p.add_argument("--threads", default="1")
    p.add_argument("--out", default="regions.csv")
    a = p.parse_args()
    sys.exit(main([
        "region", "--alpha", a.alpha, "--beta", a.beta, "--n", "1000", "--m", "5", "--k", "4",
        "--trials", a.trials, "--seed", "42", "--threads", a.threads, "--out", a.out,
    ]))
