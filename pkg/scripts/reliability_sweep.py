"""Error probability vs n for the non-adaptive and adaptive detectors (budget 5n).

    python scripts/reliability_sweep.py --trials 10000 --out reliability.csv
"""
import argparse
import sys

from adaptsense.cli import main

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trials", default="10000")
    p.add_argument("--threads", default="1")
    p.add_argument("--out", default="reliability.csv")
    a = p.parse_args()
    sys.exit(main([
        "reliability", "--n", "10:1000:log25", "--m", "5", "--t", "2", "--k", "1,2,3,4",
        "--alpha-exp", str(-2 / 3), "--beta-exp", "0.2", "--trials", a.trials, "--seed", "42",
        "--threads", a.threads, "--out", a.out,
    ]))
