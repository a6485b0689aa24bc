"""Per-channel budget needed to reach a 1e-2 error, non-adaptive vs adaptive K = 1..5.

    python scripts/agility_search.py --n 100,300,1000 --out agility.csv
"""
import argparse
import sys

from adaptsense.cli import main

if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", default="100,300,1000")
    p.add_argument("--trials", default="20000")
    p.add_argument("--threads", default="1")
    p.add_argument("--out", default="agility.csv")
    a = p.parse_args()
    sys.exit(main([
        "agility", "--n", a.n, "--k", "1,2,3,4,5", "--target", "0.01", "--trials", a.trials,
        "--alpha-exp", str(-2 / 3), "--beta-exp", "0.2", "--seed", "42",
        "--threads", a.threads, "--out", a.out,
    ]))
