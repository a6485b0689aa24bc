"""Command-line frontend: ``adaptsense {reliability,agility,region,trace,theory}``.

Exit status is 0 on success, 2 on a usage error and 1 when a run fails.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

import numpy as np

from . import experiments as ex
from .stats_core import DomainError
from .theory import theory_point


def parse_range(text: str, integer: bool = False) -> list:
    """``lo:hi:logN`` / ``lo:hi:linN`` or a comma list, e.g. ``10:1000:log25``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3 or not parts[2][:3] in ("log", "lin"):
            raise argparse.ArgumentTypeError(f"bad range {text!r}; expected lo:hi:logN or lo:hi:linN")
        lo, hi = float(parts[0]), float(parts[1])
        try:
            count = int(parts[2][3:])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad point count in {text!r}") from None
        if count < 1 or hi < lo:
            raise argparse.ArgumentTypeError(f"empty range {text!r}")
        if parts[2].startswith("log"):
            if lo <= 0:
                raise argparse.ArgumentTypeError("log ranges need lo > 0")
            values = np.geomspace(lo, hi, count)
        else:
            values = np.linspace(lo, hi, count)
        values = values.tolist()
    else:
        try:
            values = [float(v) for v in text.split(",") if v]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
    if integer:
        out = []
        for v in values:
            iv = int(round(v))
            if iv not in out:
                out.append(iv)
        return out
    return values


def _int_range(text):
    return parse_range(text, integer=True)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _probability(text):
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("must lie in (0, 1)")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adaptsense", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default):
        sp.add_argument("--seed", type=int, default=42, help="master seed")
        sp.add_argument("--out", default=out_default, help="output path")
        sp.add_argument("--threads", type=_positive_int, default=1, help="worker processes (results do not depend on it)")

    def scenario(sp):
        sp.add_argument("--t", type=_positive_int, default=2, help="holes to detect")
        sp.add_argument("--alpha-exp", type=float, default=-2.0 / 3.0, help="epsilon = n**alpha_exp")
        sp.add_argument("--beta-exp", type=float, default=0.2, help="gamma = n**beta_exp")

    r = sub.add_parser("reliability", help="error probability vs n, non-adaptive and adaptive")
    r.add_argument("--n", type=_int_range, default=_int_range("10:1000:log25"))
    r.add_argument("--m", type=_positive_int, default=5, help="samples per channel (budget m*n)")
    r.add_argument("--k", type=_int_range, default=[1, 2, 3, 4], help="exploration cycles")
    r.add_argument("--trials", type=_positive_int, default=10_000)
    scenario(r)
    common(r, "reliability.csv")

    a = sub.add_parser("agility", help="per-channel budget needed for a target error")
    a.add_argument("--n", type=_int_range, default=[1000])
    a.add_argument("--k", type=_int_range, default=[1, 2, 3, 4, 5])
    a.add_argument("--target", type=_probability, default=1e-2)
    a.add_argument("--trials", type=_positive_int, default=20_000)
    a.add_argument("--m-max", type=float, default=40.0)
    a.add_argument("--resolution", type=float, default=0.05, help="adaptive search step, samples per channel")
    scenario(a)
    common(a, "agility.csv")

    g = sub.add_parser("region", help="detectability regions over (alpha, beta)")
    g.add_argument("--alpha", type=parse_range, default=parse_range("0.1:0.9:lin5"), help="epsilon = n**(alpha-1)")
    g.add_argument("--beta", type=parse_range, default=parse_range("0.01:0.21:lin5"), help="gamma = n**beta")
    g.add_argument("--n", type=_positive_int, default=1000)
    g.add_argument("--m", type=_positive_int, default=5)
    g.add_argument("--k", type=int, default=4)
    g.add_argument("--t", type=_positive_int, default=2)
    g.add_argument("--trials", type=_positive_int, default=1000)
    g.add_argument("--threshold", type=_probability, default=0.1)
    common(g, "region.csv")

    tr = sub.add_parser("trace", help="holes and non-holes surviving each exploration cycle")
    tr.add_argument("--n", type=_positive_int, default=1000)
    tr.add_argument("--k", type=int, default=4)
    tr.add_argument("--m", type=_positive_int, default=5)
    scenario(tr)
    common(tr, "trace.csv")

    th = sub.add_parser("theory", help="closed-form predictions")
    th.add_argument("--m", type=_positive_int, default=5)
    th.add_argument("--k", type=int, default=4)
    th.add_argument("--n", type=_positive_int, default=1000)
    scenario(th)
    th.add_argument("--out", default=None, help="optional JSON output")
    return p


def _reliability(args) -> str:
    spec = ex.SweepSpec(
        n_values=args.n, M=args.m, K_values=args.k, T=args.t, trials=args.trials,
        master_seed=args.seed, alpha=1.0 + args.alpha_exp, beta=args.beta_exp,
    )
    with ex.run_metadata(args.out, spec.as_dict(), args.seed):
        rows = ex.run_reliability_sweep(spec, workers=args.threads)
        ex.write_results_csv(rows, args.out)
    return f"reliability: {len(rows)} rows -> {args.out}"


def _agility(args) -> str:
    spec = {k: v for k, v in vars(args).items() if k != "func"}
    rows, summary = [], {}
    with ex.run_metadata(args.out, spec, args.seed) as meta:
        for n in args.n:
            eps, gam = float(n) ** args.alpha_exp, float(n) ** args.beta_exp
            config = ex.ScenarioConfig(n, eps, gam, args.t)
            methods = [ex.NONADAPTIVE] + [ex.adaptive(k) for k in args.k]
            for method in methods:
                res = ex.find_required_budget(
                    args.target, method, n, eps, gam, args.t, args.trials, args.seed,
                    m_max=args.m_max, resolution=args.resolution, workers=args.threads,
                )
                doc = asdict(res)
                doc.pop("answer_stats")
                summary[f"n={n}/{res.method}"] = doc
                if res.attainable:
                    K = method.cycles or 0
                    rows.append(
                        ex.ResultRow.from_stats(
                            "agility-a" if method.adaptive else "agility-na", config,
                            res.per_channel, K, res.answer_stats,
                            ex.theory_overlay(config, res.per_channel, K),
                        )
                    )
        meta["searches"] = summary
        ex.write_results_csv(rows, args.out)
    return f"agility: {len(rows)} attainable searches -> {args.out}"


def _region(args) -> str:
    spec = {k: v for k, v in vars(args).items() if k != "func"}
    with ex.run_metadata(args.out, spec, args.seed) as meta:
        grid = ex.detectability_grid(
            args.alpha, args.beta, M=args.m, K=args.k, n=args.n, trials=args.trials,
            seed=args.seed, T=args.t, threshold=args.threshold, workers=args.threads,
        )
        meta["cells"] = [asdict(c) for c in grid.cells]
        meta["boundaries"] = grid.boundaries(args.alpha)
        ex.write_results_csv(grid.rows, args.out)
    counts = {}
    for c in grid.cells:
        counts[c.label] = counts.get(c.label, 0) + 1
    return f"region: {counts} -> {args.out}"


def _trace(args) -> str:
    eps, gam = float(args.n) ** args.alpha_exp, float(args.n) ** args.beta_exp
    spec = {k: v for k, v in vars(args).items() if k != "func"}
    with ex.run_metadata(args.out, spec, args.seed):
        trace = ex.exploration_trace(args.n, eps, gam, args.k, args.seed, T=args.t, M=args.m)
        ex.write_trace_csv(trace, args.out)
    last = trace[-1]
    return f"trace: holes {trace[0][1]}->{last[1]}, occupied {trace[0][2]}->{last[2]} -> {args.out}"


def _theory(args) -> str:
    eps, gam = float(args.n) ** args.alpha_exp, float(args.n) ** args.beta_exp
    point = theory_point(args.m, args.k, gam, eps, args.t)
    doc = {"n": args.n, "epsilon": eps, "gamma": gam, "M": args.m, "K": args.k, "T": args.t, **point.as_dict()}
    for key, value in doc.items():
        print(f"{key}={value}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2)
    return f"theory: m_prime={point.m_prime} agility_gain_lb={point.agility_gain_lb:.4g}"


_COMMANDS = {
    "reliability": _reliability,
    "agility": _agility,
    "region": _region,
    "trace": _trace,
    "theory": _theory,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        summary = _COMMANDS[args.command](args)
    except (DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(summary)
    return 0


parse_and_dispatch = main
