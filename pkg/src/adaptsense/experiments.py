"""Seeded Monte Carlo harness for the reliability, agility, region and trace studies.

Every trial draws its own generator from ``derive_trial_seed`` so results do
not depend on execution order or on the number of worker processes. Trials
of different methods inside one cell share seeds, which pairs the methods on
the same occupancy realizations.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import NormalDist
from typing import Iterator, Sequence

import numpy as np

from . import __version__
from .detectors import FailureKind, run_adaptive, run_nonadaptive
from .spectrum_model import WORST_CASE, Mode, PowerModel, ScenarioConfig, draw_occupancy
from .stats_core import DomainError
from .theory import p_a_asymptotic, p_na_asymptotic, power_scaling_boundaries

MASK64 = (1 << 64) - 1
Z95 = NormalDist().inv_cdf(0.975)

RESULT_HEADER = (
    "experiment,n,epsilon,gamma,M,K,T,trials,err_emp,err_lo,err_hi,err_theory,"
    "mean_samples,fail_picked_occupied,fail_insufficient,fail_budget"
).split(",")
TRACE_HEADER = ["cycle", "k", "holes_retained", "occupied_retained"]

_FAIL_CODES = {
    FailureKind.NONE: 0,
    FailureKind.PICKED_OCCUPIED: 1,
    FailureKind.INSUFFICIENT: 2,
    FailureKind.BUDGET: 3,
}


# ---------------------------------------------------------------------------
# seeding


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _experiment_key(experiment_id) -> int:
    if isinstance(experiment_id, (int, np.integer)):
        return int(experiment_id) & MASK64
    digest = hashlib.blake2b(str(experiment_id).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def derive_trial_seed(master_seed: int, experiment_id, trial_index: int) -> int:
    """64-bit trial seed: splitmix64(splitmix64(splitmix64(master) ^ id) ^ trial).

    ``id`` is the integer itself or, for strings, the little-endian 8-byte
    BLAKE2b digest of the UTF-8 text. Each stage is a bijection on 64-bit
    words, so distinct trial indices never collide.
    """
    h = _splitmix64(int(master_seed) & MASK64)
    h = _splitmix64(h ^ _experiment_key(experiment_id))
    return _splitmix64(h ^ (int(trial_index) & MASK64))


def derive_trial_seeds(master_seed: int, experiment_id, trials: int, start: int = 0) -> np.ndarray:
    """Vectorized :func:`derive_trial_seed` over ``start .. start+trials-1``."""
    h = _splitmix64(int(master_seed) & MASK64)
    h = _splitmix64(h ^ _experiment_key(experiment_id))
    z = np.uint64(h) ^ np.arange(start, start + trials, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


# ---------------------------------------------------------------------------
# statistics


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


# ---------------------------------------------------------------------------
# trial execution


@dataclass(frozen=True)
class Method:
    """A detector plus its budget rule.

    Non-adaptive takes ``int(per_channel)`` samples on every channel; adaptive
    gets a total budget of ``floor(per_channel * n)`` and one sample per
    channel in each of its ``cycles`` exploration passes.
    """

    cycles: int | None = None  # None = non-adaptive

    @property
    def adaptive(self) -> bool:
        return self.cycles is not None

    @property
    def label(self) -> str:
        return "na" if self.cycles is None else f"a{self.cycles}"


NONADAPTIVE = Method(None)


def adaptive(cycles: int) -> Method:
    return Method(int(cycles))


@dataclass
class CellStats:
    trials: int = 0
    failures: dict = field(default_factory=lambda: {k: 0 for k in FailureKind})
    samples_total: int = 0

    @property
    def errors(self) -> int:
        return self.trials - self.failures[FailureKind.NONE]

    @property
    def error_rate(self) -> float:
        return self.errors / self.trials

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.errors, self.trials)

    @property
    def mean_samples(self) -> float:
        return self.samples_total / self.trials


def run_trial(config, method: Method, per_channel: float, seed: int, power_model=WORST_CASE, mode=Mode.SUFFICIENT):
    rng = make_rng(seed)
    realization = draw_occupancy(config, rng, power_model)
    if method.adaptive:
        budget = math.floor(per_channel * config.n)
        return run_adaptive(config, realization, method.cycles, budget, rng, mode=mode)
    return run_nonadaptive(config, realization, int(per_channel), rng, mode=mode)


def _trial_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    config, method, per_channel, seeds, power_model, mode = args
    codes = np.empty(len(seeds), dtype=np.int8)
    spent = np.empty(len(seeds), dtype=np.int64)
    for j, s in enumerate(seeds):
        out = run_trial(config, method, per_channel, int(s), power_model, mode)
        codes[j] = _FAIL_CODES[out.failure_kind]
        spent[j] = out.samples_spent
    return codes, spent


def default_workers() -> int:
    return os.cpu_count() or 1


def run_cell(
    config: ScenarioConfig,
    method: Method,
    per_channel: float,
    seeds: Sequence[int],
    workers: int = 1,
    power_model: PowerModel = WORST_CASE,
    mode: Mode = Mode.SUFFICIENT,
    executor: ProcessPoolExecutor | None = None,
) -> CellStats:
    """Run one trial per seed and merge the outcomes in seed order."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    if workers <= 1 and executor is None:
        parts = [_trial_chunk((config, method, per_channel, seeds, power_model, mode))]
    else:
        n_chunks = max(1, min(len(seeds), 4 * max(workers, 1)))
        tasks = [
            (config, method, per_channel, chunk, power_model, mode)
            for chunk in np.array_split(seeds, n_chunks)
        ]
        if executor is not None:
            parts = list(executor.map(_trial_chunk, tasks))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(_trial_chunk, tasks))
    codes = np.concatenate([p[0] for p in parts])
    spent = np.concatenate([p[1] for p in parts])
    stats = CellStats(trials=len(codes), samples_total=int(spent.sum()))
    counts = np.bincount(codes, minlength=4)
    for kind, code in _FAIL_CODES.items():
        stats.failures[kind] = int(counts[code])
    return stats


@contextmanager
def _pool(workers: int) -> Iterator[ProcessPoolExecutor | None]:
    if workers <= 1:
        yield None
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            yield pool


# ---------------------------------------------------------------------------
# reliability sweep


@dataclass
class SweepSpec:
    """Reliability sweep: eps = n^(alpha-1) and gamma = n^beta unless explicit values are given.

    Explicit ``epsilon_values``/``gamma_values`` hold one entry per n value.
    """

    n_values: list[int]
    M: int = 5
    K_values: list[int] = field(default_factory=lambda: [1, 2, 3, 4])
    T: int = 2
    trials: int = 10_000
    master_seed: int = 42
    alpha: float = 1.0 / 3.0
    beta: float = 0.2
    epsilon_values: list[float] | None = None
    gamma_values: list[float] | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        if any(n < max(self.T, 2) for n in self.n_values):
            raise DomainError("every n must be >= max(T, 2)")
        for vals in (self.epsilon_values, self.gamma_values):
            if vals is not None and len(vals) != len(self.n_values):
                raise DomainError("explicit values need one entry per n")

    def config(self, i: int) -> ScenarioConfig:
        n = self.n_values[i]
        eps = self.epsilon_values[i] if self.epsilon_values else float(n) ** (self.alpha - 1.0)
        gam = self.gamma_values[i] if self.gamma_values else float(n) ** self.beta
        return ScenarioConfig(n, eps, gam, self.T)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    n: int
    epsilon: float
    gamma: float
    M: float
    K: int
    T: int
    trials: int
    err_emp: float
    err_lo: float
    err_hi: float
    err_theory: float
    mean_samples: float
    fail_picked_occupied: int
    fail_insufficient: int
    fail_budget: int

    @classmethod
    def from_stats(cls, experiment, config, M, K, stats: CellStats, theory: float) -> "ResultRow":
        lo, hi = stats.interval
        return cls(
            experiment=experiment,
            n=config.n,
            epsilon=config.epsilon,
            gamma=config.gamma,
            M=M,
            K=K,
            T=config.target_holes,
            trials=stats.trials,
            err_emp=stats.error_rate,
            err_lo=lo,
            err_hi=hi,
            err_theory=theory,
            mean_samples=stats.mean_samples,
            fail_picked_occupied=stats.failures[FailureKind.PICKED_OCCUPIED],
            fail_insufficient=stats.failures[FailureKind.INSUFFICIENT],
            fail_budget=stats.failures[FailureKind.BUDGET],
        )


def theory_overlay(config: ScenarioConfig, M: float, K: int) -> float:
    """Asymptotic error for an M*n budget; adaptive runs get m_prime(M, K) detection samples."""
    if K == 0:
        return p_na_asymptotic(config.gamma, M, config.epsilon, config.target_holes)
    detect = 2**K * (M - 2) + 2
    if detect <= 0:
        return 1.0
    return p_a_asymptotic(config.gamma, detect, K, config.epsilon, config.target_holes)


def run_reliability_sweep(spec: SweepSpec, workers: int = 1) -> list[ResultRow]:
    """Non-adaptive (M per channel) and adaptive (budget M n) error per (n, K) cell."""
    rows = []
    with _pool(workers) as pool:
        for i, n in enumerate(spec.n_values):
            config = spec.config(i)
            seeds = derive_trial_seeds(spec.master_seed, f"reliability/n={n}", spec.trials)
            stats = run_cell(config, NONADAPTIVE, spec.M, seeds, workers, executor=pool)
            rows.append(
                ResultRow.from_stats("reliability-na", config, spec.M, 0, stats, theory_overlay(config, spec.M, 0))
            )
            for K in spec.K_values:
                stats = run_cell(config, adaptive(K), spec.M, seeds, workers, executor=pool)
                rows.append(
                    ResultRow.from_stats("reliability-a", config, spec.M, K, stats, theory_overlay(config, spec.M, K))
                )
    return rows


# ---------------------------------------------------------------------------
# budget search


@dataclass
class BudgetSearch:
    method: str
    target_error: float
    per_channel: float | None  # None when unattainable
    attainable: bool
    probes: list[tuple[float, float, float]]  # (per_channel, err_emp, err_hi)
    monotonicity_violations: int
    answer_stats: CellStats | None = field(default=None, repr=False)


def find_required_budget(
    target_error: float,
    method: Method,
    n: int,
    epsilon: float,
    gamma: float,
    T: int = 2,
    trials: int = 10_000,
    seed: int = 0,
    m_max: float = 64.0,
    resolution: float | None = None,
    workers: int = 1,
) -> BudgetSearch:
    """Smallest per-channel budget whose upper Wilson bound meets ``target_error``.

    Non-adaptive budgets are searched over integers; adaptive ones over total
    budgets ``B = floor(m n)`` on a grid of ``resolution`` samples per channel
    (default 1/n, i.e. every integer B). All probes reuse the same trial
    seeds, so the error curve varies smoothly with the budget.
    """
    if not 0.0 < target_error < 1.0:
        raise DomainError("target_error must lie in (0, 1)")
    config = ScenarioConfig(n, epsilon, gamma, T)
    seeds = derive_trial_seeds(seed, f"agility/n={n}", trials)
    probes: dict[int, tuple[float, float, float]] = {}
    cell_stats: dict[int, CellStats] = {}
    step = 1 if not method.adaptive else max(1, round((resolution or 1.0 / n) * n))

    def per_channel(units: int) -> float:
        return float(units) if not method.adaptive else units * step / n

    def probe(units: int, pool) -> bool:
        if units not in probes:
            m = per_channel(units)
            stats = run_cell(config, method, m, seeds, workers, executor=pool)
            probes[units] = (m, stats.error_rate, stats.interval[1])
            cell_stats[units] = stats
        return probes[units][2] <= target_error

    lo_units = 1 if not method.adaptive else math.ceil(n / step)
    hi_units = int(m_max) if not method.adaptive else math.floor(m_max * n / step)
    with _pool(workers) as pool:
        if not probe(hi_units, pool):
            answer = None
        elif probe(lo_units, pool):
            answer = lo_units
        else:
            lo, hi = lo_units, hi_units  # invariant: lo fails, hi meets target
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if probe(mid, pool):
                    hi = mid
                else:
                    lo = mid
            answer = hi
    probe_list = sorted(probes.values())
    return BudgetSearch(
        method=method.label,
        target_error=target_error,
        per_channel=None if answer is None else per_channel(answer),
        attainable=answer is not None,
        probes=probe_list,
        monotonicity_violations=_count_violations_wilson(probe_list, trials),
        answer_stats=None if answer is None else cell_stats[answer],
    )


def _count_violations_wilson(probes, trials: int) -> int:
    # a larger budget whose error sits above a smaller budget's Wilson upper bound
    bad = 0
    for i, (m1, e1, hi1) in enumerate(probes):
        for m2, e2, _ in probes[i + 1 :]:
            if m2 > m1 and e2 > hi1:
                bad += 1
    return bad


# ---------------------------------------------------------------------------
# detectability regions


@dataclass(frozen=True)
class RegionCell:
    alpha: float
    beta: float
    err_na: float
    err_a: float
    label: str
    theory_region: str


@dataclass
class RegionGrid:
    M: int
    K: int
    n: int
    trials: int
    threshold: float
    cells: list[RegionCell]
    rows: list[ResultRow]

    def boundaries(self, alphas: Sequence[float]) -> list[tuple[float, float, float]]:
        return [(a, *power_scaling_boundaries(a, self.M, self.K)) for a in alphas]


def theory_region(alpha: float, beta: float, M: int, K: int) -> str:
    b_na, b_a = power_scaling_boundaries(alpha, M, K)
    if beta > b_na:
        return "above-both"
    if beta < b_a:
        return "below-both"
    if b_a < beta < b_na:
        return "between"
    return "on-boundary"


def classify_cell(err_na: float, err_a: float, threshold: float) -> str:
    na_ok, a_ok = err_na < threshold, err_a < threshold
    if na_ok and a_ok:
        return "both-succeed"
    if a_ok:
        return "adaptive-only"
    if na_ok:
        return "nonadaptive-only"
    return "both-fail"


def detectability_grid(
    alpha_grid: Sequence[float],
    beta_grid: Sequence[float],
    M: int = 5,
    K: int = 4,
    n: int = 1000,
    trials: int = 1000,
    seed: int = 0,
    T: int = 2,
    threshold: float = 0.1,
    workers: int = 1,
) -> RegionGrid:
    """Classify (alpha, beta) cells by empirical success of both detectors."""
    for a in alpha_grid:
        if not 0.0 <= a <= 1.0:
            raise DomainError("alpha must lie in [0, 1]")
    for b in beta_grid:
        if not b > 0.0:
            raise DomainError("beta must be positive")
    cells, rows = [], []
    with _pool(workers) as pool:
        for a in alpha_grid:
            for b in beta_grid:
                eps = float(n) ** (a - 1.0)
                if not eps < 1.0:
                    raise DomainError("alpha = 1 leaves no occupied channels")
                config = ScenarioConfig(n, eps, float(n) ** b, T)
                seeds = derive_trial_seeds(seed, f"region/alpha={a!r}/beta={b!r}", trials)
                na = run_cell(config, NONADAPTIVE, M, seeds, workers, executor=pool)
                ad = run_cell(config, adaptive(K), M, seeds, workers, executor=pool)
                rows.append(ResultRow.from_stats("region-na", config, M, 0, na, theory_overlay(config, M, 0)))
                rows.append(ResultRow.from_stats("region-a", config, M, K, ad, theory_overlay(config, M, K)))
                cells.append(
                    RegionCell(
                        a, b, na.error_rate, ad.error_rate,
                        classify_cell(na.error_rate, ad.error_rate, threshold),
                        theory_region(a, b, M, K),
                    )
                )
    return RegionGrid(M, K, n, trials, threshold, cells, rows)


# ---------------------------------------------------------------------------
# exploration traces


def exploration_trace(
    n: int,
    epsilon: float,
    gamma: float,
    K: int,
    seed: int,
    T: int = 2,
    M: int = 5,
    power_model: PowerModel = WORST_CASE,
) -> list[tuple[int, int, int]]:
    """(k, holes retained, occupied retained) for k = 0..K on one realization."""
    config = ScenarioConfig(n, epsilon, gamma, T)
    rng = make_rng(derive_trial_seed(seed, "trace", 0))
    realization = draw_occupancy(config, rng, power_model)
    out = run_adaptive(config, realization, K, M * n, rng)
    return [(k, m, l) for k, (m, l) in enumerate(out.retention_trace)]


@dataclass
class TraceSummary:
    survival_ratio: list[float]  # pooled occupied survival per cycle, k = 1..K
    hole_survival_ratio: list[float]
    all_holes_kept: float  # fraction of seeds keeping every hole through cycle K
    runs: int


def trace_summary(n: int, epsilon: float, gamma: float, K: int, seeds: Sequence[int], **kw) -> TraceSummary:
    traces = np.array([exploration_trace(n, epsilon, gamma, K, s, **kw) for s in seeds])
    holes, occ = traces[:, :, 1].astype(float), traces[:, :, 2].astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = occ[:, 1:].sum(0) / occ[:, :-1].sum(0)
        hole_ratio = holes[:, 1:].sum(0) / holes[:, :-1].sum(0)
    kept = float(np.mean(holes[:, -1] == holes[:, 0]))
    return TraceSummary(ratio.tolist(), hole_ratio.tolist(), kept, len(seeds))


# ---------------------------------------------------------------------------
# persistence


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results_csv(rows: Sequence[ResultRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_HEADER)
        for r in rows:
            w.writerow([_fmt(getattr(r, h)) for h in RESULT_HEADER])


def read_results_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_trace_csv(trace: Sequence[tuple[int, int, int]], path) -> None:
    # "cycle" is the phase label: init for k = 0, explore afterwards
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for k, holes, occ in trace:
            w.writerow(["init" if k == 0 else "explore", k, holes, occ])


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


@contextmanager
def run_metadata(output_path, spec: dict, master_seed: int | None) -> Iterator[dict]:
    """Write an incomplete sidecar now, finalize it when the block exits cleanly.

    Callers may add entries to the yielded dict; they land in the final file.
    """
    path = sidecar_path(output_path)
    doc = {
        "status": "incomplete",
        "spec": spec,
        "master_seed": master_seed,
        "version": __version__,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    path.write_text(json.dumps(doc, indent=2, default=str))
    extra: dict = {}
    t0 = time.perf_counter()
    yield extra
    doc.update(extra)
    doc["status"] = "complete"
    doc["duration_s"] = time.perf_counter() - t0
    path.write_text(json.dumps(doc, indent=2, default=str))
