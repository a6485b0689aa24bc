"""Non-adaptive and adaptive hole detectors with integer budget accounting.

Channel indices are 0-based. Energies for channels that were not measured
carry the sentinel ``+inf`` so a single selection rule serves both phases.
"""
from __future__ import annotations

import enum
import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .spectrum_model import Mode, Realization, ScenarioConfig, measure_energies
from .stats_core import DomainError, gamma_median


class InsufficientSurvivors(RuntimeError):
    """Fewer finite energies than the number of holes requested."""


class FailureKind(str, enum.Enum):
    NONE = "none"
    PICKED_OCCUPIED = "picked-occupied"
    INSUFFICIENT = "insufficient-survivors"
    BUDGET = "budget-exhausted"


@dataclass
class BudgetLedger:
    total_budget: int
    per_cycle_allocation: list[int] = field(default_factory=list)
    detection_allocation: int | None = None
    consumed: int = 0

    @property
    def remaining(self) -> int:
        return self.total_budget - self.consumed

    def spend(self, amount: int) -> None:
        if amount > self.remaining:
            raise DomainError(f"spending {amount} exceeds remaining budget {self.remaining}")
        self.consumed += amount


@dataclass(frozen=True)
class DetectionOutcome:
    selected: tuple[int, ...]
    success: bool
    retention_trace: tuple[tuple[int, int], ...]
    samples_spent: int
    failure_kind: FailureKind
    detection_allocation: int | None = None

    def to_dict(self) -> dict:
        return {
            "selected": list(self.selected),
            "success": self.success,
            "failure_kind": self.failure_kind.value,
            "retention_trace": [list(p) for p in self.retention_trace],
            "samples_spent": self.samples_spent,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def log_map_statistic(energy, power, samples: int):
    """log U_i = -M log(1+p) + p/(1+p) * energy."""
    energy = np.asarray(energy, dtype=float)
    power = np.asarray(power, dtype=float)
    out = -samples * np.log1p(power) + power / (1.0 + power) * energy
    return float(out) if out.ndim == 0 else out


def map_statistic(energy: float, power: float, samples: int) -> float:
    """Per-channel MAP weight (1+p)^-M exp(p/(1+p) * energy); inf on overflow."""
    if not energy >= 0:
        raise DomainError("energy must be nonnegative")
    if not power >= 0:
        raise DomainError("power must be nonnegative")
    if samples < 1:
        raise DomainError("samples must be >= 1")
    log_u = log_map_statistic(energy, power, samples)
    return math.exp(log_u) if log_u < 709.0 else math.inf


def robust_select(energies, t: int) -> np.ndarray:
    """Indices of the ``t`` smallest energies, ties to the lowest index.

    ``energies`` is either a full-length array (``+inf`` for channels out of
    play) or a mapping from channel label to energy.
    """
    if isinstance(energies, Mapping):
        keys = np.array(sorted(energies))
        values = np.array([energies[k] for k in keys], dtype=float)
    else:
        values = np.asarray(energies, dtype=float)
        keys = None
    finite = np.isfinite(values)
    if finite.sum() < t:
        raise InsufficientSurvivors(f"{int(finite.sum())} finite energies, {t} requested")
    # stable sort keeps index order among ties
    order = np.argsort(values, kind="stable")[:t]
    order.sort()
    return keys[order] if keys is not None else order


def exploration_cycle(retained, energies, threshold: float) -> np.ndarray:
    """Keep the retained channels whose energy is strictly below ``threshold``."""
    retained = np.asarray(retained, dtype=np.intp)
    if isinstance(energies, Mapping):
        try:
            values = np.array([energies[i] for i in retained.tolist()], dtype=float)
        except KeyError as exc:
            raise LookupError(f"no energy for retained channel {exc.args[0]}") from None
    else:
        values = np.asarray(energies, dtype=float)[retained]
    return retained[values < threshold]


def compute_detection_allocation(total_budget: int, consumed: int, survivor_count: int) -> int:
    if survivor_count < 1:
        raise InsufficientSurvivors("no channel survived exploration")
    return (total_budget - consumed) // survivor_count


def _classify(selected: np.ndarray, realization: Realization, t: int) -> FailureKind:
    if selected.size < t:
        return FailureKind.INSUFFICIENT
    if realization.occupancy[selected].any():
        return FailureKind.PICKED_OCCUPIED
    return FailureKind.NONE


def _counts(channels: np.ndarray, realization: Realization) -> tuple[int, int]:
    occ = int(realization.occupancy[channels].sum())
    return channels.size - occ, occ


def run_nonadaptive(
    config: ScenarioConfig,
    realization: Realization,
    samples_per_channel: int,
    rng: np.random.Generator,
    mode: Mode | str = Mode.SUFFICIENT,
) -> DetectionOutcome:
    """Measure every channel M times and keep the T smallest energies."""
    if samples_per_channel < 1:
        raise DomainError("samples_per_channel must be >= 1")
    channels = np.arange(config.n)
    energies = measure_energies(realization, channels, samples_per_channel, rng, mode)
    selected = robust_select(energies, config.target_holes)
    kind = _classify(selected, realization, config.target_holes)
    return DetectionOutcome(
        selected=tuple(selected.tolist()),
        success=kind is FailureKind.NONE,
        retention_trace=(_counts(channels, realization),),
        samples_spent=config.n * samples_per_channel,
        failure_kind=kind,
        detection_allocation=samples_per_channel,
    )


def run_adaptive(
    config: ScenarioConfig,
    realization: Realization,
    cycles: int,
    total_budget: int,
    rng: np.random.Generator,
    exploration_allocations=None,
    mode: Mode | str = Mode.SUFFICIENT,
) -> DetectionOutcome:
    """Exploration by median thresholding, then robust detection on the survivors.

    Cycle k measures every retained channel ``M_k`` times (default 1) and keeps
    those below ``median(Gamma(M_k, 1)) * (1 + gamma)``. The unspent budget is
    split evenly over the survivors for the detection pass. A cycle that does
    not fit in the remaining budget, or a zero detection allocation, ends the
    run as ``budget-exhausted``; fewer than T survivors is
    ``insufficient-survivors``. Both count as failures.
    """
    if cycles < 0:
        raise DomainError("cycles must be >= 0")
    allocations = [1] * cycles if exploration_allocations is None else list(exploration_allocations)
    if len(allocations) != cycles or any(m < 1 for m in allocations):
        raise DomainError("need one allocation >= 1 per exploration cycle")
    t = config.target_holes
    ledger = BudgetLedger(int(total_budget), allocations)
    retained = np.arange(config.n)
    trace = [_counts(retained, realization)]

    def stop(kind: FailureKind, selected=()) -> DetectionOutcome:
        return DetectionOutcome(
            selected=tuple(int(i) for i in selected),
            success=False,
            retention_trace=tuple(trace),
            samples_spent=ledger.consumed,
            failure_kind=kind,
            detection_allocation=ledger.detection_allocation,
        )

    threshold_scale = 1.0 + config.gamma
    for m_k in allocations:
        cost = retained.size * m_k
        if cost > ledger.remaining:
            return stop(FailureKind.BUDGET)
        energies = measure_energies(realization, retained, m_k, rng, mode)
        ledger.spend(cost)
        retained = retained[energies < gamma_median(m_k) * threshold_scale]
        trace.append(_counts(retained, realization))

    if retained.size == 0:
        return stop(FailureKind.INSUFFICIENT)
    ledger.detection_allocation = compute_detection_allocation(
        ledger.total_budget, ledger.consumed, retained.size
    )
    if ledger.detection_allocation == 0:
        return stop(FailureKind.BUDGET)
    final = measure_energies(realization, retained, ledger.detection_allocation, rng, mode)
    ledger.spend(retained.size * ledger.detection_allocation)

    if retained.size < t:
        selected = retained
    else:
        selected = retained[robust_select(final, t)]
    kind = _classify(selected, realization, t)
    return DetectionOutcome(
        selected=tuple(selected.tolist()),
        success=kind is FailureKind.NONE,
        retention_trace=tuple(trace),
        samples_spent=ledger.consumed,
        failure_kind=kind,
        detection_allocation=ledger.detection_allocation,
    )
