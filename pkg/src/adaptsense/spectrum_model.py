"""Occupancy realizations and energy measurements over a wideband spectrum."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .stats_core import DomainError, _box_muller_energy


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulated world: n channels, each a hole with probability ``epsilon``.

    ``gamma`` is the known lower bound on active powers and ``target_holes``
    the number of holes the detector must return.
    """

    n: int
    epsilon: float
    gamma: float
    target_holes: int = 2

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if not 0.0 < self.epsilon < 1.0:
            raise DomainError("epsilon must lie in (0, 1)")
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise DomainError("gamma must be positive")
        if not 1 <= self.target_holes <= self.n:
            raise DomainError("target_holes must lie in [1, n]")

    @classmethod
    def from_exponents(cls, n: int, epsilon_exp: float, gamma_exp: float, target_holes: int = 2):
        """epsilon = n**epsilon_exp, gamma = n**gamma_exp."""
        return cls(n, float(n) ** epsilon_exp, float(n) ** gamma_exp, target_holes)


class PowerKind(str, enum.Enum):
    WORST_CASE = "worst-case"
    FIXED_LIST = "fixed-list"
    SCALED_RANDOM = "scaled-random"


@dataclass(frozen=True)
class PowerModel:
    """How occupied channels get their powers.

    worst-case
        every occupied channel at exactly gamma.
    fixed-list
        ``powers[i]`` for channel i (entries for holes are ignored).
    scaled-random
        gamma * Uniform(low, high), with ``low >= 1``.
    """

    kind: PowerKind = PowerKind.WORST_CASE
    powers: tuple[float, ...] = ()
    low: float = 1.0
    high: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PowerKind(self.kind))
        object.__setattr__(self, "powers", tuple(float(p) for p in self.powers))
        if self.kind is PowerKind.SCALED_RANDOM and not 1.0 <= self.low <= self.high:
            raise DomainError("scaled-random needs 1 <= low <= high")

    @classmethod
    def fixed(cls, powers: Sequence[float]) -> "PowerModel":
        return cls(PowerKind.FIXED_LIST, tuple(powers))

    @classmethod
    def scaled(cls, low: float, high: float | None = None) -> "PowerModel":
        return cls(PowerKind.SCALED_RANDOM, low=low, high=low if high is None else high)

    def draw(self, occupied: np.ndarray, gamma: float, rng: np.random.Generator) -> np.ndarray:
        n = occupied.size
        if self.kind is PowerKind.WORST_CASE:
            p = np.full(n, gamma)
        elif self.kind is PowerKind.FIXED_LIST:
            if len(self.powers) != n:
                raise DomainError(f"fixed-list needs {n} powers, got {len(self.powers)}")
            p = np.array(self.powers)
            if np.any(p[occupied] < gamma):
                raise DomainError("fixed-list power below gamma on an occupied channel")
        else:
            p = gamma * rng.uniform(self.low, self.high, size=n)
        return np.where(occupied, p, 0.0)


WORST_CASE = PowerModel()


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Realization:
    """Occupancy indicators Z_i (True = occupied) and powers p_i (0 for holes)."""

    occupancy: np.ndarray
    powers: np.ndarray = field(repr=False)

    def __post_init__(self):
        occ = _frozen(np.asarray(self.occupancy, dtype=bool))
        pw = _frozen(np.asarray(self.powers, dtype=float))
        if occ.ndim != 1 or occ.shape != pw.shape:
            raise DomainError("occupancy and powers must be 1-d of equal length")
        if np.any(pw[~occ] != 0.0):
            raise DomainError("holes must carry zero power")
        if np.any(~(pw[occ] > 0.0)):
            raise DomainError("occupied channels need positive power")
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "powers", pw)

    @property
    def n(self) -> int:
        return self.occupancy.size

    @property
    def holes(self) -> np.ndarray:
        return np.flatnonzero(~self.occupancy)

    @property
    def variances(self) -> np.ndarray:
        return 1.0 + self.powers

    def __eq__(self, other):
        if not isinstance(other, Realization):
            return NotImplemented
        return np.array_equal(self.occupancy, other.occupancy) and np.array_equal(
            self.powers, other.powers
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "occupancy": self.occupancy.astype(int).tolist(),
                "powers": self.powers.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "Realization":
        doc = json.loads(text)
        r = cls(np.array(doc["occupancy"], dtype=bool), np.array(doc["powers"], dtype=float))
        if r.n != doc["n"]:
            raise DomainError("n does not match the occupancy list")
        return r


def draw_occupancy(
    config: ScenarioConfig, rng: np.random.Generator, power_model: PowerModel = WORST_CASE
) -> Realization:
    """Draw Z_i iid with P(hole) = epsilon; consumes n uniforms plus the power model's draws."""
    occupied = rng.random(config.n) >= config.epsilon
    return Realization(occupied, power_model.draw(occupied, config.gamma, rng))


class Mode(str, enum.Enum):
    SUFFICIENT = "sufficient-statistic"
    EXACT = "exact-vector"


def measure_energies(
    realization: Realization,
    indices,
    samples_per_channel: int,
    rng: np.random.Generator,
    mode: Mode | str = Mode.SUFFICIENT,
) -> np.ndarray:
    """Fresh energy Y_i ~ Gamma(M, 1 + p_i Z_i) for each channel in ``indices``.

    Returns an array aligned with ``indices``. Consumption is
    ``len(indices) * M`` uniforms (sufficient-statistic) or twice that
    (exact-vector), independent of the channel states.
    """
    mode = Mode(mode)
    if samples_per_channel < 1:
        raise DomainError("samples_per_channel must be >= 1")
    idx = np.asarray(indices, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= realization.n):
        raise DomainError("channel index out of range")
    var = realization.variances[idx]
    if mode is Mode.SUFFICIENT:
        u = rng.random((idx.size, samples_per_channel))
        return -np.log1p(-u).sum(axis=1) * var
    u = rng.random((idx.size, samples_per_channel, 2))
    return _box_muller_energy(u, var)
