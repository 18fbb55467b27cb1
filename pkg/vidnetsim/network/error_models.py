"""Packet corruption processes: a rate model and a burst model.

Both return a per-packet verdict; payload contents are never modified.
"""

from dataclasses import dataclass, field
from enum import Enum
from itertools import accumulate
from typing import Optional, Tuple

from ..core.rng import RngStream


class ErrorUnit(str, Enum):
    BIT = "bit"
    BYTE = "byte"
    PACKET = "packet"


@dataclass(frozen=True)
class RateErrorConfig:
    rate: float
    unit: ErrorUnit = ErrorUnit.BYTE

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"rate must lie in [0, 1], got {self.rate}")
        object.__setattr__(self, "unit", ErrorUnit(self.unit))


@dataclass(frozen=True)
class SizeDistribution:
    """Finite discrete distribution over positive burst sizes."""

    values: Tuple[int, ...]
    weights: Tuple[float, ...]

    def __post_init__(self):
        if not self.values or len(self.values) != len(self.weights):
            raise ValueError("size distribution needs matching, nonempty values and weights")
        if min(self.values) < 1:
            raise ValueError("burst sizes must be at least 1")
        if any(w < 0 for w in self.weights) or sum(self.weights) <= 0:
            raise ValueError("weights must be nonnegative with a positive sum")

    @classmethod
    def uniform(cls, low: int, high: int) -> "SizeDistribution":
        if high < low:
            raise ValueError(f"empty size range [{low}, {high}]")
        values = tuple(range(low, high + 1))
        return cls(values, tuple(1.0 for _ in values))

    @classmethod
    def degenerate(cls, size: int) -> "SizeDistribution":
        return cls((size,), (1.0,))

    @property
    def probabilities(self) -> Tuple[float, ...]:
        total = sum(self.weights)
        return tuple(w / total for w in self.weights)

    @property
    def mean(self) -> float:
        return sum(v * p for v, p in zip(self.values, self.probabilities))

    def sample(self, u: float) -> int:
        """Inverse-CDF sample from a uniform draw u in [0, 1)."""
        for value, edge in zip(self.values, accumulate(self.probabilities)):
            if u < edge:
                return value
        return self.values[-1]


@dataclass(frozen=True)
class BurstErrorConfig:
    burst_rate: float
    size_dist: SizeDistribution = field(default_factory=lambda: SizeDistribution.uniform(1, 4))

    def __post_init__(self):
        if not 0.0 <= self.burst_rate <= 1.0:
            raise ValueError(f"burst_rate must lie in [0, 1], got {self.burst_rate}")


@dataclass
class BurstState:
    remaining: int = 0


def corruption_probability(packet_size_bytes: int, cfg: RateErrorConfig) -> float:
    """Closed-form probability that one packet is corrupted under the rate model."""
    if cfg.unit is ErrorUnit.PACKET:
        return cfg.rate
    units = packet_size_bytes if cfg.unit is ErrorUnit.BYTE else 8 * packet_size_bytes
    return 1.0 - (1.0 - cfg.rate) ** units


def rate_is_corrupt(packet_size_bytes: int, cfg: RateErrorConfig, stream: RngStream) -> bool:
    # exactly one draw per call, whatever the outcome
    return stream.uniform() < corruption_probability(packet_size_bytes, cfg)


def burst_is_corrupt(cfg: BurstErrorConfig, state: BurstState, stream: RngStream) -> bool:
    if state.remaining > 0:
        state.remaining -= 1
        return True
    if stream.uniform() < cfg.burst_rate:
        state.remaining = cfg.size_dist.sample(stream.uniform()) - 1
        return True
    return False


def reset_error_state(state: BurstState) -> None:
    state.remaining = 0


class NoErrorModel:
    name = "none"

    def is_corrupt(self, size_bytes: int) -> bool:
        return False

    def reset(self) -> None:
        pass


class RateErrorModel:
    name = "rate"

    def __init__(self, cfg: RateErrorConfig, stream: RngStream):
        self.cfg = cfg
        self.stream = stream
        self.checked = 0
        self.corrupted = 0

    def is_corrupt(self, size_bytes: int) -> bool:
        self.checked += 1
        corrupt = rate_is_corrupt(size_bytes, self.cfg, self.stream)
        self.corrupted += corrupt
        return corrupt

    def reset(self) -> None:
        pass


class BurstErrorModel:
    name = "burst"

    def __init__(self, cfg: BurstErrorConfig, stream: RngStream, state: Optional[BurstState] = None):
        self.cfg = cfg
        self.stream = stream
        self.state = state if state is not None else BurstState()
        self.checked = 0
        self.corrupted = 0

    def is_corrupt(self, size_bytes: int) -> bool:
        self.checked += 1
        corrupt = burst_is_corrupt(self.cfg, self.state, self.stream)
        self.corrupted += corrupt
        return corrupt

    def reset(self) -> None:
        reset_error_state(self.state)
