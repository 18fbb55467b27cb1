from dataclasses import dataclass

from ..errors import InvalidSimTime, SimTimeOverflow

TICKS_PER_SECOND = 1_000_000_000
MAX_TICKS = 2**63 - 1


@dataclass(frozen=True, order=True, slots=True)
class SimTime:
    """Nonnegative simulation time in integer nanosecond ticks."""

    ticks: int = 0

    def __post_init__(self):
        if not isinstance(self.ticks, int):
            raise TypeError(f"SimTime ticks must be int, got {type(self.ticks).__name__}")
        if self.ticks < 0:
            raise InvalidSimTime(f"negative SimTime: {self.ticks} ticks")
        if self.ticks > MAX_TICKS:
            raise SimTimeOverflow(f"SimTime overflow: {self.ticks} ticks")

    @classmethod
    def from_seconds(cls, seconds: float) -> "SimTime":
        return cls(round(seconds * TICKS_PER_SECOND))

    @classmethod
    def from_ms(cls, ms: float) -> "SimTime":
        return cls(round(ms * 1_000_000))

    @property
    def seconds(self) -> float:
        return self.ticks / TICKS_PER_SECOND

    @property
    def ms(self) -> float:
        return self.ticks / 1_000_000

    def __add__(self, other: "SimTime") -> "SimTime":
        if not isinstance(other, SimTime):
            return NotImplemented
        return SimTime(self.ticks + other.ticks)

    def __sub__(self, other: "SimTime") -> "SimTime":
        if not isinstance(other, SimTime):
            return NotImplemented
        return SimTime(self.ticks - other.ticks)

    def __str__(self) -> str:
        return f"{self.ms:.6f}ms"


ZERO = SimTime(0)
