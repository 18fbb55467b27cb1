"""Node position processes and the speed-dependent loss hook.

Random-walk nodes redraw heading and speed at every walk epoch and reflect off the
walls of their bounding box. Constant-velocity nodes are never reflected and may leave
the box. Above v_crit, a node's speed adds a clamped linear share of packet loss on its
access hop.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional, Tuple

from ..core.rng import RngStream
from ..core.simtime import SimTime

Point = Tuple[float, float]


class MobilityModel(str, Enum):
    RANDOM_WALK = "random_walk"
    CONSTANT_VELOCITY = "constant_velocity"
    STATIC = "static"


@dataclass(frozen=True)
class BoundingBox:
    x_min: float = 0.0
    x_max: float = 4500.0
    y_min: float = 0.0
    y_max: float = 4500.0

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate bounding box {self}")

    def contains(self, point: Point) -> bool:
        x, y = point
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def random_point(self, stream: RngStream) -> Point:
        return (self.x_min + (self.x_max - self.x_min) * stream.uniform(),
                self.y_min + (self.y_max - self.y_min) * stream.uniform())


@dataclass(frozen=True)
class MobilityState:
    position: Point
    velocity: Point = (0.0, 0.0)
    model: MobilityModel = MobilityModel.STATIC
    walk_epoch: float = 1.0
    speed_range: Tuple[float, float] = (0.5, 2.0)
    epoch_left: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "model", MobilityModel(self.model))
        if self.walk_epoch <= 0:
            raise ValueError(f"walk_epoch must be positive, got {self.walk_epoch}")
        low, high = self.speed_range
        if not 0 <= low <= high:
            raise ValueError(f"invalid speed range {self.speed_range}")

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)


@dataclass(frozen=True)
class SpeedDegradationConfig:
    v_crit: float = 80.0
    slope: float = 0.004
    per_cap: float = 0.5

    def __post_init__(self):
        if self.v_crit < 0 or self.slope < 0 or not 0 <= self.per_cap <= 1:
            raise ValueError(f"invalid speed degradation parameters {self}")


def constant_velocity(position: Point, speed: float, heading_deg: float = 0.0) -> MobilityState:
    heading = math.radians(heading_deg)
    return MobilityState(position, (speed * math.cos(heading), speed * math.sin(heading)),
                         MobilityModel.CONSTANT_VELOCITY)


def cv_position_at(state: MobilityState, t: SimTime) -> Point:
    if state.model is not MobilityModel.CONSTANT_VELOCITY:
        raise ValueError(f"cv_position_at needs a constant_velocity state, got {state.model.value}")
    seconds = t.seconds
    return (state.position[0] + state.velocity[0] * seconds,
            state.position[1] + state.velocity[1] * seconds)


def _fold(position: float, velocity: float, dt: float, low: float, high: float) -> Tuple[float, float]:
    """Advance along one axis, mirroring off both walls; returns (position, velocity)."""
    span = high - low
    unfolded = (position - low + velocity * dt) % (2 * span)
    if unfolded <= span:
        return low + unfolded, velocity
    return high - (unfolded - span), -velocity


def rw_step(state: MobilityState, box: BoundingBox, stream: RngStream,
            dt: Optional[float] = None) -> MobilityState:
    """
    Advance a random-walk node by `dt` seconds (default one walk epoch).

    At every epoch boundary a heading uniform in [0, 2π) and a speed uniform in
    speed_range are drawn; between boundaries the node moves linearly.
    """
    if state.model is not MobilityModel.RANDOM_WALK:
        raise ValueError(f"rw_step needs a random_walk state, got {state.model.value}")
    remaining = state.walk_epoch if dt is None else dt
    (x, y), (vx, vy), left = state.position, state.velocity, state.epoch_left
    low, high = state.speed_range

    while remaining > 0:
        if left <= 0:
            heading = 2 * math.pi * stream.uniform()
            speed = low + (high - low) * stream.uniform()
            vx, vy = speed * math.cos(heading), speed * math.sin(heading)
            left = state.walk_epoch
        step = min(remaining, left)
        x, vx = _fold(x, vx, step, box.x_min, box.x_max)
        y, vy = _fold(y, vy, step, box.y_min, box.y_max)
        remaining -= step
        left -= step

    return replace(state, position=(x, y), velocity=(vx, vy), epoch_left=left)


def speed_excess_per(speed: float, cfg: SpeedDegradationConfig) -> float:
    """Additional packet error probability caused by moving faster than v_crit."""
    if speed < 0:
        raise ValueError(f"speed must be nonnegative, got {speed}")
    return min(cfg.per_cap, cfg.slope * max(0.0, speed - cfg.v_crit))


def distance(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


class SpeedLossHook:
    """Per-node loss draw composed with the link error model at delivery."""

    def __init__(self, speed_fn: Callable[[], float], cfg: SpeedDegradationConfig, stream: RngStream):
        self.speed_fn = speed_fn
        self.cfg = cfg
        self.stream = stream
        self.drops = 0

    def __call__(self, packet) -> bool:
        dropped = self.stream.uniform() < speed_excess_per(self.speed_fn(), self.cfg)
        self.drops += dropped
        return dropped
