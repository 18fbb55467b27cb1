from .simtime import SimTime, ZERO, TICKS_PER_SECOND
from .rng import RngStream, rng_uniform
from .engine import Event, EventHandle, Simulator

__all__ = ["SimTime", "ZERO", "TICKS_PER_SECOND", "RngStream", "rng_uniform",
           "Event", "EventHandle", "Simulator"]
