"""Single-threaded discrete-event engine on top of a simpy Environment.

The environment clock runs in integer nanosecond ticks. Scheduled actions are simpy
timeouts with a callback; simpy orders its queue by (time, priority, insertion id), so
actions sharing a timestamp fire FIFO. Engine instances share no state and may run in
parallel (one per scenario).
"""

import hashlib
import itertools
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Generator, List, Optional, Tuple

import simpy

from ..errors import EngineBusy, SchedulingInPast
from .rng import RngStream
from .simtime import SimTime

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Event:
    fire_at: SimTime
    seq: int
    action: Callable[..., Any]
    args: Tuple[Any, ...]
    label: str


@dataclass(slots=True)
class EventHandle:
    event: Event
    cancelled: bool = False
    fired: bool = False

    @property
    def pending(self) -> bool:
        return not (self.cancelled or self.fired)


def _handler_name(action: Callable[..., Any]) -> str:
    return getattr(action, "__qualname__", None) or repr(action)


class Simulator:
    def __init__(self, seed: int = 0, trace: bool = False):
        """
        Create an engine.

        Args:
            seed (int): Root seed; every RngStream handed out by rng() derives from it
            trace (bool): Record one line per processed event for trace_digest()
        """
        self.seed = seed
        self.env = simpy.Environment(initial_time=0)
        self._counter = itertools.count()
        self._pending = 0
        self._running = False
        self._streams: Dict[str, RngStream] = {}
        self._trace: Optional[List[str]] = [] if trace else None
        self._fired = 0
        self.processed = 0

    @property
    def now(self) -> SimTime:
        return SimTime(self.env.now)

    @property
    def now_ticks(self) -> int:
        return self.env.now

    @property
    def running(self) -> bool:
        return self._running

    @property
    def tracing(self) -> bool:
        return self._trace is not None

    def _record(self, seq: int, label: str) -> None:
        if self._trace is not None:
            self._trace.append(f"{self.env.now}\t{seq}\t{label}")
        self._fired += 1

    def schedule(self, fire_at: SimTime, action: Callable[..., Any], *args: Any,
                 label: Optional[str] = None) -> EventHandle:
        """Queue `action(*args)` to run at `fire_at`; returns a handle for cancel()."""
        if fire_at.ticks < self.env.now:
            raise SchedulingInPast(
                f"cannot schedule at {fire_at} (now {self.now})"
            )
        event = Event(fire_at, next(self._counter), action, args, label or _handler_name(action))
        handle = EventHandle(event)
        timeout = self.env.timeout(fire_at.ticks - self.env.now)
        timeout.callbacks.append(lambda _: self._fire(handle))
        self._pending += 1
        return handle

    def schedule_in(self, delay: SimTime, action: Callable[..., Any], *args: Any,
                    label: Optional[str] = None) -> EventHandle:
        return self.schedule(SimTime(self.env.now + delay.ticks), action, *args, label=label)

    def _fire(self, handle: EventHandle) -> None:
        if handle.cancelled:
            return
        handle.fired = True
        self._pending -= 1
        event = handle.event
        self._record(event.seq, event.label)
        event.action(*event.args)

    def cancel(self, handle: EventHandle) -> None:
        if handle.pending:
            handle.cancelled = True
            self._pending -= 1

    @property
    def pending(self) -> int:
        return self._pending

    def timeout(self, delay: SimTime, label: str = "timeout") -> simpy.Timeout:
        """A simpy timeout for process() generators; its firing is traced like an action."""
        seq = next(self._counter)
        timeout = self.env.timeout(delay.ticks)
        timeout.callbacks.append(lambda _: self._record(seq, label))
        return timeout

    def process(self, generator: Generator[simpy.Event, Any, Any]) -> simpy.Process:
        return self.env.process(generator)

    def run_until(self, t_end: SimTime) -> int:
        """
        Process every pending event with fire_at <= t_end, then advance now() to t_end.

        Returns:
            int: Number of events processed (cancelled events are not counted)
        """
        if self._running:
            raise EngineBusy("run_until called while the engine is running")
        if t_end.ticks < self.env.now:
            raise SchedulingInPast(f"run horizon {t_end} is before now {self.now}")

        self._running = True
        env = self.env
        start = self._fired
        try:
            if t_end.ticks > env.now:
                # horizon marker, so the clock lands on t_end even with an empty queue
                env.timeout(t_end.ticks - env.now)
            while env.peek() <= t_end.ticks:
                env.step()
        finally:
            self._running = False

        processed = self._fired - start
        self.processed += processed
        logger.debug("processed %d events up to %s", processed, t_end)
        return processed

    def rng(self, stream_id: str) -> RngStream:
        """The RngStream owned by one model instance (created on first use)."""
        stream = self._streams.get(stream_id)
        if stream is None:
            stream = RngStream(self.seed, stream_id)
            self._streams[stream_id] = stream
        return stream

    def trace_text(self) -> str:
        if self._trace is None:
            raise RuntimeError("tracing is disabled for this engine")
        return "".join(line + "\n" for line in self._trace)

    def trace_digest(self) -> str:
        return hashlib.sha256(self.trace_text().encode("utf-8")).hexdigest()
