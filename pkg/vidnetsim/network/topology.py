"""Nodes, links, drop-tail queues and shared-medium channels.

A Link is a store-and-forward hop: packets wait in a drop-tail FIFO, serialize at the
link rate, then propagate. The attached error model is consulted exactly once per
packet at delivery time; corrupted packets are still delivered (marked) so receivers
can tell corruption from queue loss.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Deque, Optional, Protocol, Set

from ..core.engine import Simulator
from ..core.simtime import TICKS_PER_SECOND, SimTime
from ..errors import MemberNotActive, OversizedPacket

logger = logging.getLogger(__name__)

DEFAULT_QUEUE_CAPACITY = 100
DEFAULT_CONTENTION = 0.01


class Tier(str, Enum):
    RELIEF_CENTER_LAN = "relief_center_lan"
    WIFI_CLIENT = "wifi_client"
    WIMAX_SS = "wimax_ss"
    SERVER = "server"
    BTS = "bts"
    AP = "ap"


class ChannelKind(str, Enum):
    CSMA = "csma"
    WIFI = "wifi"
    WIMAX = "wimax"


@dataclass(frozen=True, order=True)
class NodeId:
    index: int
    tier: Tier

    @property
    def name(self) -> str:
        return f"{self.tier.value}-{self.index}"


@dataclass(frozen=True)
class LinkConfig:
    rate_bps: float
    prop_delay: SimTime = SimTime.from_ms(2)
    mtu_bytes: int = 1400
    queue_capacity_pkts: int = DEFAULT_QUEUE_CAPACITY

    def __post_init__(self):
        if self.rate_bps <= 0:
            raise ValueError(f"rate_bps must be positive, got {self.rate_bps}")
        if self.mtu_bytes < 64:
            raise ValueError(f"mtu_bytes must be at least 64, got {self.mtu_bytes}")
        if self.queue_capacity_pkts <= 0:
            raise ValueError(f"queue_capacity_pkts must be positive, got {self.queue_capacity_pkts}")


BACKHAUL_DEFAULT = LinkConfig(rate_bps=100e6)
CSMA_DEFAULT = LinkConfig(rate_bps=5e6)


def serialization_delay(size_bytes: int, rate_bps: float) -> SimTime:
    if size_bytes < 0:
        raise ValueError(f"size_bytes must be nonnegative, got {size_bytes}")
    return SimTime(round(size_bytes * 8 * TICKS_PER_SECOND / rate_bps))


def transmission_delay(size_bytes: int, link: LinkConfig) -> SimTime:
    """Time to clock `size_bytes` onto `link`, rounded to the nearest tick."""
    return serialization_delay(size_bytes, link.rate_bps)


class Packet(Protocol):
    @property
    def size_bytes(self) -> int: ...


class EnqueueResult(str, Enum):
    ACCEPTED = "accepted"
    DROPPED_TAIL = "dropped_tail"


class Verdict(str, Enum):
    OK = "ok"
    CORRUPT = "corrupt"
    SPEED_DROP = "speed_drop"


class DropTailQueue:
    """FIFO buffer that refuses arrivals once `capacity_pkts` packets are waiting."""

    discipline = "drop-tail"

    def __init__(self, capacity_pkts: int = DEFAULT_QUEUE_CAPACITY):
        if capacity_pkts <= 0:
            raise ValueError(f"capacity_pkts must be positive, got {capacity_pkts}")
        self.capacity_pkts = capacity_pkts
        self._items: Deque[Any] = deque()
        self.drops = 0
        self.peak_occupancy = 0

    @property
    def occupancy(self) -> int:
        return len(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def enqueue(self, packet: Any) -> EnqueueResult:
        if len(self._items) >= self.capacity_pkts:
            self.drops += 1
            return EnqueueResult.DROPPED_TAIL
        self._items.append(packet)
        if len(self._items) > self.peak_occupancy:
            self.peak_occupancy = len(self._items)
        return EnqueueResult.ACCEPTED

    def dequeue(self) -> Optional[Any]:
        return self._items.popleft() if self._items else None


def enqueue(packet: Any, queue: DropTailQueue) -> EnqueueResult:
    return queue.enqueue(packet)


@dataclass
class SharedChannel:
    """A medium whose aggregate rate is divided among its active members."""

    kind: ChannelKind
    aggregate_rate_bps: float
    contention: float = DEFAULT_CONTENTION
    modulation_label: str = ""
    active_members: Set[NodeId] = field(default_factory=set)

    def __post_init__(self):
        if self.aggregate_rate_bps <= 0:
            raise ValueError(f"aggregate_rate_bps must be positive, got {self.aggregate_rate_bps}")
        if self.contention < 0:
            raise ValueError(f"contention must be nonnegative, got {self.contention}")
        if self.kind is ChannelKind.WIMAX and not self.modulation_label:
            self.modulation_label = "OFDM 16-QAM"

    def join(self, member: NodeId) -> None:
        self.active_members.add(member)

    def leave(self, member: NodeId) -> None:
        self.active_members.discard(member)


def contention_efficiency(members: int, contention: float) -> float:
    return 1.0 / (1.0 + contention * (members - 1))


def shared_channel_effective_rate(channel: SharedChannel, member: NodeId) -> float:
    """
    Rate available to one member of a shared channel.

    Wi-Fi and WiMAX split the aggregate evenly and lose a contention share
    1/(1 + c(n-1)); a CSMA channel is a point-to-point link at its full rate.
    """
    if member not in channel.active_members:
        raise MemberNotActive(f"{member.name} is not active on the {channel.kind.value} channel")
    if channel.kind is ChannelKind.CSMA:
        return channel.aggregate_rate_bps
    members = len(channel.active_members)
    return channel.aggregate_rate_bps / members * contention_efficiency(members, channel.contention)


class CorruptionCheck(Protocol):
    def is_corrupt(self, size_bytes: int) -> bool: ...


DeliverFn = Callable[[Any, Verdict], None]
DropFn = Callable[[Any], None]


class Link:
    def __init__(self, sim: Simulator, name: str, config: LinkConfig, *,
                 rate_fn: Optional[Callable[[], float]] = None,
                 error_model: Optional[CorruptionCheck] = None,
                 loss_hook: Optional[Callable[[Any], bool]] = None,
                 on_deliver: Optional[DeliverFn] = None,
                 on_queue_drop: Optional[DropFn] = None):
        """
        Create a hop.

        Args:
            sim (Simulator): Owning engine
            name (str): Label used in logs
            config (LinkConfig): Rate, propagation delay, MTU and queue capacity
            rate_fn (Callable): Current serialization rate; defaults to config.rate_bps
            error_model (CorruptionCheck): Consulted once per packet at delivery
            loss_hook (Callable): Extra per-packet loss draw (speed degradation), always consulted
            on_deliver (Callable): Receives (packet, verdict) at the far end
            on_queue_drop (Callable): Receives packets refused by the full queue
        """
        self.sim = sim
        self.name = name
        self.config = config
        self.queue = DropTailQueue(config.queue_capacity_pkts)
        self.rate_fn = rate_fn or (lambda: config.rate_bps)
        self.error_model = error_model
        self.loss_hook = loss_hook
        self.on_deliver = on_deliver
        self.on_queue_drop = on_queue_drop
        self.busy = False

        self.injected = 0
        self.delivered = 0
        self.corrupted = 0
        self.speed_drops = 0
        self.queue_drops = 0

    @property
    def in_flight(self) -> int:
        return self.injected - self.delivered - self.corrupted - self.speed_drops - self.queue_drops

    def send(self, packet: Any) -> EnqueueResult:
        """Hand a packet to the hop; an idle transmitter starts serializing at once."""
        size = packet.size_bytes
        if size > self.config.mtu_bytes:
            raise OversizedPacket(size, self.config.mtu_bytes)
        self.injected += 1
        if not self.busy:
            self._start(packet)
            return EnqueueResult.ACCEPTED
        result = enqueue(packet, self.queue)
        if result is EnqueueResult.DROPPED_TAIL:
            self.queue_drops += 1
            if self.queue_drops == 1:
                logger.warning("%s: queue full (%d packets), dropping arrivals",
                               self.name, self.queue.capacity_pkts)
            if self.on_queue_drop is not None:
                self.on_queue_drop(packet)
        return result

    def _start(self, packet: Any) -> None:
        self.busy = True
        self.sim.schedule_in(serialization_delay(packet.size_bytes, self.rate_fn()),
                             self._finish_transmission, packet)

    def _finish_transmission(self, packet: Any) -> None:
        self.sim.schedule_in(self.config.prop_delay, self._arrive, packet)
        following = self.queue.dequeue()
        if following is None:
            self.busy = False
        else:
            self._start(following)

    def _arrive(self, packet: Any) -> None:
        verdict = Verdict.OK
        if self.error_model is not None and self.error_model.is_corrupt(packet.size_bytes):
            verdict = Verdict.CORRUPT
        if self.loss_hook is not None and self.loss_hook(packet) and verdict is Verdict.OK:
            verdict = Verdict.SPEED_DROP

        if verdict is Verdict.OK:
            self.delivered += 1
        elif verdict is Verdict.CORRUPT:
            self.corrupted += 1
        else:
            self.speed_drops += 1

        if self.on_deliver is not None:
            self.on_deliver(packet, verdict)


def link_transfer(packet: Any, link: Link) -> EnqueueResult:
    """Inject a packet on a link; delivery (or loss) is scheduled by the engine."""
    return link.send(packet)
