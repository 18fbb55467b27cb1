"""Video flows over the simulated network: packetization, sending, reassembly, stats.

A VideoClient cuts each encoded frame into MTU-bounded segments and injects them on
its first hop. The Receiver at the server rebuilds frames from uncorrupted fragments,
applies the playout deadline and keeps per-flow delay, jitter and loss counters.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Set

from ..core.engine import Simulator
from ..core.simtime import SimTime
from ..errors import DuplicateFragment, EmptyPayload, MtuTooSmall, NegativeDelay
from ..network.topology import Link, NodeId, Verdict, link_transfer
from ..video.codec import Bitstream, EncodedFrame, FrameType, bitrate_of

logger = logging.getLogger(__name__)

HEADER_BYTES = 40
JITTER_GAIN = 16


@dataclass(slots=True, eq=False)
class Segment:
    flow_id: int
    seq: int
    frame_index: int
    frame_type: FrameType
    frag_index: int
    frag_count: int
    payload: bytes
    header_bytes: int = HEADER_BYTES
    send_time: Optional[SimTime] = None

    @property
    def size_bytes(self) -> int:
        return self.header_bytes + len(self.payload)


def packetize(frame: EncodedFrame, flow_id: int, mtu_bytes: int, header_bytes: int = HEADER_BYTES, *,
              max_payload: Optional[int] = None, first_seq: int = 0) -> List[Segment]:
    """
    Split a frame's payload into segments that fit the MTU.

    Args:
        frame (EncodedFrame): Frame to send
        flow_id (int): Flow the segments belong to
        mtu_bytes (int): Largest packet (header included)
        header_bytes (int): Per-packet header overhead
        max_payload (int): Optional smaller cap on payload per segment
        first_seq (int): Sequence number of the first segment

    Returns:
        List[Segment]: Full-size fragments followed by at most one shorter one
    """
    if not frame.payload:
        raise EmptyPayload(f"frame {frame.index} has no payload")
    if mtu_bytes <= header_bytes:
        raise MtuTooSmall(f"MTU {mtu_bytes} leaves no room after a {header_bytes}-byte header")
    chunk = mtu_bytes - header_bytes
    if max_payload is not None:
        if max_payload <= 0:
            raise ValueError(f"max_payload must be positive, got {max_payload}")
        chunk = min(chunk, max_payload)

    payload = frame.payload
    count = -(-len(payload) // chunk)
    return [
        Segment(flow_id, first_seq + i, frame.index, frame.frame_type, i, count,
                payload[i * chunk:(i + 1) * chunk], header_bytes)
        for i in range(count)
    ]


class PacingMode(str, Enum):
    FRAME_SYNCHRONOUS = "frame_synchronous"
    BACK_TO_BACK = "back_to_back"
    CONSTANT_INTERVAL = "constant_interval"
    CODEC_RATE = "codec_rate"

    @property
    def evenly_spaced(self) -> bool:
        return self in (PacingMode.CONSTANT_INTERVAL, PacingMode.CODEC_RATE)


def codec_packet_interval(bitstream: Bitstream, segment_count: int) -> SimTime:
    """Gap that sends `segment_count` packets evenly at the stream's own bitrate."""
    if segment_count < 1:
        raise ValueError(f"segment_count must be positive, got {segment_count}")
    playout = bitstream.total_bytes * 8 / bitrate_of(bitstream)
    return SimTime.from_seconds(playout / segment_count)


@dataclass(frozen=True)
class PlayoutConfig:
    frame_deadline: SimTime = SimTime.from_ms(12)
    enabled: bool = True

    def __post_init__(self):
        if self.frame_deadline.ticks <= 0:
            raise ValueError("frame_deadline must be positive")


class FrameOutcome(str, Enum):
    DELIVERED = "delivered"
    LOST = "lost"
    LATE_DISCARD = "late_discard"


class DeadlineVerdict(str, Enum):
    ON_TIME = "on_time"
    LATE_DISCARD = "late_discard"


@dataclass
class FlowStats:
    sent_pkts: int = 0
    recv_pkts: int = 0
    corrupt_pkts: int = 0
    queue_drops: int = 0
    deadline_drops: int = 0
    speed_drops: int = 0
    delay_sum: int = 0
    delay_max: int = 0
    jitter: float = 0.0
    recv_bytes: int = 0
    first_send: Optional[SimTime] = None
    last_recv: Optional[SimTime] = None
    last_transit: Optional[int] = None
    frame_outcomes: Dict[int, FrameOutcome] = field(default_factory=dict)

    @property
    def mean_delay(self) -> SimTime:
        return SimTime(round(self.delay_sum / self.recv_pkts)) if self.recv_pkts else SimTime(0)

    @property
    def jitter_ms(self) -> float:
        return self.jitter / 1e6

    def lost_frames(self) -> Set[int]:
        return {index for index, outcome in self.frame_outcomes.items()
                if outcome is not FrameOutcome.DELIVERED}

    def accounted(self) -> int:
        return self.recv_pkts + self.corrupt_pkts + self.queue_drops


def record_delivery(segment: Segment, recv_time: SimTime, stats: FlowStats) -> FlowStats:
    """
    Account one uncorrupted delivery.

    Jitter follows the smoothed interarrival estimator J += (|D| - J) / 16, where D is
    the change in transit time between successive received packets.
    """
    transit = recv_time.ticks - segment.send_time.ticks
    if transit < 0:
        raise NegativeDelay(f"segment {segment.seq} of flow {segment.flow_id} received before it was sent")
    stats.recv_pkts += 1
    stats.recv_bytes += segment.size_bytes
    stats.delay_sum += transit
    stats.delay_max = max(stats.delay_max, transit)
    if stats.last_transit is not None:
        stats.jitter += (abs(transit - stats.last_transit) - stats.jitter) / JITTER_GAIN
    stats.last_transit = transit
    stats.last_recv = recv_time
    return stats


def frame_deadline_check(frame_completion: SimTime, nominal: SimTime, cfg: PlayoutConfig) -> DeadlineVerdict:
    # boundary inclusive; a disabled playout buffer keeps every frame
    if cfg.enabled and frame_completion.ticks > nominal.ticks + cfg.frame_deadline.ticks:
        return DeadlineVerdict.LATE_DISCARD
    return DeadlineVerdict.ON_TIME


def flow_throughput(stats: FlowStats, interval: SimTime) -> float:
    """Received bits per second over `interval`."""
    if interval.ticks <= 0:
        raise ValueError("throughput interval must be positive")
    return stats.recv_bytes * 8 / interval.seconds


def flow_interval(stats: FlowStats) -> Optional[SimTime]:
    """First send to last delivery, or None when nothing was received."""
    if stats.first_send is None or stats.last_recv is None or stats.last_recv <= stats.first_send:
        return None
    return stats.last_recv - stats.first_send


# reassembly

@dataclass
class FrameBuffer:
    frag_count: int
    fragments: Dict[int, bytes] = field(default_factory=dict)
    failed: bool = False
    done: bool = False


@dataclass(frozen=True)
class CompletedFrame:
    frame_index: int
    payload: bytes
    completed_at: SimTime


@dataclass
class ReassemblyState:
    frames: Dict[int, FrameBuffer] = field(default_factory=dict)
    duplicates: int = 0
    unusable: int = 0

    def buffer(self, segment: Segment) -> FrameBuffer:
        buf = self.frames.get(segment.frame_index)
        if buf is None:
            buf = self.frames[segment.frame_index] = FrameBuffer(segment.frag_count)
        return buf

    def mark_lost(self, segment: Segment) -> None:
        buf = self.buffer(segment)
        if not buf.failed:
            buf.failed = True
            self.unusable += len(buf.fragments)

    def is_lost(self, frame_index: int) -> bool:
        buf = self.frames.get(frame_index)
        return buf is not None and buf.failed


def reassemble_on_receive(segment: Segment, state: ReassemblyState, now: SimTime) -> Optional[CompletedFrame]:
    """
    Buffer an uncorrupted fragment; return the rebuilt frame once all fragments are in.

    Fragments of a frame already marked lost are counted as unusable.

    Raises:
        DuplicateFragment: The fragment was already buffered (counted in state.duplicates)
    """
    buf = state.buffer(segment)
    if segment.frag_index in buf.fragments or buf.done:
        state.duplicates += 1
        raise DuplicateFragment(f"flow {segment.flow_id} frame {segment.frame_index} "
                                f"fragment {segment.frag_index} received twice")
    if buf.failed:
        state.unusable += 1
        buf.fragments[segment.frag_index] = b""
        return None
    buf.fragments[segment.frag_index] = segment.payload
    if len(buf.fragments) < buf.frag_count:
        return None
    buf.done = True
    payload = b"".join(buf.fragments[i] for i in range(buf.frag_count))
    return CompletedFrame(segment.frame_index, payload, now)


class Receiver:
    """Server-side sink for every flow of a scenario."""

    def __init__(self, sim: Simulator, playout: PlayoutConfig):
        self.sim = sim
        self.playout = playout
        self.stats: Dict[int, FlowStats] = {}
        self.reassembly: Dict[int, ReassemblyState] = {}
        self.payloads: Dict[int, Dict[int, bytes]] = {}
        self._nominal: Dict[int, Callable[[int], SimTime]] = {}

    def register(self, flow_id: int, nominal_fn: Callable[[int], SimTime]) -> FlowStats:
        stats = self.stats[flow_id] = FlowStats()
        self.reassembly[flow_id] = ReassemblyState()
        self.payloads[flow_id] = {}
        self._nominal[flow_id] = nominal_fn
        return stats

    def on_segment(self, segment: Segment, verdict: Verdict) -> None:
        stats = self.stats[segment.flow_id]
        state = self.reassembly[segment.flow_id]
        if verdict is not Verdict.OK:
            stats.corrupt_pkts += 1
            if verdict is Verdict.SPEED_DROP:
                stats.speed_drops += 1
            self._fail(segment, stats, state)
            return

        now = self.sim.now
        record_delivery(segment, now, stats)
        try:
            completed = reassemble_on_receive(segment, state, now)
        except DuplicateFragment:
            return
        if completed is None:
            return
        nominal = self._nominal[segment.flow_id](completed.frame_index)
        if frame_deadline_check(completed.completed_at, nominal, self.playout) is DeadlineVerdict.LATE_DISCARD:
            stats.deadline_drops += 1
            stats.frame_outcomes[completed.frame_index] = FrameOutcome.LATE_DISCARD
        else:
            stats.frame_outcomes[completed.frame_index] = FrameOutcome.DELIVERED
            self.payloads[segment.flow_id][completed.frame_index] = completed.payload

    def on_queue_drop(self, segment: Segment) -> None:
        stats = self.stats[segment.flow_id]
        stats.queue_drops += 1
        self._fail(segment, stats, self.reassembly[segment.flow_id])

    def _fail(self, segment: Segment, stats: FlowStats, state: ReassemblyState) -> None:
        state.mark_lost(segment)
        stats.frame_outcomes[segment.frame_index] = FrameOutcome.LOST

    def finish(self, flow_id: int, frame_count: int) -> FlowStats:
        """Frames never completed by the end of the run count as lost."""
        stats = self.stats[flow_id]
        for index in range(frame_count):
            stats.frame_outcomes.setdefault(index, FrameOutcome.LOST)
        duplicates = self.reassembly[flow_id].duplicates
        if duplicates:
            logger.debug("flow %d: ignored %d duplicate fragments", flow_id, duplicates)
        return stats


Forward = Callable[[Segment], object]


class VideoClient:
    """Sends one bitstream as a UDP-style flow from a field node to the server."""

    def __init__(self, sim: Simulator, flow_id: int, source: NodeId, dest: NodeId, bitstream: Bitstream,
                 send: Forward, *, pacing: PacingMode = PacingMode.FRAME_SYNCHRONOUS,
                 mtu_bytes: int = 1400, header_bytes: int = HEADER_BYTES,
                 segment_bytes: Optional[int] = None, packet_interval: SimTime = SimTime.from_ms(1),
                 start: SimTime = SimTime(0)):
        """
        Args:
            sim (Simulator): Owning engine
            flow_id (int): Unique within the scenario
            source, dest (NodeId): Sending node and the server
            bitstream (Bitstream): Frames to send
            send (Callable): Injects a segment on the first hop
            pacing (PacingMode): Injection schedule
            segment_bytes (int): Optional payload cap per segment
            packet_interval (SimTime): Gap between segments for constant-interval pacing;
                codec-rate pacing derives it from the bitstream instead
            start (SimTime): Time of the first injection
        """
        self.sim = sim
        self.flow_id = flow_id
        self.source = source
        self.dest = dest
        self.bitstream = bitstream
        self.send = send
        self.pacing = PacingMode(pacing)
        self.packet_interval = packet_interval
        self.start = start
        self.stats: Optional[FlowStats] = None

        self.segments: List[List[Segment]] = []
        seq = 0
        for frame in bitstream.frames:
            frame_segments = packetize(frame, flow_id, mtu_bytes, header_bytes,
                                       max_payload=segment_bytes, first_seq=seq)
            seq += len(frame_segments)
            self.segments.append(frame_segments)
        if self.pacing is PacingMode.CODEC_RATE:
            self.packet_interval = codec_packet_interval(bitstream, self.segment_count)
        self._nominal = self._nominal_arrivals()

    def _frame_time(self, index: int) -> SimTime:
        return self.start + SimTime.from_seconds(index / self.bitstream.gop.frame_rate)

    def _nominal_arrivals(self) -> List[SimTime]:
        if not self.pacing.evenly_spaced:
            return [self._frame_time(i) for i in range(len(self.segments))]
        nominal, sent = [], 0
        for frame_segments in self.segments:
            sent += len(frame_segments)
            nominal.append(SimTime(self.start.ticks + (sent - 1) * self.packet_interval.ticks))
        return nominal

    def nominal_arrival(self, frame_index: int) -> SimTime:
        return self._nominal[frame_index]

    @property
    def segment_count(self) -> int:
        return sum(len(s) for s in self.segments)

    def attach(self, receiver: Receiver) -> FlowStats:
        self.stats = receiver.register(self.flow_id, self.nominal_arrival)
        return self.stats

    def schedule(self) -> None:
        """Queue every injection on the engine."""
        if self.pacing.evenly_spaced:
            flat = [segment for frame_segments in self.segments for segment in frame_segments]
            for i, segment in enumerate(flat):
                self.sim.schedule(SimTime(self.start.ticks + i * self.packet_interval.ticks),
                                  self._inject, segment)
        elif self.pacing is PacingMode.BACK_TO_BACK:
            self.sim.schedule(self.start, self._inject_frames, range(len(self.segments)))
        else:
            for index in range(len(self.segments)):
                self.sim.schedule(self._frame_time(index), self._inject_frames, (index,))

    def _inject_frames(self, indices) -> None:
        for index in indices:
            for segment in self.segments[index]:
                self._inject(segment)

    def _inject(self, segment: Segment) -> None:
        now = self.sim.now
        segment.send_time = now
        self.stats.sent_pkts += 1
        if self.stats.first_send is None:
            self.stats.first_send = now
        self.send(segment)


def chain(first: Link, receiver: Receiver, *rest: Link) -> None:
    """
    Wire a path: first -> rest... -> receiver.

    Good packets are forwarded hop by hop; corrupted or speed-dropped packets are
    handed to the receiver at the hop where it happened, and queue drops are reported
    from whichever hop refused them.
    """
    hops = (first,) + rest
    for hop, following in zip(hops, hops[1:] + (None,)):
        hop.on_queue_drop = receiver.on_queue_drop
        if following is None:
            hop.on_deliver = receiver.on_segment
        else:
            hop.on_deliver = _forwarder(following, receiver)


def _forwarder(following: Link, receiver: Receiver):
    def deliver(segment: Segment, verdict: Verdict) -> None:
        if verdict is Verdict.OK:
            link_transfer(segment, following)
        else:
            receiver.on_segment(segment, verdict)
    return deliver
