"""Build and run one disaster-area scenario.

Topology: WiMAX subscriber stations share the uplink to the BTS, which reaches the
relief-center server over the backhaul; Wi-Fi clients share the AP, which reaches the
server over a CSMA link; relief-center LAN nodes have their own CSMA links. Every
transmitting node streams the same encoded sequence to the server.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from ..core.engine import Simulator
from ..core.simtime import SimTime
from ..network.error_models import (BurstErrorModel, NoErrorModel, RateErrorModel)
from ..network.mobility import (MobilityModel, MobilityState, SpeedLossHook, constant_velocity,
                                cv_position_at, rw_step)
from ..network.topology import ChannelKind, Link, NodeId, SharedChannel, Tier, shared_channel_effective_rate
from ..video.codec import bitrate_of, decode, decode_with_concealment, encode_sequence
from ..video.container import passthrough_bitstream
from ..video.quality import psnr_per_frame
from ..video.yuv import RawFrame, read_yuv, synthetic_sequence
from .config import ScenarioConfig, VideoSettings
from .transport import FlowStats, FrameOutcome, Receiver, VideoClient, chain, flow_interval, flow_throughput

logger = logging.getLogger(__name__)


class VideoAssets:
    """Source frames, their encoding, and decoded-quality lookups per loss set."""

    def __init__(self, settings: VideoSettings):
        self.settings = settings
        self.source: Optional[List[RawFrame]] = None
        if settings.source == "passthrough":
            self.bitstream = passthrough_bitstream(settings.path, settings.index_map,
                                                   frame_rate=settings.frame_rate,
                                                   gop_size=settings.gop_size)
        else:
            if settings.source == "file":
                self.source = read_yuv(settings.path, settings.width, settings.height, settings.frames)
            else:
                self.source = synthetic_sequence(settings.width, settings.height, settings.frames,
                                                 motion=settings.motion, slope=settings.slope)
            self.bitstream = encode_sequence(self.source, settings.gop_config())
        self._psnr: Dict[FrozenSet[int], List[float]] = {}

    @property
    def decodable(self) -> bool:
        return self.bitstream.decodable

    def frame_psnrs(self, lost: FrozenSet[int]) -> List[float]:
        """Per-frame Y-PSNR of the concealed decode against the source."""
        if not self.decodable:
            return [math.nan] * len(self.bitstream)
        cached = self._psnr.get(lost)
        if cached is None:
            decoded = decode(self.bitstream) if not lost else decode_with_concealment(self.bitstream, lost)
            cached = self._psnr[lost] = psnr_per_frame(self.source, decoded)
        return cached

    @property
    def codec_psnr(self) -> float:
        return float(np.mean(self.frame_psnrs(frozenset())))


@lru_cache(maxsize=8)
def _assets_for(video_json: str) -> VideoAssets:
    return VideoAssets(VideoSettings.model_validate(json.loads(video_json)))


def video_assets(settings: VideoSettings) -> VideoAssets:
    return _assets_for(settings.model_dump_json())


@dataclass
class FlowResult:
    flow_id: int
    node: NodeId
    stats: FlowStats
    frame_types: List[str]
    outcomes: List[FrameOutcome]
    frame_psnrs: List[float]
    bitrate_bps: float
    throughput_bps: float
    final_position: Tuple[float, float]
    received_payloads: Optional[Dict[int, bytes]] = None

    @property
    def frames_lost(self) -> int:
        return sum(outcome is not FrameOutcome.DELIVERED for outcome in self.outcomes)

    @property
    def mean_psnr(self) -> float:
        return float(np.mean(self.frame_psnrs))


@dataclass
class ScenarioResult:
    seed: int
    flows: List[FlowResult]
    codec_psnr: float
    events: int
    trace_digest: Optional[str] = None
    links: Dict[str, Link] = field(default_factory=dict, repr=False)

    def flow(self, flow_id: int) -> FlowResult:
        return self.flows[flow_id]


class _Node:
    """Mobility bookkeeping for one field node."""

    def __init__(self, node: NodeId, state: Optional[MobilityState]):
        self.node = node
        self.state = state

    def speed(self) -> float:
        return self.state.speed if self.state is not None else 0.0


class Scenario:
    def __init__(self, cfg: ScenarioConfig, seed: int, *, playout_enabled: bool = True,
                 trace: bool = False, keep_payloads: bool = False):
        self.cfg = cfg
        self.sim = Simulator(seed, trace)
        self.keep_payloads = keep_payloads
        enabled = cfg.transport.deadline_enabled
        self.receiver = Receiver(self.sim, cfg.transport.playout(playout_enabled if enabled is None else enabled))
        self.assets = video_assets(cfg.video)
        self.box = cfg.topology.box.bounding_box()
        self.links: Dict[str, Link] = {}
        self.nodes: List[_Node] = []
        self.clients: List[VideoClient] = []
        self.server = NodeId(0, Tier.SERVER)
        self._next_index = 1
        self._build()

    def _new_node(self, tier: Tier) -> NodeId:
        node = NodeId(self._next_index, tier)
        self._next_index += 1
        return node

    def _link(self, name: str, config, **kwargs) -> Link:
        link = self.links[name] = Link(self.sim, name, config, **kwargs)
        return link

    def _error_model(self, node: NodeId):
        settings = self.cfg.error
        if settings.model == "rate":
            return RateErrorModel(settings.rate_config(), self.sim.rng(f"error/{node.name}"))
        if settings.model == "burst":
            return BurstErrorModel(settings.burst_config(), self.sim.rng(f"error/{node.name}"))
        return NoErrorModel()

    def _mobility(self, node: NodeId, model: MobilityModel) -> Optional[MobilityState]:
        mob = self.cfg.mobility
        stream = self.sim.rng(f"mobility/{node.name}")
        position = self.box.random_point(stream)
        if model is MobilityModel.CONSTANT_VELOCITY:
            return constant_velocity(position, mob.speed, mob.heading_deg)
        if model is MobilityModel.RANDOM_WALK:
            return MobilityState(position, model=model, walk_epoch=mob.walk_epoch_s,
                                 speed_range=(mob.walk_speed_min, mob.walk_speed_max))
        return MobilityState(position)

    def _walk(self, entry: _Node):
        """Random-walk process: one rw_step per epoch until the horizon."""
        stream = self.sim.rng(f"mobility/{entry.node.name}")
        while True:
            epoch = SimTime.from_seconds(entry.state.walk_epoch)
            if self.sim.now + epoch > self.cfg.duration:
                return
            yield self.sim.timeout(epoch, label=f"walk/{entry.node.name}")
            entry.state = rw_step(entry.state, self.box, stream)

    def _access_node(self, tier: Tier, channel: Optional[SharedChannel], model: Optional[MobilityModel],
                     link_config) -> Tuple[NodeId, Link]:
        node = self._new_node(tier)
        entry = _Node(node, self._mobility(node, model) if model is not None else None)
        self.nodes.append(entry)

        rate_fn = None
        if channel is not None:
            channel.join(node)
            rate_fn = lambda: shared_channel_effective_rate(channel, node)
        hook = None
        if model is not None:
            hook = SpeedLossHook(entry.speed, self.cfg.mobility.degradation(), self.sim.rng(f"speed/{node.name}"))
        link = self._link(f"access/{node.name}", link_config, rate_fn=rate_fn,
                          error_model=self._error_model(node), loss_hook=hook)
        if entry.state is not None and entry.state.model is MobilityModel.RANDOM_WALK:
            self.sim.process(self._walk(entry))
        return node, link

    def _build(self) -> None:
        topo, counts, mob = self.cfg.topology, self.cfg.nodes, self.cfg.mobility
        paths: List[Tuple[NodeId, Link, Tuple[Link, ...]]] = []

        if counts.wimax_ss:
            bts = NodeId(0, Tier.BTS)
            channel = SharedChannel(ChannelKind.WIMAX, topo.wimax.aggregate_mbps * 1e6, topo.contention,
                                    topo.wimax.modulation)
            backhaul = self._link(f"backhaul/{bts.name}", topo.backhaul.link_config())
            for _ in range(counts.wimax_ss):
                node, access = self._access_node(Tier.WIMAX_SS, channel, mob.model,
                                                 topo.wimax.member_link_config())
                paths.append((node, access, (backhaul,)))

        if counts.wifi_client:
            ap = NodeId(0, Tier.AP)
            channel = SharedChannel(ChannelKind.WIFI, topo.wifi.aggregate_mbps * 1e6, topo.contention,
                                    topo.wifi.modulation)
            uplink = self._link(f"uplink/{ap.name}", topo.ap_uplink.link_config())
            for _ in range(counts.wifi_client):
                node, access = self._access_node(Tier.WIFI_CLIENT, channel, mob.wifi_model,
                                                 topo.wifi.member_link_config())
                paths.append((node, access, (uplink,)))

        for _ in range(counts.relief_center_lan):
            node, access = self._access_node(Tier.RELIEF_CENTER_LAN, None, None, topo.lan.link_config())
            paths.append((node, access, ()))

        transport = self.cfg.transport
        for flow_id, (node, access, rest) in enumerate(paths):
            chain(access, self.receiver, *rest)
            client = VideoClient(self.sim, flow_id, node, self.server, self.assets.bitstream, access.send,
                                 pacing=transport.pacing, mtu_bytes=access.config.mtu_bytes,
                                 header_bytes=transport.header_bytes, segment_bytes=transport.segment_bytes,
                                 packet_interval=SimTime.from_ms(transport.packet_interval_ms))
            client.attach(self.receiver)
            client.schedule()
            self.clients.append(client)

    def _final_position(self, entry: _Node) -> Tuple[float, float]:
        if entry.state is None:
            return (math.nan, math.nan)
        if entry.state.model is MobilityModel.CONSTANT_VELOCITY:
            return cv_position_at(entry.state, self.sim.now)
        return entry.state.position

    def run(self) -> ScenarioResult:
        events = self.sim.run_until(self.cfg.duration)
        in_flight = sum(link.in_flight for link in self.links.values())
        if in_flight:
            logger.warning("%d packets still in flight at the end of the run (%s)", in_flight, self.cfg.duration)

        bitstream = self.assets.bitstream
        frame_types = [frame.frame_type.value for frame in bitstream.frames]
        flows = []
        for client, entry in zip(self.clients, self.nodes):
            stats = self.receiver.finish(client.flow_id, len(bitstream))
            outcomes = [stats.frame_outcomes[i] for i in range(len(bitstream))]
            lost = frozenset(stats.lost_frames())
            interval = flow_interval(stats)
            flows.append(FlowResult(
                flow_id=client.flow_id,
                node=client.source,
                stats=stats,
                frame_types=frame_types,
                outcomes=outcomes,
                frame_psnrs=self.assets.frame_psnrs(lost),
                bitrate_bps=bitrate_of(bitstream.with_payloads_dropped(lost)),
                throughput_bps=flow_throughput(stats, interval) if interval is not None else 0.0,
                final_position=self._final_position(entry),
                received_payloads=dict(self.receiver.payloads[client.flow_id]) if self.keep_payloads else None,
            ))
            logger.debug("flow %d (%s): sent %d received %d corrupt %d queue drops %d frames lost %d",
                         client.flow_id, client.source.name, stats.sent_pkts, stats.recv_pkts,
                         stats.corrupt_pkts, stats.queue_drops, len(lost))

        digest = self.sim.trace_digest() if self.sim.tracing else None
        return ScenarioResult(self.sim.seed, flows, self.assets.codec_psnr, events, digest, dict(self.links))


def run_scenario(cfg: ScenarioConfig, seed: Optional[int] = None, *, playout_enabled: bool = True,
                 trace: bool = False, keep_payloads: bool = False) -> ScenarioResult:
    """
    Build and run one scenario.

    Args:
        cfg (ScenarioConfig): Validated configuration
        seed (int): Root seed; defaults to cfg.seed
        playout_enabled (bool): Deadline default when transport.deadline_enabled is unset
        trace (bool): Record the event trace and return its digest
        keep_payloads (bool): Keep reassembled frame payloads in each FlowResult

    Returns:
        ScenarioResult: Per-flow statistics, frame maps and quality
    """
    seed = cfg.seed if seed is None else seed
    logger.info("scenario start: seed %d, %d nodes, error model %s", seed, cfg.nodes.total, cfg.error.model)
    result = Scenario(cfg, seed, playout_enabled=playout_enabled, trace=trace, keep_payloads=keep_payloads).run()
    logger.info("scenario finished: %d events, %d flows", result.events, len(result.flows))
    return result
