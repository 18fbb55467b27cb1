"""The three sweep experiments: error rate, node count and node speed.

Each sweep point runs `replications` scenarios with seeds seed+0, seed+1, ...; the same
seeds are reused at every sweep value, so neighbouring points are paired. Points may run
in worker processes; results are ordered by sweep value, then error model, then
replication whatever the completion order.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import MAX_WIMAX_NODES, ScenarioConfig
from .scenario import ScenarioResult, run_scenario

logger = logging.getLogger(__name__)


class ExperimentKind(str, Enum):
    ERROR_SWEEP = "error_sweep"
    NODE_SWEEP = "node_sweep"
    SPEED_SWEEP = "speed_sweep"

    @classmethod
    def from_cli(cls, name: str) -> "ExperimentKind":
        aliases = {"error": cls.ERROR_SWEEP, "nodes": cls.NODE_SWEEP, "speed": cls.SPEED_SWEEP}
        if name in aliases:
            return aliases[name]
        return cls(name)


@dataclass(frozen=True)
class ExperimentSpec:
    kind: ExperimentKind
    sweep_values: Tuple[float, ...]
    replications: int = 3
    models: Tuple[str, ...] = ("rate", "burst")

    def __post_init__(self):
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        object.__setattr__(self, "models", tuple(self.models))
        values = self.sweep_values
        if not values:
            raise ValueError("sweep_values must not be empty")
        steps = [b - a for a, b in zip(values, values[1:])]
        if not (all(s > 0 for s in steps) or all(s < 0 for s in steps)):
            raise ValueError(f"sweep_values must be strictly monotone, got {list(values)}")
        if self.replications < 1:
            raise ValueError(f"replications must be at least 1, got {self.replications}")
        if self.kind is ExperimentKind.ERROR_SWEEP and not self.models:
            raise ValueError("an error sweep needs at least one error model")

    @classmethod
    def from_config(cls, kind: ExperimentKind, cfg: ScenarioConfig,
                    replications: Optional[int] = None) -> "ExperimentSpec":
        kind = ExperimentKind(kind)
        settings = cfg.experiment
        values = {
            ExperimentKind.ERROR_SWEEP: settings.error_values,
            ExperimentKind.NODE_SWEEP: settings.node_values,
            ExperimentKind.SPEED_SWEEP: settings.speed_values,
        }[kind]
        return cls(kind, tuple(values), replications or settings.replications, tuple(settings.error_models))

    def model_labels(self) -> Tuple[str, ...]:
        return self.models if self.kind is ExperimentKind.ERROR_SWEEP else ("",)


SUMMARY_COLUMNS = [
    "experiment", "model", "sweep_value", "replication", "seed", "flows", "sent", "received", "corrupt",
    "queue_drops", "deadline_drops", "speed_drops", "mean_delay_ms", "max_delay_ms", "jitter_ms",
    "throughput_bps", "frames_lost", "mean_y_psnr_db", "codec_y_psnr_db", "bitrate_bps", "qos_ok",
    "flow_file", "framemap_file",
]

FLOW_COLUMNS = [
    "flow_id", "node", "tier", "sent", "received", "corrupt", "queue_drops", "deadline_drops", "speed_drops",
    "mean_delay_ms", "max_delay_ms", "jitter_ms", "throughput_bps", "frames_lost", "mean_y_psnr_db",
    "bitrate_bps", "final_x_m", "final_y_m",
]

FRAMEMAP_COLUMNS = ["flow_id", "frame_index", "frame_type", "outcome", "y_psnr_db"]


@dataclass
class ReportRow:
    """One (sweep value, model, replication) point; flow quantities are means over flows."""

    experiment: str
    model: str
    sweep_value: float
    replication: int
    seed: int
    flows: int
    sent: float
    received: float
    corrupt: float
    queue_drops: float
    deadline_drops: float
    speed_drops: float
    mean_delay_ms: float
    max_delay_ms: float
    jitter_ms: float
    throughput_bps: float
    frames_lost: float
    mean_y_psnr_db: float
    codec_y_psnr_db: float
    bitrate_bps: float
    qos_ok: bool
    flow_file: str
    framemap_file: str
    flow_rows: List[Dict[str, Any]] = field(default_factory=list, repr=False)
    frame_rows: List[Dict[str, Any]] = field(default_factory=list, repr=False)

    def summary_record(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in SUMMARY_COLUMNS}


def sweep_token(kind: ExperimentKind, value: float, model: str) -> str:
    token = format(value, "g")
    return f"{model}-{token}" if kind is ExperimentKind.ERROR_SWEEP else token


def flow_records(result: ScenarioResult) -> List[Dict[str, Any]]:
    records = []
    for flow in result.flows:
        stats = flow.stats
        records.append({
            "flow_id": flow.flow_id,
            "node": flow.node.name,
            "tier": flow.node.tier.value,
            "sent": stats.sent_pkts,
            "received": stats.recv_pkts,
            "corrupt": stats.corrupt_pkts,
            "queue_drops": stats.queue_drops,
            "deadline_drops": stats.deadline_drops,
            "speed_drops": stats.speed_drops,
            "mean_delay_ms": stats.mean_delay.ms,
            "max_delay_ms": stats.delay_max / 1e6,
            "jitter_ms": stats.jitter_ms,
            "throughput_bps": flow.throughput_bps,
            "frames_lost": flow.frames_lost,
            "mean_y_psnr_db": flow.mean_psnr,
            "bitrate_bps": flow.bitrate_bps,
            "final_x_m": flow.final_position[0],
            "final_y_m": flow.final_position[1],
        })
    return records


def frame_records(result: ScenarioResult) -> List[Dict[str, Any]]:
    return [
        {"flow_id": flow.flow_id, "frame_index": index, "frame_type": kind,
         "outcome": outcome.value, "y_psnr_db": psnr}
        for flow in result.flows
        for index, (kind, outcome, psnr) in enumerate(zip(flow.frame_types, flow.outcomes, flow.frame_psnrs))
    ]


_MEAN_FIELDS = {
    "sent": "sent", "received": "received", "corrupt": "corrupt", "queue_drops": "queue_drops",
    "deadline_drops": "deadline_drops", "speed_drops": "speed_drops", "mean_delay_ms": "mean_delay_ms",
    "max_delay_ms": "max_delay_ms", "jitter_ms": "jitter_ms", "throughput_bps": "throughput_bps",
    "frames_lost": "frames_lost", "mean_y_psnr_db": "mean_y_psnr_db", "bitrate_bps": "bitrate_bps",
}


def build_row(kind: ExperimentKind, model: str, value: float, replication: int, cfg: ScenarioConfig,
              result: ScenarioResult) -> ReportRow:
    flows = flow_records(result)
    means = {name: float(np.mean([record[source] for record in flows])) for name, source in _MEAN_FIELDS.items()}
    token = sweep_token(kind, value, model)
    qos = cfg.experiment
    qos_ok = means["mean_delay_ms"] < qos.qos_delay_ms and means["jitter_ms"] < qos.qos_jitter_ms
    return ReportRow(
        experiment=kind.value, model=model, sweep_value=value, replication=replication, seed=result.seed,
        flows=len(flows), codec_y_psnr_db=result.codec_psnr, qos_ok=qos_ok,
        flow_file=f"flows_{token}_{replication}.csv", framemap_file=f"framemap_{token}_{replication}.csv",
        flow_rows=flows, frame_rows=frame_records(result), **means,
    )


def point_config(kind: ExperimentKind, cfg: ScenarioConfig, value: float, model: str) -> ScenarioConfig:
    """Scenario configuration of one sweep point, with the experiment's overrides applied."""
    cfg = cfg.for_experiment(kind.value)
    if kind is ExperimentKind.ERROR_SWEEP:
        if model == "rate":
            return cfg.with_updates(error={"model": "rate", "rate": value})
        # equal expected corrupted fraction: bursts start value / E[size] of the time
        mean_size = cfg.error.size_distribution().mean
        return cfg.with_updates(error={"model": "burst", "burst_rate": min(1.0, value / mean_size)})
    if kind is ExperimentKind.NODE_SWEEP:
        return cfg.with_updates(nodes={"wimax_ss": int(value), "wifi_client": 0, "relief_center_lan": 0})
    return cfg.with_updates(
        nodes={"wimax_ss": cfg.experiment.speed_nodes, "wifi_client": 0, "relief_center_lan": 0},
        mobility={"model": "constant_velocity", "speed": value},
    )


def playout_default(kind: ExperimentKind) -> bool:
    # the error sweep measures corruption alone; delay is the stressor elsewhere
    return kind is not ExperimentKind.ERROR_SWEEP


Job = Tuple[str, Dict[str, Any], float, str, int, int]


def run_point(job: Job) -> ReportRow:
    """Run one scenario of a sweep (also the worker-process entry point)."""
    kind_name, cfg_data, value, model, replication, seed = job
    kind = ExperimentKind(kind_name)
    cfg = point_config(kind, ScenarioConfig.model_validate(cfg_data), value, model)
    result = run_scenario(cfg, seed, playout_enabled=playout_default(kind))
    return build_row(kind, model, value, replication, cfg, result)


def _jobs(cfg: ScenarioConfig, spec: ExperimentSpec) -> List[Job]:
    data = cfg.model_dump(mode="json")
    return [
        (spec.kind.value, data, value, model, rep, cfg.seed + rep)
        for value in spec.sweep_values
        for model in spec.model_labels()
        for rep in range(spec.replications)
    ]


def _run(cfg: ScenarioConfig, spec: ExperimentSpec, jobs: int) -> List[ReportRow]:
    work = _jobs(cfg, spec)
    logger.info("%s: %d values x %d models x %d replications = %d scenarios", spec.kind.value,
                len(spec.sweep_values), len(spec.model_labels()), spec.replications, len(work))
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_point, work))
    else:
        rows = []
        for done, job in enumerate(work, start=1):
            rows.append(run_point(job))
            logger.info("%s: %d/%d done", spec.kind.value, done, len(work))
    return rows


def _check_kind(spec: ExperimentSpec, expected: ExperimentKind) -> None:
    if spec.kind is not expected:
        raise ValueError(f"expected a {expected.value} spec, got {spec.kind.value}")


def run_error_sweep(cfg: ScenarioConfig, spec: ExperimentSpec, jobs: int = 1) -> List[ReportRow]:
    """PSNR and bitrate against error value, for each error model."""
    _check_kind(spec, ExperimentKind.ERROR_SWEEP)
    bad = [v for v in spec.sweep_values if not 0.0 <= v <= 1.0]
    if bad:
        raise ValueError(f"error values must be fractions in [0, 1], got {bad}")
    return _run(cfg, spec, jobs)


def run_node_sweep(cfg: ScenarioConfig, spec: ExperimentSpec, jobs: int = 1) -> List[ReportRow]:
    """Delay, jitter and per-flow throughput against the number of WiMAX nodes."""
    _check_kind(spec, ExperimentKind.NODE_SWEEP)
    bad = [v for v in spec.sweep_values if not (1 <= v <= MAX_WIMAX_NODES and float(v).is_integer())]
    if bad:
        raise ValueError(f"node counts must be integers in [1, {MAX_WIMAX_NODES}], got {bad}")
    return _run(cfg, spec, jobs)


def run_speed_sweep(cfg: ScenarioConfig, spec: ExperimentSpec, jobs: int = 1) -> List[ReportRow]:
    """Delay, jitter and per-node drops against constant node speed."""
    _check_kind(spec, ExperimentKind.SPEED_SWEEP)
    bad = [v for v in spec.sweep_values if v < 0 or math.isnan(v)]
    if bad:
        raise ValueError(f"speeds must be nonnegative, got {bad}")
    return _run(cfg, spec, jobs)


_DRIVERS = {
    ExperimentKind.ERROR_SWEEP: run_error_sweep,
    ExperimentKind.NODE_SWEEP: run_node_sweep,
    ExperimentKind.SPEED_SWEEP: run_speed_sweep,
}


def run_experiment(cfg: ScenarioConfig, spec: ExperimentSpec, jobs: int = 1) -> List[ReportRow]:
    return _DRIVERS[spec.kind](cfg, spec, jobs)


def mean_by_point(rows: Sequence[ReportRow], column: str) -> Dict[Tuple[str, float], float]:
    """Mean of `column` over replications, keyed by (model, sweep value), in row order."""
    grouped: Dict[Tuple[str, float], List[float]] = {}
    for row in rows:
        grouped.setdefault((row.model, row.sweep_value), []).append(float(getattr(row, column)))
    return {key: float(np.mean(values)) for key, values in grouped.items()}
