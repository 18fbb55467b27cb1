"""Scenario configuration: YAML profiles validated by pydantic models.

Keys may be nested or written flat with dots (`error.rate: 0.001`). Unknown keys are
parse errors that name the key and its line, so typos in sweep files never pass
silently. Fractions accept a trailing `%` (divided by 100).
"""

import logging
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..core.simtime import SimTime
from ..errors import ConfigParseError, ConfigValidationError
from ..network.error_models import BurstErrorConfig, ErrorUnit, RateErrorConfig, SizeDistribution
from ..network.mobility import BoundingBox, MobilityModel, SpeedDegradationConfig
from ..network.topology import LinkConfig
from ..video.codec import GopConfig
from .transport import PacingMode, PlayoutConfig

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DEFAULT_SEED = 1
MAX_WIMAX_NODES = 30
ERROR_SWEEP_VALUES = [0.0001, 0.0005, 0.001, 0.005, 0.01, 0.05]
SPEED_SWEEP_VALUES = [20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0]
OVERRIDABLE_SECTIONS = ("topology", "nodes", "error", "mobility", "video", "transport")


def parse_fraction(value: Any) -> Any:
    """Accept 0.001 or "0.1%"; strings without a suffix are parsed as plain numbers."""
    if isinstance(value, str):
        text = value.strip()
        try:
            if text.endswith("%"):
                return float(text[:-1]) / 100.0
            return float(text)
        except ValueError:
            return value
    return value


Fraction = Annotated[float, BeforeValidator(parse_fraction), Field(ge=0.0, le=1.0)]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class LinkSettings(StrictModel):
    rate_mbps: float = Field(5.0, gt=0)
    prop_delay_ms: float = Field(2.0, ge=0)
    mtu_bytes: int = Field(1400, ge=64)
    queue_capacity_pkts: int = Field(100, ge=1)

    def link_config(self) -> LinkConfig:
        return LinkConfig(self.rate_mbps * 1e6, SimTime.from_ms(self.prop_delay_ms),
                          self.mtu_bytes, self.queue_capacity_pkts)


class ChannelSettings(StrictModel):
    aggregate_mbps: float = Field(15.0, gt=0)
    prop_delay_ms: float = Field(0.5, ge=0)
    mtu_bytes: int = Field(1400, ge=64)
    queue_capacity_pkts: int = Field(100, ge=1)
    modulation: str = "OFDM 16-QAM"

    def member_link_config(self) -> LinkConfig:
        """Per-member transmitter; its rate is replaced by the shared-channel share."""
        return LinkConfig(self.aggregate_mbps * 1e6, SimTime.from_ms(self.prop_delay_ms),
                          self.mtu_bytes, self.queue_capacity_pkts)


class BoxSettings(StrictModel):
    x_min: float = 0.0
    x_max: float = 4500.0
    y_min: float = 0.0
    y_max: float = 4500.0

    @model_validator(mode="after")
    def _ordered(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("box needs x_min < x_max and y_min < y_max")
        return self

    def bounding_box(self) -> BoundingBox:
        return BoundingBox(self.x_min, self.x_max, self.y_min, self.y_max)


class TopologySettings(StrictModel):
    contention: float = Field(0.01, ge=0)
    wimax: ChannelSettings = ChannelSettings()
    wifi: ChannelSettings = ChannelSettings(aggregate_mbps=65.0, prop_delay_ms=0.1,
                                            modulation="802.11n 5GHz")
    backhaul: LinkSettings = LinkSettings(rate_mbps=100.0)
    ap_uplink: LinkSettings = LinkSettings()
    lan: LinkSettings = LinkSettings()
    box: BoxSettings = BoxSettings()


class NodeSettings(StrictModel):
    wimax_ss: int = Field(20, ge=0, le=MAX_WIMAX_NODES)
    wifi_client: int = Field(0, ge=0, le=20)
    relief_center_lan: int = Field(0, ge=0, le=10)

    @property
    def total(self) -> int:
        return self.wimax_ss + self.wifi_client + self.relief_center_lan

    @model_validator(mode="after")
    def _at_least_one(self):
        if self.total < 1:
            raise ValueError("at least one transmitting node is required")
        return self


class ErrorSettings(StrictModel):
    model: Literal["none", "rate", "burst"] = "none"
    rate: Fraction = 0.0
    unit: ErrorUnit = ErrorUnit.BYTE
    burst_rate: Fraction = 0.0
    burst_size_min: int = Field(1, ge=1)
    burst_size_max: int = Field(4, ge=1)

    @model_validator(mode="after")
    def _size_range(self):
        if self.burst_size_max < self.burst_size_min:
            raise ValueError("burst_size_max must be at least burst_size_min")
        return self

    def size_distribution(self) -> SizeDistribution:
        return SizeDistribution.uniform(self.burst_size_min, self.burst_size_max)

    def rate_config(self) -> RateErrorConfig:
        return RateErrorConfig(self.rate, self.unit)

    def burst_config(self) -> BurstErrorConfig:
        return BurstErrorConfig(self.burst_rate, self.size_distribution())


class MobilitySettings(StrictModel):
    model: MobilityModel = MobilityModel.CONSTANT_VELOCITY
    speed: float = Field(20.0, ge=0)
    heading_deg: float = 0.0
    v_crit: float = Field(80.0, ge=0)
    slope: float = Field(0.004, ge=0)
    per_cap: float = Field(0.5, ge=0, le=1)
    wifi_model: MobilityModel = MobilityModel.RANDOM_WALK
    walk_epoch_s: float = Field(1.0, gt=0)
    walk_speed_min: float = Field(0.5, ge=0)
    walk_speed_max: float = Field(2.0, ge=0)

    @model_validator(mode="after")
    def _walk_range(self):
        if self.walk_speed_max < self.walk_speed_min:
            raise ValueError("walk_speed_max must be at least walk_speed_min")
        return self

    def degradation(self) -> SpeedDegradationConfig:
        return SpeedDegradationConfig(self.v_crit, self.slope, self.per_cap)


class VideoSettings(StrictModel):
    source: Literal["synthetic", "file", "passthrough"] = "synthetic"
    path: Optional[Path] = None
    index_map: Optional[Path] = None
    width: int = Field(832, gt=0)
    height: int = Field(480, gt=0)
    frames: int = Field(10, ge=1)
    gop_size: int = Field(4, ge=1)
    b_frames: Optional[int] = None
    frame_rate: float = Field(24.0, gt=0)
    qp: int = Field(32, ge=0, le=51)
    motion: int = Field(8, ge=0)
    slope: float = Field(0.45, gt=0)

    @field_validator("width", "height")
    @classmethod
    def _even(cls, value: int) -> int:
        if value % 2:
            raise ValueError("must be even (4:2:0 chroma)")
        return value

    @model_validator(mode="after")
    def _consistent(self):
        if self.b_frames is not None and self.b_frames != self.gop_size - 1:
            raise ValueError(f"b_frames must equal gop_size - 1 ({self.gop_size - 1})")
        if self.source != "synthetic":
            if self.path is None:
                raise ValueError(f"video.path is required for source '{self.source}'")
            if not self.path.is_file():
                raise ValueError(f"video file {self.path} does not exist")
        if self.source == "passthrough":
            if self.index_map is None or not self.index_map.is_file():
                raise ValueError("passthrough source needs an existing video.index_map file")
        return self

    def gop_config(self) -> GopConfig:
        return GopConfig(self.gop_size, self.gop_size - 1, self.frame_rate, self.qp)


class TransportSettings(StrictModel):
    pacing: PacingMode = PacingMode.FRAME_SYNCHRONOUS
    header_bytes: int = Field(40, ge=0)
    segment_bytes: Optional[int] = Field(None, ge=1)
    packet_interval_ms: float = Field(1.0, gt=0)
    deadline_ms: float = Field(12.0, gt=0)
    deadline_enabled: Optional[bool] = None

    def playout(self, enabled: bool) -> PlayoutConfig:
        return PlayoutConfig(SimTime.from_ms(self.deadline_ms), enabled)


class ExperimentSettings(StrictModel):
    replications: int = Field(3, ge=1)
    error_values: List[Fraction] = Field(default_factory=lambda: list(ERROR_SWEEP_VALUES))
    error_models: List[Literal["rate", "burst"]] = Field(default_factory=lambda: ["rate", "burst"])
    node_values: List[int] = Field(default_factory=lambda: list(range(1, MAX_WIMAX_NODES + 1)))
    speed_values: List[float] = Field(default_factory=lambda: list(SPEED_SWEEP_VALUES))
    speed_nodes: int = Field(20, ge=1, le=MAX_WIMAX_NODES)
    qos_delay_ms: float = Field(12.0, gt=0)
    qos_jitter_ms: float = Field(5.0, gt=0)
    overrides: Dict[Literal["error_sweep", "node_sweep", "speed_sweep"], Dict[str, Dict[str, Any]]] = Field(
        default_factory=dict)

    @field_validator("error_models")
    @classmethod
    def _models_nonempty(cls, value):
        if not value or len(set(value)) != len(value):
            raise ValueError("list one or both of 'rate' and 'burst', without repeats")
        return value

    @field_validator("overrides")
    @classmethod
    def _override_sections(cls, value):
        for name, sections in value.items():
            unknown = sorted(set(sections) - set(OVERRIDABLE_SECTIONS))
            if unknown:
                raise ValueError(f"{name} may override only {', '.join(OVERRIDABLE_SECTIONS)}; got {unknown}")
        return value


class ScenarioConfig(StrictModel):
    schema_version: Literal[1] = SCHEMA_VERSION
    seed: int = Field(DEFAULT_SEED, ge=0, lt=2**64)
    duration_s: float = Field(120.0, gt=0)
    topology: TopologySettings = TopologySettings()
    nodes: NodeSettings = NodeSettings()
    error: ErrorSettings = ErrorSettings()
    mobility: MobilitySettings = MobilitySettings()
    video: VideoSettings = VideoSettings()
    transport: TransportSettings = TransportSettings()
    experiment: ExperimentSettings = ExperimentSettings()

    @property
    def duration(self) -> SimTime:
        return SimTime.from_seconds(self.duration_s)

    def with_updates(self, **sections: Dict[str, Any]) -> "ScenarioConfig":
        """Copy with some fields of some sections replaced (validated again)."""
        data = self.model_dump(mode="json")
        for section, values in sections.items():
            if isinstance(values, dict):
                data[section] = {**data[section], **values}
            else:
                data[section] = values
        return ScenarioConfig.model_validate(data)

    @model_validator(mode="after")
    def _overrides_validate(self):
        for name in self.experiment.overrides:
            try:
                self.for_experiment(name)
            except ValidationError as exc:
                problems = "; ".join(f"{'.'.join(str(p) for p in e['loc'])}: {e['msg']}" for e in exc.errors())
                raise ValueError(f"{name} overrides give an invalid scenario: {problems}") from None
        return self

    def for_experiment(self, name: str) -> "ScenarioConfig":
        """
        The configuration one experiment runs with: its overrides merged in, none left over.

        Raises:
            ValidationError: The merged configuration is invalid
        """
        data = self.model_dump(mode="json")
        sections = data["experiment"].pop("overrides").get(name, {})
        data["experiment"]["overrides"] = {}
        return ScenarioConfig.model_validate(_merge(data, sections))


def _merge(base: Dict[str, Any], updates: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in updates.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


# parsing

def _expand_dotted(mapping: Dict[Any, Any], prefix: str = "") -> Dict[str, Any]:
    expanded: Dict[str, Any] = {}
    for key, value in mapping.items():
        if not isinstance(key, str):
            raise ConfigParseError(f"keys must be strings, got {key!r}", key=f"{prefix}{key}")
        if isinstance(value, dict):
            value = _expand_dotted(value, f"{prefix}{key}.")
        parts = key.split(".")
        target = expanded
        for part in parts[:-1]:
            node = target.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigParseError("key is both a value and a section", key=prefix + key)
            target = node
        leaf = parts[-1]
        if leaf in target:
            if isinstance(target[leaf], dict) and isinstance(value, dict):
                target[leaf] = {**target[leaf], **value}
                continue
            raise ConfigParseError("duplicate key", key=prefix + key)
        target[leaf] = value
    return expanded


def _key_lines(text: str) -> List[Tuple[str, int]]:
    """Every written key as a dotted path with its 1-based line, in file order."""
    root = yaml.compose(text, Loader=yaml.SafeLoader)
    found: List[Tuple[str, int]] = []

    def walk(node, prefix: str):
        if not isinstance(node, yaml.MappingNode):
            return
        for key_node, value_node in node.value:
            path = f"{prefix}{key_node.value}"
            found.append((path, key_node.start_mark.line + 1))
            walk(value_node, path + ".")

    walk(root, "")
    return found


def _line_for(path: str, key_lines: List[Tuple[str, int]]) -> Tuple[str, Optional[int]]:
    for written, line in key_lines:
        if written == path or written.startswith(path + "."):
            return written, line
    return path, None


def _resolve_paths(data: Dict[str, Any], base_dir: Optional[Path]) -> None:
    video = data.get("video")
    if base_dir is None or not isinstance(video, dict):
        return
    for key in ("path", "index_map"):
        value = video.get(key)
        if isinstance(value, str) and not Path(value).is_absolute():
            video[key] = str(base_dir / value)


def load_config_text(text: str, base_dir: Optional[Union[str, Path]] = None) -> ScenarioConfig:
    """
    Parse and validate configuration text.

    Args:
        text (str): YAML document
        base_dir: Directory that relative video paths are resolved against

    Returns:
        ScenarioConfig: Validated configuration

    Raises:
        ConfigParseError: Malformed YAML, non-mapping document, or unknown/duplicate key
        ConfigValidationError: A value violates a constraint
    """
    try:
        raw = yaml.safe_load(text)
        key_lines = _key_lines(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
        raise ConfigParseError(f"malformed YAML: {exc.problem}", line=line) from exc
    except yaml.YAMLError as exc:
        raise ConfigParseError(f"malformed YAML: {exc}") from exc

    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigParseError("configuration must be a mapping of sections")

    data = _expand_dotted(raw)
    _resolve_paths(data, Path(base_dir) if base_dir is not None else None)

    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        errors = exc.errors()
        for error in errors:
            if error["type"] == "extra_forbidden":
                path = ".".join(str(part) for part in error["loc"])
                key, line = _line_for(path, key_lines)
                raise ConfigParseError("unknown configuration key", key=key, line=line) from None
        problems = []
        for error in errors:
            path = ".".join(str(part) for part in error["loc"]) or "<root>"
            problems.append(f"{path}: {error['msg']}")
        raise ConfigValidationError(problems) from None


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    """Load a scenario profile from a YAML file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc.strerror}") from exc
    cfg = load_config_text(text, base_dir=path.parent)
    logger.debug("loaded configuration %s (seed %d)", path, cfg.seed)
    return cfg


def resolve_config_path(ref: Union[str, Path], profile_dir: Optional[Path] = None) -> Path:
    """A config file path, or the name of a checked-in profile."""
    path = Path(ref)
    if path.is_file():
        return path
    if profile_dir is not None:
        filename = path.name if path.suffix in (".yaml", ".yml") else f"{path.name}.yaml"
        candidate = Path(profile_dir) / filename
        if candidate.is_file():
            return candidate
    raise ConfigParseError(f"no configuration file or profile named '{ref}'")


def list_profiles(profile_dir: Path) -> List[str]:
    return sorted(p.stem for p in Path(profile_dir).glob("*.yaml"))
