from pathlib import Path

import pytest

from vidnetsim.core.engine import Simulator
from vidnetsim.services.config import ScenarioConfig, load_config
from vidnetsim.video.codec import GopConfig, encode_sequence
from vidnetsim.video.yuv import synthetic_sequence

ROOT = Path(__file__).resolve().parent.parent
PROFILE = ROOT / "data" / "profiles" / "disaster_area.yaml"


@pytest.fixture
def sim():
    return Simulator(seed=1)


@pytest.fixture(scope="session")
def profile_cfg() -> ScenarioConfig:
    return load_config(PROFILE)


@pytest.fixture(scope="session")
def small_frames():
    return synthetic_sequence(64, 48, 10)


@pytest.fixture(scope="session")
def small_bitstream(small_frames):
    return encode_sequence(small_frames, GopConfig(qp=32))


@pytest.fixture(scope="session")
def small_cfg(profile_cfg) -> ScenarioConfig:
    """The calibration profile shrunk to a quick scenario: 3 nodes, 64x48 video."""
    return profile_cfg.with_updates(
        nodes={"wimax_ss": 3},
        video={"width": 64, "height": 48},
        transport={"segment_bytes": 200},
        experiment={"overrides": {}},
        duration_s=10,
    )


TINY_YAML = """\
seed: 3
duration_s: 5
nodes:
  wimax_ss: 2
error:
  unit: packet
video:
  width: 64
  height: 48
  frames: 6
transport:
  pacing: constant_interval
  packet_interval_ms: 10
  segment_bytes: 200
experiment:
  replications: 1
  error_values: [0.001, 0.05]
  node_values: [1, 2]
  speed_values: [80, 100]
  speed_nodes: 2
"""


@pytest.fixture
def tiny_config_file(tmp_path) -> Path:
    path = tmp_path / "tiny.yaml"
    path.write_text(TINY_YAML)
    return path
