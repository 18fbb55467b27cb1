import numpy as np
import pytest

from vidnetsim.errors import DimensionMismatch, EmptyInput
from vidnetsim.video.yuv import RawFrame, frame_size_bytes, read_yuv, synthetic_sequence, write_yuv


def test_frame_size_of_a_4_2_0_frame():
    assert frame_size_bytes(832, 480) == 599_040
    assert frame_size_bytes(1920, 720) == 2_073_600


def test_odd_dimensions_are_rejected():
    with pytest.raises(ValueError):
        RawFrame.filled(63, 48)


def test_plane_shape_must_match():
    y = np.zeros((48, 64), dtype=np.uint8)
    small = np.zeros((24, 31), dtype=np.uint8)
    with pytest.raises(DimensionMismatch):
        RawFrame(64, 48, y, small, small)


def test_file_round_trip(tmp_path, small_frames):
    path = tmp_path / "clip.yuv"
    write_yuv(path, small_frames)
    assert path.stat().st_size == 10 * frame_size_bytes(64, 48)
    loaded = read_yuv(path, 64, 48)
    assert len(loaded) == 10
    assert all(a.same_pixels(b) for a, b in zip(small_frames, loaded))
    assert len(read_yuv(path, 64, 48, frames=3)) == 3


def test_partial_trailing_frame_is_ignored(tmp_path, small_frames):
    path = tmp_path / "clip.yuv"
    path.write_bytes(small_frames[0].to_bytes() + b"\x00" * 100)
    assert len(read_yuv(path, 64, 48)) == 1


def test_file_without_a_complete_frame(tmp_path):
    path = tmp_path / "short.yuv"
    path.write_bytes(b"\x00" * 100)
    with pytest.raises(EmptyInput):
        read_yuv(path, 64, 48)


def test_write_rejects_mixed_dimensions(tmp_path):
    with pytest.raises(DimensionMismatch):
        write_yuv(tmp_path / "mixed.yuv", [RawFrame.filled(64, 48), RawFrame.filled(32, 24)])


def test_synthetic_sequence_moves():
    frames = synthetic_sequence(64, 48, 3)
    assert [f.dimensions for f in frames] == [(64, 48)] * 3
    assert not frames[0].same_pixels(frames[1])
    assert np.array_equal(frames[0].u_plane, frames[2].u_plane)
    assert (frames[0].v_plane == 128).all()
    assert (frames[0].y_plane == 235).sum() >= 16 * 12


def test_synthetic_sequence_is_deterministic():
    first, second = synthetic_sequence(32, 16, 4), synthetic_sequence(32, 16, 4)
    assert all(a.same_pixels(b) for a, b in zip(first, second))


def test_synthetic_sequence_needs_frames():
    with pytest.raises(EmptyInput):
        synthetic_sequence(64, 48, 0)
