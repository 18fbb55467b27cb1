import pytest

from vidnetsim.errors import ContainerFormatError
from vidnetsim.video.codec import Bitstream, EncodedFrame, FrameType, decode
from vidnetsim.video.container import (pack_bitstream, passthrough_bitstream, read_bitstream,
                                       unpack_bitstream, write_bitstream)


def test_file_round_trip(tmp_path, small_bitstream):
    path = tmp_path / "clip.vns"
    size = write_bitstream(path, small_bitstream)
    assert size == path.stat().st_size
    loaded = read_bitstream(path)
    assert loaded == small_bitstream
    assert all(a.same_pixels(b) for a, b in zip(decode(loaded), decode(small_bitstream)))


def test_bad_magic(small_bitstream):
    data = pack_bitstream(small_bitstream)
    with pytest.raises(ContainerFormatError):
        unpack_bitstream(b"XXXX" + data[4:])


def test_truncated_payload(small_bitstream):
    data = pack_bitstream(small_bitstream)
    with pytest.raises(ContainerFormatError):
        unpack_bitstream(data[:-1])


def test_trailing_bytes(small_bitstream):
    with pytest.raises(ContainerFormatError):
        unpack_bitstream(pack_bitstream(small_bitstream) + b"\x00")


def test_passthrough_slices_the_file(tmp_path):
    stream = tmp_path / "clip.hevc"
    stream.write_bytes(bytes(range(100)))
    index = tmp_path / "clip.idx"
    index.write_text("# offset,type\n0,I\n40,B\n\n55,b\n70,I\n")
    bs = passthrough_bitstream(stream, index)
    assert not bs.decodable
    assert [len(f.payload) for f in bs.frames] == [40, 15, 15, 30]
    assert [f.frame_type for f in bs.frames] == [FrameType.I, FrameType.B, FrameType.B, FrameType.I]
    assert bs.frames[2].ref_index == 0
    assert bs.total_bytes == 100


def test_passthrough_offsets_must_increase(tmp_path):
    stream = tmp_path / "clip.hevc"
    stream.write_bytes(b"\x00" * 10)
    index = tmp_path / "clip.idx"
    index.write_text("0,I\n6,B\n6,B\n")
    with pytest.raises(ContainerFormatError):
        passthrough_bitstream(stream, index)


def test_misplaced_frame_type_is_rejected(small_bitstream):
    frames = list(small_bitstream.frames)
    frames[2] = EncodedFrame(2, FrameType.I, frames[2].payload, frames[2].qp)
    opaque = Bitstream(64, 48, small_bitstream.gop, frames, decodable=False)
    with pytest.raises(ContainerFormatError, match="expected B"):
        unpack_bitstream(pack_bitstream(opaque))


def test_passthrough_rejects_a_bad_entry(tmp_path):
    stream = tmp_path / "clip.hevc"
    stream.write_bytes(b"\x00" * 10)
    index = tmp_path / "clip.idx"
    index.write_text("0,I\n4,X\n")
    with pytest.raises(ContainerFormatError, match="entry 2"):
        passthrough_bitstream(stream, index)
