import numpy as np
import pytest

from vidnetsim.errors import ContainerFormatError, EmptyInput
from vidnetsim.video.codec import (Bitstream, EncodedFrame, FrameType, GopConfig, b_residual, bitrate_of,
                                   decode, decode_with_concealment, encode_sequence, quantizer_step,
                                   rle_decode, rle_encode)
from vidnetsim.video.quality import frame_loss_impact, mean_psnr_y, psnr_y
from vidnetsim.video.yuv import RawFrame, synthetic_sequence


def test_gop_layout(small_bitstream):
    types = "".join(frame.frame_type.value for frame in small_bitstream.frames)
    assert types == "IBBBIBBBIB"
    assert [f.ref_index for f in small_bitstream.frames[4:8]] == [None, 4, 4, 4]


def test_b_frames_must_fill_the_gop():
    with pytest.raises(ValueError):
        GopConfig(gop_size=4, b_frames=2)


def test_quantizer_doubles_every_six_qp():
    assert quantizer_step(4) == 1.0
    assert quantizer_step(22) == 8.0
    assert quantizer_step(28) == pytest.approx(2 * quantizer_step(22))


def test_constant_colour_has_zero_residual():
    frames = [RawFrame.filled(64, 48, 128, 128, 128) for _ in range(4)]
    assert all(not plane.any() for plane in b_residual(frames[1], frames[0]))
    bs = encode_sequence(frames, GopConfig(qp=22))
    assert all(f.same_pixels(frames[0]) for f in decode(bs))
    assert len(bs.frames[1].payload) < 100


def test_lossless_at_unit_step(small_frames):
    bs = encode_sequence(small_frames, GopConfig(qp=4))
    assert all(a.same_pixels(b) for a, b in zip(small_frames, decode(bs)))


def test_higher_qp_means_fewer_bytes_and_lower_psnr(small_frames):
    sizes, scores = [], []
    for qp in (12, 22, 32, 42):
        bs = encode_sequence(small_frames, GopConfig(qp=qp))
        sizes.append(bs.total_bytes)
        scores.append(mean_psnr_y(small_frames, decode(bs)))
    assert sizes == sorted(sizes, reverse=True)
    assert scores == sorted(scores, reverse=True)


@pytest.mark.parametrize("width,height", [(832, 480), (1920, 720), (1280, 720), (2650, 1600)])
def test_qp37_never_costs_more_than_qp22(width, height):
    frames = synthetic_sequence(width, height, 2)
    coarse = encode_sequence(frames, GopConfig(qp=37))
    fine = encode_sequence(frames, GopConfig(qp=22))
    assert coarse.total_bytes <= fine.total_bytes


def test_rle_record_layout():
    levels = np.array([0] * 300 + [5, 5, -3])
    payload = rle_encode(levels)
    # 300 zeros split into runs of 255 and 45
    assert payload[0] == 1
    assert int.from_bytes(payload[1:5], "little") == 4
    decoded, end = rle_decode(payload, 0, levels.size)
    assert end == len(payload)
    assert np.array_equal(decoded, levels)


def test_rle_switches_to_wide_symbols():
    levels = np.array([1000, -1000, 0])
    payload = rle_encode(levels)
    assert payload[0] == 2
    assert np.array_equal(rle_decode(payload, 0, 3)[0], levels)


def test_rle_rejects_a_wrong_sample_count():
    with pytest.raises(ContainerFormatError):
        rle_decode(rle_encode(np.zeros(10, dtype=np.int32)), 0, 11)


def test_lost_b_frame_only_affects_itself(small_frames, small_bitstream):
    clean = decode(small_bitstream)
    concealed = decode_with_concealment(small_bitstream, {5})
    assert concealed[5].same_pixels(clean[4])
    for index in set(range(10)) - {5}:
        assert concealed[index].same_pixels(clean[index])


def test_lost_i_frame_damages_its_gop(small_bitstream):
    clean = decode(small_bitstream)
    concealed = decode_with_concealment(small_bitstream, {4})
    assert concealed[4].same_pixels(clean[3])
    for index in (0, 1, 2, 3, 8, 9):
        assert concealed[index].same_pixels(clean[index])
    assert not concealed[5].same_pixels(clean[5])


def test_i_frame_loss_costs_more_than_b_frame_loss(small_frames, small_bitstream):
    i_loss = frame_loss_impact(small_frames, small_bitstream, {4})
    b_loss = frame_loss_impact(small_frames, small_bitstream, {5})
    assert i_loss > b_loss > 0


@pytest.mark.parametrize("qp", [22, 27, 32, 37])
def test_every_i_frame_loss_outweighs_every_b_frame_loss(small_frames, qp):
    bs = encode_sequence(small_frames, GopConfig(qp=qp))
    impact = {f.index: frame_loss_impact(small_frames, bs, {f.index}) for f in bs.frames}
    i_costs = [impact[f.index] for f in bs.frames if f.frame_type is FrameType.I]
    b_costs = [impact[f.index] for f in bs.frames if f.frame_type is FrameType.B]
    assert len(i_costs) == 3 and len(b_costs) == 7
    assert min(i_costs) > max(b_costs)


def test_leading_loss_shows_grey(small_bitstream):
    concealed = decode_with_concealment(small_bitstream, {0, 1})
    grey = RawFrame.filled(64, 48)
    assert concealed[0].same_pixels(grey)
    assert concealed[1].same_pixels(grey)
    assert len(concealed) == len(small_bitstream)


def test_lost_indices_must_exist(small_bitstream):
    with pytest.raises(ValueError):
        decode_with_concealment(small_bitstream, {10})


def test_opaque_stream_cannot_be_decoded(small_bitstream):
    opaque = Bitstream(0, 0, small_bitstream.gop, small_bitstream.frames, decodable=False)
    with pytest.raises(ContainerFormatError):
        decode(opaque)


def test_bitrate_of_fixed_size_frames():
    gop = GopConfig(gop_size=4, b_frames=3, frame_rate=24.0)
    frames = tuple(
        EncodedFrame(i, gop.frame_type(i), b"\x00" * 1500, 32,
                     gop.reference_of(i) if gop.frame_type(i) is FrameType.B else None)
        for i in range(24)
    )
    assert bitrate_of(Bitstream(64, 48, gop, frames)) == pytest.approx(288_000)


def test_bitrate_of_an_empty_stream():
    with pytest.raises(EmptyInput):
        bitrate_of(Bitstream(64, 48, GopConfig(), ()))


def test_dropped_payloads_lower_the_bitrate(small_bitstream):
    thinned = small_bitstream.with_payloads_dropped({0, 4})
    assert thinned.frames[0].payload == b""
    assert bitrate_of(thinned) < bitrate_of(small_bitstream)


def test_encoding_needs_frames():
    with pytest.raises(EmptyInput):
        encode_sequence([], GopConfig())


def test_synthetic_clip_survives_the_codec():
    frames = synthetic_sequence(64, 48, 4)
    bs = encode_sequence(frames, GopConfig(qp=22))
    assert psnr_y(frames[0], decode(bs)[0]) > 30


def test_bitstream_enforces_the_gop_layout(small_bitstream):
    frames = list(small_bitstream.frames)
    frames[1] = EncodedFrame(1, FrameType.I, frames[1].payload, 32)
    with pytest.raises(ValueError, match="expected B"):
        Bitstream(64, 48, small_bitstream.gop, frames)
    frames[1] = EncodedFrame(1, FrameType.B, frames[1].payload, 32, ref_index=4)
    with pytest.raises(ValueError, match="references"):
        Bitstream(64, 48, small_bitstream.gop, frames)
