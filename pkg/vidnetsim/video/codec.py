"""Toy GOP codec.

Every gop_size-th frame is intra coded; the frames between are B frames holding the
quantized residual against the most recent decoded I frame (no B-to-B prediction).
Levels are run-length coded per plane. Lost frames are concealed by repeating the
previously displayed frame.
"""

import logging
import struct
from dataclasses import dataclass
from enum import Enum
from typing import AbstractSet, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ContainerFormatError, DimensionMismatch, EmptyInput
from .yuv import RawFrame, check_same_dimensions

logger = logging.getLogger(__name__)

MAX_RUN = 255
GREY = 128
_PLANE_HEADER = struct.Struct("<BI")


class FrameType(str, Enum):
    I = "I"
    B = "B"


@dataclass(frozen=True)
class GopConfig:
    gop_size: int = 4
    b_frames: int = 3
    frame_rate: float = 24.0
    qp: int = 32

    def __post_init__(self):
        if self.gop_size < 1:
            raise ValueError(f"gop_size must be at least 1, got {self.gop_size}")
        if self.b_frames != self.gop_size - 1:
            raise ValueError(f"b_frames must equal gop_size - 1 ({self.gop_size - 1}), got {self.b_frames}")
        if self.frame_rate <= 0:
            raise ValueError(f"frame_rate must be positive, got {self.frame_rate}")
        if not 0 <= self.qp <= 51:
            raise ValueError(f"qp must lie in [0, 51], got {self.qp}")

    def frame_type(self, index: int) -> FrameType:
        return FrameType.I if index % self.gop_size == 0 else FrameType.B

    def reference_of(self, index: int) -> int:
        return index - index % self.gop_size


def quantizer_step(qp: int) -> float:
    return 2.0 ** ((qp - 4) / 6.0)


@dataclass(frozen=True)
class EncodedFrame:
    index: int
    frame_type: FrameType
    payload: bytes
    qp: int
    ref_index: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "frame_type", FrameType(self.frame_type))
        if self.frame_type is FrameType.B and self.ref_index is None:
            raise ValueError(f"B frame {self.index} has no reference index")

    @property
    def size_bits(self) -> int:
        return 8 * len(self.payload)


@dataclass(frozen=True)
class Bitstream:
    width: int
    height: int
    gop: GopConfig
    frames: Tuple[EncodedFrame, ...]
    decodable: bool = True

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        for position, frame in enumerate(self.frames):
            if frame.index != position:
                raise ValueError(f"frame indices must be contiguous from 0; position {position} holds {frame.index}")
            # opaque external streams keep their own GOP layout
            if self.decodable and frame.frame_type is not self.gop.frame_type(position):
                raise ValueError(f"frame {position} is {frame.frame_type.value}, expected "
                                 f"{self.gop.frame_type(position).value} for gop size {self.gop.gop_size}")
            if self.decodable and frame.frame_type is FrameType.B and frame.ref_index != self.gop.reference_of(position):
                raise ValueError(f"B frame {position} references {frame.ref_index}, "
                                 f"expected {self.gop.reference_of(position)}")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def total_bytes(self) -> int:
        return sum(len(frame.payload) for frame in self.frames)

    def with_payloads_dropped(self, lost: AbstractSet[int]) -> "Bitstream":
        """Copy of the stream in which the lost frames carry no payload."""
        frames = tuple(
            EncodedFrame(f.index, f.frame_type, b"", f.qp, f.ref_index) if f.index in lost else f
            for f in self.frames
        )
        return Bitstream(self.width, self.height, self.gop, frames, self.decodable)


# run-length coding of level planes

def rle_encode(levels: np.ndarray) -> bytes:
    """
    Encode an integer array as one plane record.

    Layout: symbol width (1 = int8, 2 = int16), u32 run count, then one uint8 run length
    (1..255) per run, then one value per run.
    """
    flat = np.asarray(levels).ravel()
    if flat.size == 0:
        return _PLANE_HEADER.pack(1, 0)
    starts = np.concatenate(([0], np.flatnonzero(np.diff(flat)) + 1))
    lengths = np.diff(np.concatenate((starts, [flat.size])))
    values = flat[starts]

    chunks = (lengths + MAX_RUN - 1) // MAX_RUN
    run_values = np.repeat(values, chunks)
    run_counts = np.full(run_values.size, MAX_RUN, dtype=np.int64)
    last = np.cumsum(chunks) - 1
    run_counts[last] = lengths - MAX_RUN * (chunks - 1)

    low, high = int(values.min()), int(values.max())
    if -128 <= low and high <= 127:
        width, dtype = 1, "<i1"
    elif -32768 <= low and high <= 32767:
        width, dtype = 2, "<i2"
    else:
        raise ValueError(f"level range [{low}, {high}] does not fit in 16 bits")

    return (_PLANE_HEADER.pack(width, run_values.size)
            + run_counts.astype(np.uint8).tobytes()
            + run_values.astype(dtype).tobytes())


def rle_decode(payload: bytes, offset: int, expected: int) -> Tuple[np.ndarray, int]:
    """Decode one plane record at `offset`; returns (levels, offset after the record)."""
    try:
        width, runs = _PLANE_HEADER.unpack_from(payload, offset)
    except struct.error as exc:
        raise ContainerFormatError(f"truncated plane header at byte {offset}") from exc
    if width not in (1, 2):
        raise ContainerFormatError(f"unknown symbol width {width} at byte {offset}")
    offset += _PLANE_HEADER.size
    end = offset + runs * (1 + width)
    if end > len(payload):
        raise ContainerFormatError(f"plane record overruns the payload ({end} > {len(payload)})")
    counts = np.frombuffer(payload, dtype=np.uint8, count=runs, offset=offset)
    values = np.frombuffer(payload, dtype="<i1" if width == 1 else "<i2", count=runs,
                           offset=offset + runs)
    levels = np.repeat(values.astype(np.int32), counts)
    if levels.size != expected:
        raise ContainerFormatError(f"plane decodes to {levels.size} samples, expected {expected}")
    return levels, end


# plane coding

def _quantize(values: np.ndarray, step: float) -> np.ndarray:
    return np.rint(values / step).astype(np.int32)


def _dequantize(levels: np.ndarray, step: float) -> np.ndarray:
    return np.rint(levels * step).astype(np.int32)


def _reconstruct(levels: np.ndarray, step: float, reference: Optional[np.ndarray]) -> np.ndarray:
    base = 0 if reference is None else reference.astype(np.int32)
    return np.clip(base + _dequantize(levels, step), 0, 255).astype(np.uint8)


def b_residual(frame: RawFrame, reference: RawFrame) -> Tuple[np.ndarray, ...]:
    """Per-plane residual of a B frame against its reference, before quantization."""
    if frame.dimensions != reference.dimensions:
        raise DimensionMismatch(f"{frame.dimensions} vs {reference.dimensions}")
    return tuple(p.astype(np.int32) - r.astype(np.int32) for p, r in zip(frame.planes, reference.planes))


def _encode_planes(planes: Sequence[np.ndarray], reference: Optional[RawFrame],
                   step: float, width: int, height: int) -> Tuple[bytes, RawFrame]:
    records, recon = [], []
    ref_planes = reference.planes if reference is not None else (None, None, None)
    for plane, ref in zip(planes, ref_planes):
        source = plane.astype(np.int32)
        if ref is not None:
            source = source - ref.astype(np.int32)
        levels = _quantize(source, step)
        records.append(rle_encode(levels))
        recon.append(_reconstruct(levels, step, ref))
    return b"".join(records), RawFrame(width, height, *recon)


def _decode_planes(payload: bytes, reference: Optional[RawFrame], step: float,
                   width: int, height: int) -> RawFrame:
    shapes = ((height, width), (height // 2, width // 2), (height // 2, width // 2))
    ref_planes = reference.planes if reference is not None else (None, None, None)
    offset, planes = 0, []
    for shape, ref in zip(shapes, ref_planes):
        levels, offset = rle_decode(payload, offset, shape[0] * shape[1])
        planes.append(_reconstruct(levels.reshape(shape), step, ref))
    if offset != len(payload):
        raise ContainerFormatError(f"{len(payload) - offset} trailing bytes after the last plane")
    return RawFrame(width, height, *planes)


def encode_sequence(frames: Sequence[RawFrame], cfg: GopConfig) -> Bitstream:
    """
    Encode raw frames into a GOP-structured bitstream.

    Args:
        frames: Input frames, all of the same dimensions
        cfg: GOP layout, frame rate and QP

    Returns:
        Bitstream: One EncodedFrame per input frame
    """
    if not frames:
        raise EmptyInput("encode_sequence needs at least one frame")
    check_same_dimensions(frames)
    width, height = frames[0].dimensions
    step = quantizer_step(cfg.qp)

    encoded: List[EncodedFrame] = []
    reference: Optional[RawFrame] = None
    for index, frame in enumerate(frames):
        if cfg.frame_type(index) is FrameType.I:
            payload, reference = _encode_planes(frame.planes, None, step, width, height)
            encoded.append(EncodedFrame(index, FrameType.I, payload, cfg.qp))
        else:
            payload, _ = _encode_planes(frame.planes, reference, step, width, height)
            encoded.append(EncodedFrame(index, FrameType.B, payload, cfg.qp, cfg.reference_of(index)))

    bitstream = Bitstream(width, height, cfg, tuple(encoded))
    logger.debug("encoded %d frames at qp %d: %d bytes", len(encoded), cfg.qp, bitstream.total_bytes)
    return bitstream


def decode_with_concealment(bs: Bitstream, lost: AbstractSet[int]) -> List[RawFrame]:
    """
    Decode a bitstream, concealing the frames in `lost`.

    A lost frame repeats the previously displayed frame (mid-grey when there is none).
    B frames that reference a lost I frame decode against its substitute, so the error
    runs until the next intact I frame. The output always has one frame per input frame.
    """
    if not bs.decodable:
        raise ContainerFormatError("pass-through bitstreams carry opaque payloads and cannot be decoded")
    unknown = set(lost) - set(range(len(bs)))
    if unknown:
        raise ValueError(f"lost frame indices out of range: {sorted(unknown)}")

    output: List[RawFrame] = []
    reference: Optional[RawFrame] = None
    for frame in bs.frames:
        step = quantizer_step(frame.qp)
        if frame.index in lost:
            shown = output[-1] if output else RawFrame.filled(bs.width, bs.height, GREY, GREY, GREY)
            if frame.frame_type is FrameType.I:
                reference = shown
        elif frame.frame_type is FrameType.I:
            shown = reference = _decode_planes(frame.payload, None, step, bs.width, bs.height)
        else:
            if reference is None:
                raise ContainerFormatError(f"B frame {frame.index} precedes any I frame")
            shown = _decode_planes(frame.payload, reference, step, bs.width, bs.height)
        output.append(shown)
    return output


def decode(bs: Bitstream) -> List[RawFrame]:
    return decode_with_concealment(bs, frozenset())


def bitrate_of(bs: Bitstream) -> float:
    """Payload bits per second of playback."""
    if len(bs) == 0:
        raise EmptyInput("bitrate_of needs at least one frame")
    return bs.total_bytes * 8 / (len(bs) / bs.gop.frame_rate)
