"""VNS1 bitstream container and the opaque pass-through loader.

Container layout (little-endian): magic "VNS1", header <u32 width, u32 height,
u8 gop_size, u8 qp, u32 frame_count>, then per frame <u32 index, u8 type (0 = I,
1 = B), u32 payload_len, payload>.
"""

import struct
from pathlib import Path
from typing import List, Union

import pandas as pd

from ..errors import ContainerFormatError
from .codec import Bitstream, EncodedFrame, FrameType, GopConfig

MAGIC = b"VNS1"
_HEADER = struct.Struct("<IIBBI")
_FRAME = struct.Struct("<IBI")
_TYPE_CODES = {FrameType.I: 0, FrameType.B: 1}
_CODE_TYPES = {code: kind for kind, code in _TYPE_CODES.items()}


def pack_bitstream(bs: Bitstream) -> bytes:
    parts = [MAGIC, _HEADER.pack(bs.width, bs.height, bs.gop.gop_size, bs.gop.qp, len(bs))]
    for frame in bs.frames:
        parts.append(_FRAME.pack(frame.index, _TYPE_CODES[frame.frame_type], len(frame.payload)))
        parts.append(frame.payload)
    return b"".join(parts)


def unpack_bitstream(data: bytes, frame_rate: float = 24.0) -> Bitstream:
    """Parse container bytes; the frame rate is not stored and must be supplied."""
    if data[:4] != MAGIC:
        raise ContainerFormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    try:
        width, height, gop_size, qp, count = _HEADER.unpack_from(data, 4)
    except struct.error as exc:
        raise ContainerFormatError("truncated container header") from exc
    gop = GopConfig(gop_size=gop_size, b_frames=gop_size - 1, frame_rate=frame_rate, qp=qp)

    offset = 4 + _HEADER.size
    frames: List[EncodedFrame] = []
    for _ in range(count):
        try:
            index, code, length = _FRAME.unpack_from(data, offset)
        except struct.error as exc:
            raise ContainerFormatError(f"truncated frame record at byte {offset}") from exc
        if code not in _CODE_TYPES:
            raise ContainerFormatError(f"unknown frame type code {code} for frame {index}")
        offset += _FRAME.size
        payload = data[offset:offset + length]
        if len(payload) != length:
            raise ContainerFormatError(f"frame {index} payload truncated")
        offset += length
        kind = _CODE_TYPES[code]
        ref = gop.reference_of(index) if kind is FrameType.B else None
        frames.append(EncodedFrame(index, kind, payload, qp, ref))
    if offset != len(data):
        raise ContainerFormatError(f"{len(data) - offset} trailing bytes after frame {count - 1}")
    try:
        return Bitstream(width, height, gop, tuple(frames))
    except ValueError as exc:
        raise ContainerFormatError(str(exc)) from exc


def write_bitstream(path: Union[str, Path], bs: Bitstream) -> int:
    data = pack_bitstream(bs)
    Path(path).write_bytes(data)
    return len(data)


def read_bitstream(path: Union[str, Path], frame_rate: float = 24.0) -> Bitstream:
    return unpack_bitstream(Path(path).read_bytes(), frame_rate)


def passthrough_bitstream(path: Union[str, Path], index_map_path: Union[str, Path], *,
                          frame_rate: float = 24.0, gop_size: int = 4) -> Bitstream:
    """
    Wrap an external (e.g. HEVC) file as an opaque bitstream for transport-only runs.

    The sidecar holds one `offset,type` line per frame (type I or B, offsets strictly
    increasing from 0); frame k spans [offset_k, offset_{k+1}).

    Returns:
        Bitstream: Marked not decodable; width/height are 0
    """
    data = Path(path).read_bytes()
    try:
        table = pd.read_csv(index_map_path, header=None, names=["offset", "type"], dtype=str,
                            comment="#", skip_blank_lines=True, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        table = pd.DataFrame(columns=["offset", "type"])
    except pd.errors.ParserError as exc:
        raise ContainerFormatError(f"{index_map_path}: {exc}") from exc

    entries = []
    for row_no, (offset, kind) in enumerate(table.itertuples(index=False, name=None), start=1):
        try:
            entries.append((int(offset), FrameType(str(kind).strip().upper())))
        except ValueError as exc:
            raise ContainerFormatError(f"{index_map_path}: entry {row_no}: expected 'offset,type'") from exc

    if not entries:
        raise ContainerFormatError(f"{index_map_path} lists no frames")
    offsets = [offset for offset, _ in entries] + [len(data)]
    if offsets[0] != 0 or any(b <= a for a, b in zip(offsets, offsets[1:])):
        raise ContainerFormatError("frame offsets must start at 0 and increase within the file")

    gop = GopConfig(gop_size=gop_size, b_frames=gop_size - 1, frame_rate=frame_rate, qp=0)
    frames = []
    last_i = 0
    for index, (offset, kind) in enumerate(entries):
        if kind is FrameType.I:
            last_i = index
        frames.append(EncodedFrame(index, kind, data[offset:offsets[index + 1]], 0,
                                   last_i if kind is FrameType.B else None))
    return Bitstream(0, 0, gop, tuple(frames), decodable=False)
