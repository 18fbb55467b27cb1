"""Raw planar 4:2:0 frames: file I/O and the synthetic test sequence."""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from ..errors import DimensionMismatch, EmptyInput


def frame_size_bytes(width: int, height: int) -> int:
    return width * height * 3 // 2


@dataclass(frozen=True, eq=False)
class RawFrame:
    width: int
    height: int
    y_plane: np.ndarray
    u_plane: np.ndarray
    v_plane: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.width % 2 or self.height % 2:
            raise ValueError(f"frame dimensions must be positive and even, got {self.width}x{self.height}")
        chroma = (self.height // 2, self.width // 2)
        for name, plane, shape in (("y", self.y_plane, (self.height, self.width)),
                                   ("u", self.u_plane, chroma), ("v", self.v_plane, chroma)):
            if plane.shape != shape:
                raise DimensionMismatch(f"{name} plane is {plane.shape}, expected {shape}")
            if plane.dtype != np.uint8:
                raise TypeError(f"{name} plane must be uint8, got {plane.dtype}")

    @property
    def planes(self):
        return (self.y_plane, self.u_plane, self.v_plane)

    @property
    def dimensions(self):
        return (self.width, self.height)

    @classmethod
    def filled(cls, width: int, height: int, y: int = 128, u: int = 128, v: int = 128) -> "RawFrame":
        return cls(width, height,
                   np.full((height, width), y, dtype=np.uint8),
                   np.full((height // 2, width // 2), u, dtype=np.uint8),
                   np.full((height // 2, width // 2), v, dtype=np.uint8))

    @classmethod
    def from_bytes(cls, data: bytes, width: int, height: int) -> "RawFrame":
        if len(data) != frame_size_bytes(width, height):
            raise DimensionMismatch(
                f"{len(data)} bytes do not hold one {width}x{height} 4:2:0 frame"
            )
        buffer = np.frombuffer(data, dtype=np.uint8)
        luma = width * height
        chroma = luma // 4
        return cls(width, height,
                   buffer[:luma].reshape(height, width).copy(),
                   buffer[luma:luma + chroma].reshape(height // 2, width // 2).copy(),
                   buffer[luma + chroma:].reshape(height // 2, width // 2).copy())

    def to_bytes(self) -> bytes:
        return b"".join(plane.tobytes() for plane in self.planes)

    def same_pixels(self, other: "RawFrame") -> bool:
        return self.dimensions == other.dimensions and all(
            np.array_equal(a, b) for a, b in zip(self.planes, other.planes)
        )


def check_same_dimensions(frames: Sequence[RawFrame]) -> None:
    if not frames:
        raise EmptyInput("no frames")
    first = frames[0].dimensions
    for index, frame in enumerate(frames):
        if frame.dimensions != first:
            raise DimensionMismatch(f"frame {index} is {frame.dimensions}, frame 0 is {first}")


def read_yuv(path: Union[str, Path], width: int, height: int,
             frames: Optional[int] = None) -> List[RawFrame]:
    """
    Read frame-sequential planar 4:2:0 (Y, U, V per frame) from a raw .yuv file.

    Args:
        path: Raw file
        width, height: Frame dimensions (even)
        frames: Number of frames to read; all complete frames when None

    Returns:
        List[RawFrame]: Frames in file order
    """
    data = Path(path).read_bytes()
    size = frame_size_bytes(width, height)
    available = len(data) // size
    count = available if frames is None else min(frames, available)
    if count == 0:
        raise EmptyInput(f"{path} holds no complete {width}x{height} frame")
    return [RawFrame.from_bytes(data[i * size:(i + 1) * size], width, height) for i in range(count)]


def write_yuv(path: Union[str, Path], frames: Sequence[RawFrame]) -> None:
    check_same_dimensions(frames)
    with open(path, "wb") as handle:
        for frame in frames:
            handle.write(frame.to_bytes())


def synthetic_sequence(width: int, height: int, frames: int, *,
                       motion: int = 8, slope: float = 0.45) -> List[RawFrame]:
    """
    Moving-gradient test sequence.

    Luma is a diagonal sawtooth ramp (`slope` levels per pixel, wrapping at 256) that
    travels `motion` pixels per frame, with a bright rectangle moving twice as fast
    horizontally. U is a static horizontal ramp, V is flat.
    """
    if frames <= 0:
        raise EmptyInput("a synthetic sequence needs at least one frame")
    if width % 2 or height % 2 or width < 8 or height < 8:
        raise ValueError(f"synthetic frames need even dimensions of at least 8, got {width}x{height}")

    rows, cols = np.mgrid[0:height, 0:width]
    diagonal = (rows + cols).astype(np.float64)
    rect_w, rect_h = width // 4, height // 4
    u_plane = (96 + 64 * np.arange(width // 2) / (width // 2)).astype(np.uint8)
    u_plane = np.broadcast_to(u_plane, (height // 2, width // 2)).copy()
    v_plane = np.full((height // 2, width // 2), 128, dtype=np.uint8)

    sequence = []
    for t in range(frames):
        luma = np.floor(np.mod(slope * (diagonal - motion * t), 256.0)).astype(np.uint8)
        x0 = (width // 8 + 2 * motion * t) % (width - rect_w)
        y0 = (height // 4 + motion * t) % (height - rect_h)
        luma[y0:y0 + rect_h, x0:x0 + rect_w] = 235
        sequence.append(RawFrame(width, height, luma, u_plane.copy(), v_plane.copy()))
    return sequence
