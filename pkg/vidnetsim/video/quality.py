"""Luma PSNR and loss-impact helpers."""

from typing import AbstractSet, Sequence

import numpy as np

from ..errors import DimensionMismatch, EmptyInput
from .codec import Bitstream, decode, decode_with_concealment
from .yuv import RawFrame

PSNR_CAP_DB = 99.0
PEAK = 255.0


def psnr_y(reference: RawFrame, reconstructed: RawFrame) -> float:
    """10·log10(255² / MSE) over the Y plane, capped at 99 dB."""
    if reference.dimensions != reconstructed.dimensions:
        raise DimensionMismatch(f"{reference.dimensions} vs {reconstructed.dimensions}")
    diff = reference.y_plane.astype(np.float64) - reconstructed.y_plane.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(PEAK * PEAK / mse))


def psnr_per_frame(references: Sequence[RawFrame], reconstructed: Sequence[RawFrame]) -> list:
    if len(references) != len(reconstructed):
        raise DimensionMismatch(f"{len(references)} reference frames vs {len(reconstructed)} reconstructed")
    if not references:
        raise EmptyInput("no frames to score")
    return [psnr_y(a, b) for a, b in zip(references, reconstructed)]


def mean_psnr_y(references: Sequence[RawFrame], reconstructed: Sequence[RawFrame]) -> float:
    return float(np.mean(psnr_per_frame(references, reconstructed)))


def frame_loss_impact(references: Sequence[RawFrame], bs: Bitstream, lost: AbstractSet[int]) -> float:
    """Mean Y-PSNR lost (dB) by concealing `lost` instead of decoding everything."""
    clean = mean_psnr_y(references, decode(bs))
    return clean - mean_psnr_y(references, decode_with_concealment(bs, lost))
