"""Source-consistency adjustment: block rescaling toward the source.

After diffusion, every s-by-s block of the target is multiplied by the ratio
of the source pixel to the block's mean,

    y' = y * up(S / down(y)),

which makes the block-mean downsampling of the result reproduce the source
exactly (up to one float rounding per pixel). Blocks whose source pixel is
invalid keep ratio 1 and are left to diffusion. The step assumes positive
values: a valid block mean at or below 1e-12 raises ZeroBlockMean rather
than dividing by it.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, ZeroBlockMean
from .grids import DepthGrid, as_depth_grid
from .resample import block_downsample, nearest_upsample  # noqa: F401 (re-export)
from .validation import as_float_2d, check_finite, check_scale

# A valid block mean at or below this is treated as vanished, not rescaled.
MEAN_FLOOR = 1e-12


def _block_layout(values, source: DepthGrid, s: int):
    a = np.ascontiguousarray(as_float_2d(values, "target"))
    check_finite(a, "target")
    if a.shape != (source.height * s, source.width * s):
        raise DimensionMismatch(
            f"target {a.shape} is not {s}x the source "
            f"{source.height}x{source.width}"
        )
    return a


def _block_means(a: np.ndarray, h: int, w: int, s: int) -> np.ndarray:
    out = np.zeros((h, w), dtype=np.float64)
    out_valid = np.zeros((h, w), dtype=np.uint8)
    _kernels.block_mean(a, np.ones(a.shape, dtype=np.uint8), s, out, out_valid)
    return out


def block_ratios(values, source, s: int) -> np.ndarray:
    """Per-block correction ratios S / down(y), 1.0 where S is invalid."""
    s = check_scale(s)
    source = as_depth_grid(source, "source")
    a = _block_layout(values, source, s)
    means = _block_means(a, source.height, source.width, s)
    src_valid = source.valid_mask()
    if bool((src_valid & (means <= MEAN_FLOOR)).any()):
        raise ZeroBlockMean(
            "a block mean vanished under a valid source pixel; "
            "the multiplicative adjustment is undefined there"
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = source.values.astype(np.float64) / means
    return np.where(src_valid, ratios, 1.0)


def adjust(values, source, s: int) -> np.ndarray:
    """Rescale each s-by-s block of ``values`` to match the source mean.

    Returns a new array in the dtype of ``values``; each pixel is the
    float64 product y * ratio rounded once to that dtype.
    """
    s = check_scale(s)
    source = as_depth_grid(source, "source")
    a = _block_layout(values, source, s)
    ratios = block_ratios(a, source, s)
    up = np.repeat(np.repeat(ratios, s, axis=0), s, axis=1)
    return (a * up).astype(a.dtype)


def consistency_residual(values, source, s: int) -> float:
    """max |down(y) - S| / |S| over valid source pixels, in float64."""
    s = check_scale(s)
    source = as_depth_grid(source, "source")
    a = _block_layout(values, source, s)
    means = _block_means(a, source.height, source.width, s)
    src_valid = source.valid_mask()
    if not src_valid.any():
        return 0.0
    src = source.values.astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(means - src) / np.abs(src)
    return float(rel[src_valid].max())
