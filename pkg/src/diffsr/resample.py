"""Resampling primitives: block-mean downsampling and two upsamplers.

The downsampler here is the one the consistency adjustment inverts, so its
arithmetic (row-major float64 accumulation per block) is shared with the
solver kernels rather than reimplemented ad hoc.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import distance_transform_edt

from ._kernels import block_mean as _block_mean_kernel
from .errors import EmptySource
from .grids import DepthGrid, as_depth_grid
from .validation import check_divisible, check_scale


def block_downsample(grid, s: int) -> DepthGrid:
    """Mean over each s-by-s block, restricted to valid pixels.

    A block with no valid pixel downsamples to an invalid pixel. Grid
    dimensions must be divisible by ``s``.
    """
    grid = as_depth_grid(grid)
    s = check_scale(s)
    check_divisible(grid.shape, s)
    if s == 1:
        return grid
    h, w = grid.height // s, grid.width // s
    out = np.zeros((h, w), dtype=np.float64)
    out_valid = np.zeros((h, w), dtype=np.uint8)
    _block_mean_kernel(
        grid.values.astype(np.float64),
        grid.valid_mask().astype(np.uint8),
        s,
        out,
        out_valid,
    )
    return DepthGrid(out.astype(grid.values.dtype), out_valid.astype(bool))


def nearest_upsample(grid, s: int) -> DepthGrid:
    """Replicate every pixel over an s-by-s block; the mask rides along."""
    grid = as_depth_grid(grid)
    s = check_scale(s)
    if s == 1:
        return grid
    values = np.repeat(np.repeat(grid.values, s, axis=0), s, axis=1)
    mask = grid.mask
    if mask is not None:
        mask = np.repeat(np.repeat(mask, s, axis=0), s, axis=1)
    return DepthGrid(values, mask)


def _keys_weight(t: np.ndarray) -> np.ndarray:
    # Keys cubic convolution kernel with a = -0.5.
    t = np.abs(t)
    w = np.zeros_like(t)
    near = t <= 1.0
    far = (t > 1.0) & (t < 2.0)
    tn = t[near]
    tf = t[far]
    w[near] = (1.5 * tn - 2.5) * tn * tn + 1.0
    w[far] = -0.5 * (((tf - 5.0) * tf + 8.0) * tf - 4.0)
    return w


def _axis_weights(n_in: int, s: int) -> np.ndarray:
    """Dense (n_in*s, n_in) interpolation matrix, edge-clamped taps."""
    x = (np.arange(n_in * s, dtype=np.float64) + 0.5) / s - 0.5
    base = np.floor(x).astype(np.int64)
    mat = np.zeros((n_in * s, n_in), dtype=np.float64)
    rows = np.arange(n_in * s)
    for k in range(-1, 3):
        tap = base + k
        w = _keys_weight(x - tap)
        np.add.at(mat, (rows, np.clip(tap, 0, n_in - 1)), w)
    return mat


def _fill_gaps(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Replace invalid pixels with their nearest valid neighbor's value."""
    if mask.all():
        return values
    idx = distance_transform_edt(~mask, return_distances=False, return_indices=True)
    return values[tuple(idx)]


def bicubic_upsample(grid, s: int) -> DepthGrid:
    """Cubic-convolution upsampling (a = -0.5), half-pixel aligned.

    Gaps are pre-filled from the nearest valid pixel so the interpolation
    is total; the result is fully valid. The grid must contain at least one
    valid pixel.
    """
    grid = as_depth_grid(grid)
    s = check_scale(s)
    if grid.valid_values().size == 0:
        raise EmptySource("cannot interpolate a grid with no valid pixels")
    filled = _fill_gaps(grid.values.astype(np.float64), grid.valid_mask())
    if s == 1:
        out = filled
    else:
        wr = _axis_weights(grid.height, s)
        wc = _axis_weights(grid.width, s)
        out = wr @ filled @ wc.T
    return DepthGrid(out.astype(grid.values.dtype), np.ones(out.shape, dtype=bool))
