"""Grid containers and the validity rules shared by the whole pipeline.

Depth values live on dense row-major 2-D grids; multichannel guides on
H x W x C stacks. Both are immutable once constructed so they can be shared
freely across threads. Gaps in depth data are carried by an optional boolean
mask (True = valid); an absent mask means every pixel is valid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonFiniteInput, NonPositiveSource
from .validation import as_float_2d, check_scale


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, order="C", copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class DepthGrid:
    """A 2-D grid of depth values with an optional validity mask.

    ``values`` is float32 by default (float64 for the reference solver).
    Values at masked-out pixels are carried along but never enter any
    computation.
    """

    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        vals = as_float_2d(self.values, "depth grid")
        object.__setattr__(self, "values", _frozen(vals))
        if self.mask is not None:
            m = np.asarray(self.mask)
            if m.shape != vals.shape:
                raise DimensionMismatch(
                    f"mask shape {m.shape} does not match values shape {vals.shape}"
                )
            object.__setattr__(self, "mask", _frozen(m.astype(bool)))
        valid = self.valid_values()
        if not np.isfinite(valid).all():
            raise NonFiniteInput("depth grid has non-finite values at valid pixels")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def valid_values(self) -> np.ndarray:
        """Depth values at valid pixels, as a flat array."""
        if self.mask is None:
            return self.values.ravel()
        return self.values[self.mask]

    def valid_mask(self) -> np.ndarray:
        """Boolean validity plane; all-True when no mask is stored."""
        if self.mask is None:
            return np.ones(self.shape, dtype=bool)
        return self.mask

    def astype(self, dtype) -> "DepthGrid":
        return DepthGrid(self.values.astype(dtype), self.mask)


@dataclass(frozen=True)
class GuideStack:
    """An H x W x C stack of guide channels (RGB or precomputed features).

    Values are stored as floats. Integer-origin data should be passed
    through :func:`normalize_guide` first, which maps it into [0, 1].
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise DimensionMismatch(
                f"guide must be HxW or HxWxC, got shape {arr.shape}"
            )
        if min(arr.shape) < 1:
            raise DimensionMismatch(f"guide has an empty dimension: {arr.shape}")
        if arr.dtype != np.float64:
            arr = arr.astype(np.float32)
        if not np.isfinite(arr).all():
            raise NonFiniteInput("guide contains non-finite values")
        object.__setattr__(self, "values", _frozen(arr))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]


def as_depth_grid(x, name: str = "depth grid") -> DepthGrid:
    """Coerce an array or DepthGrid to a DepthGrid."""
    if isinstance(x, DepthGrid):
        return x
    return DepthGrid(as_float_2d(x, name))


def as_guide_stack(x) -> GuideStack:
    """Coerce an array or GuideStack to a GuideStack (no normalization)."""
    if isinstance(x, GuideStack):
        return x
    return GuideStack(x)


def normalize_guide(raw) -> GuideStack:
    """Map integer-origin guide data into [0, 1]; pass floats through.

    8-bit channels become v/255, 16-bit channels v/65535. Float input is
    returned unchanged, which makes the function idempotent.
    """
    if isinstance(raw, GuideStack):
        return raw
    arr = np.asarray(raw)
    if arr.dtype == np.uint8:
        arr = arr.astype(np.float32) / np.float32(255.0)
    elif arr.dtype == np.uint16:
        arr = arr.astype(np.float32) / np.float32(65535.0)
    elif arr.dtype.kind != "f":
        raise TypeError(
            f"guide dtype {arr.dtype} not supported; expected uint8, uint16 or float"
        )
    return GuideStack(arr)


def validate_pair(source: DepthGrid, guide: GuideStack, s: int) -> None:
    """Check that (source, guide, s) form a consistent super-resolution input.

    Guide dimensions must be exactly s times the source dimensions, valid
    source values must be strictly positive (the adjustment step rescales
    by ratios of block means), and the guide must be finite.
    """
    s = check_scale(s)
    source = as_depth_grid(source, "source")
    guide = as_guide_stack(guide)
    if guide.height != s * source.height or guide.width != s * source.width:
        raise DimensionMismatch(
            f"guide {guide.height}x{guide.width} is not {s}x the "
            f"source {source.height}x{source.width}"
        )
    valid = source.valid_values()
    if valid.size and valid.min() <= 0.0:
        raise NonPositiveSource(
            "source contains non-positive values at valid pixels; "
            "the adjustment step requires positive depths"
        )
