"""Per-edge diffusion coefficients derived from the guide.

Coefficients are computed once, before the loop starts, and frozen. Each
undirected 4-neighbor edge stores a single value

    c = kappa^2 / (kappa^2 + ||g_p - g_n||^2)

where the squared norm runs over all guide channels, so symmetry holds by
construction and every coefficient lies in (0, 1], hitting 1 exactly when
the two guide pixels are identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySource
from .grids import GuideStack, as_depth_grid, as_guide_stack, validate_pair
from .resample import nearest_upsample
from .validation import check_kappa, check_scale


@dataclass(frozen=True)
class CoefficientField:
    """Frozen per-edge coefficients: one horizontal and one vertical plane.

    ``c_h[i, j]`` weights the edge (i, j)-(i, j+1); ``c_v[i, j]`` the edge
    (i, j)-(i+1, j). Stored in float64; solvers cast once to their working
    precision.
    """

    c_h: np.ndarray
    c_v: np.ndarray
    kappa: float

    def __post_init__(self):
        ch = np.ascontiguousarray(self.c_h, dtype=np.float64)
        cv = np.ascontiguousarray(self.c_v, dtype=np.float64)
        if ch.ndim != 2 or cv.ndim != 2:
            raise ValueError("coefficient planes must be 2-D")
        h = ch.shape[0]
        w = cv.shape[1]
        if ch.shape != (h, w - 1) or cv.shape != (h - 1, w):
            raise ValueError(
                f"inconsistent coefficient planes: c_h {ch.shape}, c_v {cv.shape}"
            )
        for plane in (ch, cv):
            plane.flags.writeable = False
        object.__setattr__(self, "c_h", ch)
        object.__setattr__(self, "c_v", cv)
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def height(self) -> int:
        return self.c_h.shape[0]

    @property
    def width(self) -> int:
        return self.c_v.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def cast(self, dtype) -> tuple[np.ndarray, np.ndarray]:
        """Coefficient planes in the requested working dtype."""
        return self.c_h.astype(dtype), self.c_v.astype(dtype)


def uniform_coefficients(shape: tuple[int, int], value: float = 1.0) -> CoefficientField:
    """A constant coefficient field (c = value on every edge)."""
    h, w = shape
    return CoefficientField(
        np.full((h, w - 1), value), np.full((h - 1, w), value), kappa=1.0
    )


def compute_coefficients(guide, kappa: float) -> CoefficientField:
    """Evaluate the coefficient function on every 4-neighbor edge of the guide."""
    kappa = check_kappa(kappa)
    g = as_guide_stack(guide).values.astype(np.float64)
    k2 = kappa * kappa
    d2h = ((g[:, 1:, :] - g[:, :-1, :]) ** 2).sum(axis=2)
    d2v = ((g[1:, :, :] - g[:-1, :, :]) ** 2).sum(axis=2)
    return CoefficientField(k2 / (k2 + d2h), k2 / (k2 + d2v), kappa=kappa)


def append_source_channel(guide, source, s: int) -> GuideStack:
    """Concatenate the nearest-neighbor upsampled source as an extra channel.

    The channel is normalized by its own maximum valid value, so a constant
    source contributes a constant 1.0 channel. Source gaps are written as 0.
    """
    s = check_scale(s)
    guide = as_guide_stack(guide)
    source = as_depth_grid(source, "source")
    validate_pair(source, guide, s)
    if source.valid_values().size == 0:
        raise EmptySource("source has no valid pixels to build a channel from")
    up = nearest_upsample(source, s)
    peak = float(source.valid_values().max())
    chan = np.where(up.valid_mask(), up.values / peak, 0.0).astype(np.float32)
    return GuideStack(np.dstack([guide.values, chan]))
