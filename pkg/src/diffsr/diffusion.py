"""Explicit guide-weighted diffusion steps.

The update at pixel p is

    y' = y + lam * sum_n c(p, n) * (y_n - y_p)

over the 4-neighborhood, with zero flux across the grid boundary. For
coefficients in (0, 1] the explicit scheme is stable for lam < 1/4: the
update is then a convex combination of p and its neighbors, so values stay
inside the local min/max envelope and the Dirichlet energy decreases.

A grid with a mask diffuses only its valid pixels; invalid ones are held
fixed and exchange no flux, which lets trusted measurements pin the field
while gaps around them are filled in.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .coefficients import CoefficientField
from .errors import DimensionMismatch
from .grids import DepthGrid
from .validation import as_float_2d, check_lambda


def _prepare(values, coefficients: CoefficientField):
    """Split a DepthGrid or array into (work buffer, locked plane)."""
    locked = None
    if isinstance(values, DepthGrid):
        if values.mask is not None:
            locked = ~values.mask
        values = values.values
    # Copy: the double-buffered loop writes both buffers, so aliasing the
    # caller's array would mutate it.
    a = np.array(as_float_2d(values, "grid"), order="C", copy=True)
    if coefficients.shape != a.shape:
        raise DimensionMismatch(
            f"coefficients are for a {coefficients.shape} grid, "
            f"values have shape {a.shape}"
        )
    if locked is None:
        lk = np.zeros(a.shape, dtype=np.uint8)
    else:
        lk = np.ascontiguousarray(locked.astype(np.uint8))
    return a, lk


def diffusion_step(values, coefficients: CoefficientField, lam: float) -> np.ndarray:
    """One explicit diffusion update; returns a new array."""
    lam = check_lambda(lam)
    a, lk = _prepare(values, coefficients)
    ch, cv = coefficients_planes(coefficients)
    b = np.empty_like(a)
    _kernels.diffuse(a, ch, cv, lk, lam, b)
    return b


def diffuse(values, coefficients: CoefficientField, lam: float,
            iters: int) -> np.ndarray:
    """Run ``iters`` diffusion steps with double buffering."""
    lam = check_lambda(lam)
    if not isinstance(iters, (int, np.integer)) or iters < 0:
        raise ValueError(f"iters must be a non-negative integer, got {iters!r}")
    a, lk = _prepare(values, coefficients)
    ch, cv = coefficients_planes(coefficients)
    b = np.empty_like(a)
    for _ in range(int(iters)):
        _kernels.diffuse(a, ch, cv, lk, lam, b)
        a, b = b, a
    return a


def dirichlet_energy(values, coefficients: CoefficientField) -> float:
    """0.5 * sum(c * (y_p - y_n)^2) over 4-neighbor edges whose endpoints
    are both valid. Never increased by a diffusion step."""
    a, lk = _prepare(values, coefficients)
    ch, cv = coefficients_planes(coefficients)
    valid = np.ascontiguousarray((lk == 0).astype(np.uint8))
    return 0.5 * float(_kernels.edge_energy(a.astype(np.float64), ch, cv, valid))


def coefficients_planes(coefficients: CoefficientField):
    """Contiguous float64 (c_h, c_v) planes for the kernels."""
    return (
        np.ascontiguousarray(coefficients.c_h),
        np.ascontiguousarray(coefficients.c_v),
    )
