"""Input validation helpers shared across the package.

These mirror the role of ``sklearn.utils.validation``: small functions that
coerce user input into canonical form and raise typed errors early.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatch, InvalidKappa, InvalidLambda, NonFiniteInput

# Explicit 4-neighborhood stability bound for the diffusion update.
LAMBDA_MAX = 0.25


def check_scale(s) -> int:
    """Validate an integer upsampling factor, returning it as ``int``."""
    if isinstance(s, bool) or not isinstance(s, (int, np.integer)):
        raise DimensionMismatch(f"scale factor must be an integer, got {s!r}")
    s = int(s)
    if s < 1:
        raise DimensionMismatch(f"scale factor must be >= 1, got {s}")
    return s


def check_divisible(shape: tuple[int, int], s: int) -> None:
    """Require both grid dimensions to be integer multiples of ``s``."""
    h, w = shape
    if h % s or w % s:
        raise DimensionMismatch(
            f"grid shape {h}x{w} is not divisible by scale factor {s}"
        )


def check_lambda(lam) -> float:
    """Validate the diffusion update rate: a finite real in (0, 0.25)."""
    lam = float(lam)
    if not math.isfinite(lam) or not 0.0 < lam < LAMBDA_MAX:
        raise InvalidLambda(
            f"update rate must lie in (0, {LAMBDA_MAX}) for 4-neighbor stability, "
            f"got {lam}"
        )
    return lam


def check_kappa(kappa) -> float:
    """Validate the gradient-sensitivity parameter: a finite real > 0."""
    kappa = float(kappa)
    if not math.isfinite(kappa) or kappa <= 0.0:
        raise InvalidKappa(f"kappa must be a finite positive number, got {kappa}")
    return kappa


def check_finite(values: np.ndarray, name: str = "input") -> None:
    """Raise NonFiniteInput if ``values`` contains NaN or infinity."""
    if not np.isfinite(values).all():
        raise NonFiniteInput(f"{name} contains non-finite values")


def as_float_2d(values, name: str = "grid") -> np.ndarray:
    """Coerce to a 2-D float array (float32 unless already float64)."""
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"{name} must have positive dimensions")
    if arr.dtype != np.float64:
        arr = arr.astype(np.float32)
    return arr
