"""Scikit-learn style estimator wrapping the diffusion-adjustment solver.

The guide plays the role of training data: ``fit(guide)`` validates it,
normalizes integer channels into [0, 1] and (unless the source channel is
requested, which is only known per-source) freezes the diffusion
coefficients. ``transform(source)`` then upsamples any number of
co-registered low-resolution depth grids against the fitted guide.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .coefficients import compute_coefficients
from .grids import as_depth_grid, normalize_guide, validate_pair
from .solver import (
    DEFAULT_ITERS,
    DEFAULT_KAPPA,
    DEFAULT_LAMBDA,
    INIT_MODES,
    SolveResult,
    solve,
)
from .validation import check_kappa, check_lambda, check_scale


class DepthUpsampler(BaseEstimator):
    """Guided depth super-resolution by iterated diffusion and adjustment.

    Parameters
    ----------
    scale : int
        Upsampling factor; guide dimensions must be scale times the source.
    lam : float
        Diffusion update rate, in (0, 0.25).
    kappa : float
        Gradient sensitivity of the diffusion coefficients.
    iterations : int
        Number of diffusion-adjustment iterations.
    init_mode : {"constant", "nearest", "bicubic"}
        Starting grid for the iteration.
    residual_tol : float
        Early-stop threshold on the max-abs per-iteration update; 0 runs
        all iterations.
    append_source_channel : bool
        Add the normalized, nearest-upsampled source as an extra guide
        channel. Coefficients then depend on the source, so they are
        computed per transform instead of once at fit time.
    log_every : int
        Progress lines to standard error every this many iterations.

    Attributes
    ----------
    guide_ : GuideStack
        The fitted, normalized guide.
    coefficients_ : CoefficientField or None
        Frozen per-edge coefficients; None when append_source_channel is
        set (they are then derived per transform).
    """

    def __init__(
        self,
        scale: int = 8,
        lam: float = DEFAULT_LAMBDA,
        kappa: float = DEFAULT_KAPPA,
        iterations: int = DEFAULT_ITERS,
        init_mode: str = "bicubic",
        residual_tol: float = 0.0,
        append_source_channel: bool = False,
        log_every: int = 0,
    ):
        self.scale = scale
        self.lam = lam
        self.kappa = kappa
        self.iterations = iterations
        self.init_mode = init_mode
        self.residual_tol = residual_tol
        self.append_source_channel = append_source_channel
        self.log_every = log_every

    def fit(self, X, y=None):
        """Validate parameters and freeze the guide (and, unless the source
        channel is requested, the diffusion coefficients).

        Parameters
        ----------
        X : array-like of shape (H, W) or (H, W, C), or GuideStack
            The high-resolution guide image.
        y : ignored
            Present for scikit-learn API compatibility.
        """
        check_scale(self.scale)
        check_lambda(self.lam)
        check_kappa(self.kappa)
        if self.init_mode not in INIT_MODES:
            raise ValueError(
                f"init_mode must be one of {INIT_MODES}, got {self.init_mode!r}"
            )
        guide = normalize_guide(X)
        self.guide_ = guide
        self.coefficients_ = (
            None
            if self.append_source_channel
            else compute_coefficients(guide, self.kappa)
        )
        return self

    def transform(self, X) -> np.ndarray:
        """Upsample a low-resolution depth grid against the fitted guide.

        Parameters
        ----------
        X : array-like of shape (H/scale, W/scale) or DepthGrid
            The low-resolution source depth.

        Returns
        -------
        ndarray of shape (H, W)
            The super-resolved depth grid.
        """
        return self.solve_result(X).values

    def predict(self, X) -> np.ndarray:
        """Alias of transform: the estimator predicts fine-grid depths."""
        return self.transform(X)

    def solve_result(self, X) -> SolveResult:
        """Like transform, but returns the grid with its diagnostics."""
        check_is_fitted(self, "guide_")
        source = as_depth_grid(X, "source")
        validate_pair(source, self.guide_, self.scale)
        if self.coefficients_ is not None:
            return solve(
                source,
                None,
                self.scale,
                lam=self.lam,
                iters=self.iterations,
                init=self.init_mode,
                residual_tol=self.residual_tol,
                coefficients=self.coefficients_,
                log_every=self.log_every,
            )
        return solve(
            source,
            self.guide_,
            self.scale,
            lam=self.lam,
            kappa=self.kappa,
            iters=self.iterations,
            init=self.init_mode,
            residual_tol=self.residual_tol,
            append_source=self.append_source_channel,
            log_every=self.log_every,
        )
