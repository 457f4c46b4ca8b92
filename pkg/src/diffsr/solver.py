"""The full upsampling loop: diffuse, rescale, repeat.

Each iteration applies one explicit diffusion step followed by the exact
block-mean adjustment, so every intermediate grid already reproduces the
source under downsampling. Iterating drives the grid toward the fixed point
of the combined update; the per-iteration max-abs change is the convergence
diagnostic.

Working precision is float32. ``equilibrium_oracle`` runs the same loop in
float64 with a tight stopping tolerance and serves as the reference answer
on small problems.
"""

from __future__ import annotations

import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .adjustment import consistency_residual
from .coefficients import (
    CoefficientField,
    append_source_channel,
    compute_coefficients,
)
from .errors import EmptySource, NoConvergence, NonPositiveSource, ZeroBlockMean
from .grids import DepthGrid, as_depth_grid, normalize_guide, validate_pair
from .resample import _fill_gaps, bicubic_upsample, nearest_upsample
from .validation import check_kappa, check_lambda, check_scale

DEFAULT_LAMBDA = 0.24
DEFAULT_KAPPA = 0.03
DEFAULT_ITERS = 8000

INIT_MODES = ("constant", "nearest", "bicubic")

# The float64 reference solve iterates to a 1e-13 tolerance, which can take
# hundreds of thousands of iterations; keep it honest by refusing grids
# where that would take minutes.
ORACLE_MAX_PIXELS = 64 * 64
ORACLE_TOL = 1e-13
ORACLE_MAX_ITERS = 1_000_000


@dataclass(frozen=True)
class SolverConfig:
    """Loop parameters, defaulting to the standard operating point."""

    lam: float = DEFAULT_LAMBDA
    kappa: float = DEFAULT_KAPPA
    iterations: int = DEFAULT_ITERS
    init_mode: str = "bicubic"
    residual_tol: float = 0.0
    append_source_channel: bool = False
    log_every: int = 0

    def solve_kwargs(self) -> dict:
        return {
            "lam": self.lam,
            "kappa": self.kappa,
            "iters": self.iterations,
            "init": self.init_mode,
            "residual_tol": self.residual_tol,
            "append_source": self.append_source_channel,
            "log_every": self.log_every,
        }


@dataclass(frozen=True)
class SolveResult:
    """Output grid plus convergence diagnostics.

    ``residual_trace`` holds (iteration, max_abs_update) pairs for the
    logged iterations, always ending with the final iteration.
    ``final_consistency`` is the relative source-consistency residual of
    ``values``; ``residual`` the last max-abs per-pixel update.
    """

    values: np.ndarray
    iterations: int
    residual: float
    stopped_early: bool
    residual_trace: tuple[tuple[int, float], ...]
    final_consistency: float
    wall_time: float

    @property
    def grid(self) -> DepthGrid:
        return DepthGrid(self.values)

    def diagnostics(self) -> dict:
        """JSON-ready summary (everything but the grid itself)."""
        return {
            "iterations_run": self.iterations,
            "residual": self.residual,
            "stopped_early": self.stopped_early,
            "final_consistency": self.final_consistency,
            "wall_time": self.wall_time,
        }


def initialize(source, s: int, mode: str = "bicubic") -> np.ndarray:
    """Fine-grid starting point. Gaps are filled from the nearest valid
    pixel before upsampling, so the result is total.

    constant: every pixel set to the mean valid source value.
    nearest:  nearest-neighbor (block replication) upsampling.
    bicubic:  cubic-convolution upsampling.
    """
    if mode not in INIT_MODES:
        raise ValueError(f"unknown init mode {mode!r}; expected one of {INIT_MODES}")
    source = as_depth_grid(source, "source")
    s = check_scale(s)
    valid = source.valid_values()
    if valid.size == 0:
        raise EmptySource("source has no valid pixels")
    if mode == "constant":
        fill = valid.astype(np.float64).mean()
        return np.full(
            (source.height * s, source.width * s), fill, dtype=source.values.dtype
        )
    if mode == "nearest":
        filled = _fill_gaps(source.values, source.valid_mask())
        return nearest_upsample(DepthGrid(filled), s).values.copy()
    return bicubic_upsample(source, s).values.copy()


def _log_line(done: int, residual: float, consistency: float) -> None:
    print(
        f"iteration {done}  residual {residual:.6e}  consistency {consistency:.3e}",
        file=sys.stderr,
    )


def _run(a, src, src_valid, ch, cv, lam, s, iters, tol, log_every, source=None):
    """Drive the fused kernel, chunked only to record the residual trace."""
    b = np.empty_like(a)
    upd = np.zeros(src.shape, dtype=np.float64)
    flag = np.zeros(1, dtype=np.uint8)
    trace = []
    done_total = 0
    last = math.inf
    stopped = False
    chunk = iters if log_every <= 0 else log_every
    while done_total < iters and not stopped:
        step = min(chunk, iters - done_total)
        done, last, stopped = _kernels.run_loop(
            a, b, src, src_valid, ch, cv, lam, s, step, tol, upd, flag
        )
        if flag[0]:
            raise ZeroBlockMean(
                "a block mean vanished under a valid source pixel during the "
                "solve; the multiplicative adjustment is undefined there"
            )
        if done % 2 == 1:
            a, b = b, a
        done_total += done
        if done > 0:
            trace.append((done_total, float(last)))
            if log_every > 0 and source is not None:
                _log_line(done_total, last, consistency_residual(a, source, s))
    if not trace:
        trace.append((0, math.inf))
    return a, done_total, float(last), bool(stopped), tuple(trace)


def _check_positive(source: DepthGrid) -> None:
    valid = source.valid_values()
    if valid.size and valid.min() <= 0.0:
        raise NonPositiveSource(
            "source contains non-positive values at valid pixels; "
            "the adjustment step requires positive depths"
        )


def solve(
    source,
    guide,
    s: int,
    *,
    lam: float = DEFAULT_LAMBDA,
    kappa: float = DEFAULT_KAPPA,
    iters: int = DEFAULT_ITERS,
    init: str = "bicubic",
    residual_tol: float = 0.0,
    append_source: bool = False,
    coefficients: CoefficientField | None = None,
    log_every: int = 0,
) -> SolveResult:
    """Upsample ``source`` by ``s`` under the guidance of ``guide``.

    ``residual_tol`` > 0 stops early once the max-abs per-pixel update falls
    below it; 0 always runs the full ``iters``. Precomputed ``coefficients``
    bypass guide processing entirely (they cannot be combined with
    ``append_source``, which changes the guide they would be computed from).
    Integer guide arrays are normalized into [0, 1] first; float guides are
    taken as-is.
    """
    t0 = time.perf_counter()
    s = check_scale(s)
    lam = check_lambda(lam)
    if not isinstance(iters, (int, np.integer)) or iters < 0:
        raise ValueError(f"iters must be a non-negative integer, got {iters!r}")
    residual_tol = float(residual_tol)
    if not math.isfinite(residual_tol) or residual_tol < 0.0:
        raise ValueError(f"residual_tol must be finite and >= 0, got {residual_tol}")
    source = as_depth_grid(source, "source")
    if coefficients is None:
        kappa = check_kappa(kappa)
        guide = normalize_guide(guide)
        validate_pair(source, guide, s)
        if append_source:
            guide = append_source_channel(guide, source, s)
        coefficients = compute_coefficients(guide, kappa)
    else:
        if append_source:
            raise ValueError(
                "append_source must be applied before computing coefficients; "
                "pass the guide instead of a precomputed field"
            )
        if coefficients.shape != (source.height * s, source.width * s):
            raise ValueError(
                f"coefficient field {coefficients.shape} does not match the "
                f"{source.height * s}x{source.width * s} target grid"
            )
        _check_positive(source)
    a = initialize(source, s, init)
    ch, cv = coefficients.cast(np.float64)
    a, done, last, stopped, trace = _run(
        a,
        np.ascontiguousarray(source.values),
        np.ascontiguousarray(source.valid_mask().astype(np.uint8)),
        ch,
        cv,
        lam,
        s,
        int(iters),
        residual_tol,
        int(log_every),
        source=source,
    )
    consistency = consistency_residual(a, source, s) if done > 0 else math.inf
    return SolveResult(
        a, done, last, stopped, trace, consistency, time.perf_counter() - t0
    )


def equilibrium_oracle(
    source,
    coefficients: CoefficientField,
    s: int,
    lam: float = DEFAULT_LAMBDA,
    *,
    tol: float = ORACLE_TOL,
    max_iters: int = ORACLE_MAX_ITERS,
    init: str = "bicubic",
) -> np.ndarray:
    """Float64 fixed point of the diffusion-adjustment loop, for small grids.

    Runs until the max-abs update drops below ``tol`` and raises
    NoConvergence at ``max_iters``. The fixed point does not depend on
    ``init``; the parameter exists so tests can demonstrate that.
    """
    s = check_scale(s)
    lam = check_lambda(lam)
    source = as_depth_grid(source, "source").astype(np.float64)
    h, w = coefficients.shape
    if h * w > ORACLE_MAX_PIXELS:
        raise ValueError(
            f"reference solver is limited to {ORACLE_MAX_PIXELS} target pixels, "
            f"got {h}x{w}"
        )
    if (h, w) != (source.height * s, source.width * s):
        raise ValueError(
            f"coefficient field {coefficients.shape} does not match the "
            f"{source.height * s}x{source.width * s} target grid"
        )
    _check_positive(source)
    a = initialize(source, s, init)
    ch, cv = coefficients.cast(np.float64)
    a, done, last, stopped, _ = _run(
        a,
        np.ascontiguousarray(source.values),
        np.ascontiguousarray(source.valid_mask().astype(np.uint8)),
        ch,
        cv,
        lam,
        s,
        int(max_iters),
        float(tol),
        0,
    )
    if not stopped:
        raise NoConvergence(
            f"reference solve still changing by {last:.3e} after {done} iterations "
            f"(tolerance {tol:.1e})"
        )
    return a
