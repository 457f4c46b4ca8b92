"""Guided depth super-resolution by constrained anisotropic diffusion.

The public surface re-exports from the submodules lazily (PEP 562) so that
lightweight entry points, the command line in particular, can configure the
process (thread count, logging) before the compiled kernels are imported.
"""

from __future__ import annotations

__version__ = "0.1.0"

_EXPORTS = {
    # grids
    "DepthGrid": "grids",
    "GuideStack": "grids",
    "as_depth_grid": "grids",
    "as_guide_stack": "grids",
    "normalize_guide": "grids",
    "validate_pair": "grids",
    # coefficients
    "CoefficientField": "coefficients",
    "compute_coefficients": "coefficients",
    "append_source_channel": "coefficients",
    "uniform_coefficients": "coefficients",
    # diffusion
    "diffusion_step": "diffusion",
    "diffuse": "diffusion",
    "dirichlet_energy": "diffusion",
    # adjustment and resampling
    "adjust": "adjustment",
    "block_ratios": "adjustment",
    "consistency_residual": "adjustment",
    "block_downsample": "resample",
    "nearest_upsample": "resample",
    "bicubic_upsample": "resample",
    # solver
    "SolverConfig": "solver",
    "SolveResult": "solver",
    "initialize": "solver",
    "solve": "solver",
    "equilibrium_oracle": "solver",
    "DEFAULT_LAMBDA": "solver",
    "DEFAULT_KAPPA": "solver",
    "DEFAULT_ITERS": "solver",
    # estimator
    "DepthUpsampler": "estimator",
    # metrics and benchmark
    "EvalReport": "metrics",
    "compute_metrics": "metrics",
    "make_lowres": "metrics",
    "run_benchmark": "metrics",
    # io
    "read_depth": "io_formats",
    "write_depth": "io_formats",
    "read_guide": "io_formats",
    "write_feature_stack": "io_formats",
    "read_mask": "io_formats",
    # errors
    "DiffSRError": "errors",
    "DimensionMismatch": "errors",
    "NonFiniteInput": "errors",
    "NonPositiveSource": "errors",
    "InvalidKappa": "errors",
    "InvalidLambda": "errors",
    "ZeroBlockMean": "errors",
    "EmptySource": "errors",
    "NoValidPixels": "errors",
    "NoConvergence": "errors",
    "UnsupportedFormat": "errors",
    "CorruptFile": "errors",
    "OutOfRange": "errors",
    "IoFailure": "errors",
}

__all__ = ["__version__", *_EXPORTS]


def __getattr__(name: str):
    module_name = _EXPORTS.get(name)
    if module_name is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    from importlib import import_module

    value = getattr(import_module(f".{module_name}", __name__), name)
    globals()[name] = value  # cache for subsequent lookups
    return value


def __dir__():
    return sorted(__all__)
