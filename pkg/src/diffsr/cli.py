"""Command-line interface.

Machine-readable results go to standard output as JSON lines; progress and
warnings go to standard error. Exit codes: 0 success, 1 usage error, 2 data
or validation error.

The heavy modules (compiled kernels included) are imported only after
arguments are parsed, so --threads can cap the kernel thread pool before it
is created.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import DiffSRError


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 for usage problems, not argparse's 2
        raise _UsageError(message)


def _add_solver_flags(p: _Parser) -> None:
    p.add_argument("--iters", type=int, default=8000,
                   help="diffusion-adjustment iterations (default 8000)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.24,
                   help="diffusion update rate, must be < 0.25 (default 0.24)")
    p.add_argument("--kappa", type=float, default=None,
                   help="coefficient gradient sensitivity (default 0.03; "
                        "tuned for guides in [0, 1], set explicitly for "
                        "feature stacks)")
    p.add_argument("--init", choices=("constant", "nearest", "bicubic"),
                   default="bicubic", help="initialization (default bicubic)")
    p.add_argument("--append-source-channel", action="store_true",
                   help="add the upsampled source as an extra guide channel")
    p.add_argument("--residual-tol", type=float, default=0.0,
                   help="early-stop threshold on the max-abs update "
                        "(default 0 = run all iterations)")
    p.add_argument("--log-every", type=int, default=0,
                   help="progress to stderr every N iterations (default 0 = silent)")


def _add_common_flags(p: _Parser) -> None:
    p.add_argument("--threads", type=int, default=None,
                   help="cap worker threads (default: hardware parallelism)")


def build_parser() -> _Parser:
    parser = _Parser(prog="diffsr",
                     description="Guided depth super-resolution by constrained "
                                 "anisotropic diffusion.")
    sub = parser.add_subparsers(dest="cmd", parser_class=_Parser)

    p = sub.add_parser("upsample", help="super-resolve a depth map")
    p.add_argument("--source", required=True, help="low-resolution depth (PFM/PNG)")
    p.add_argument("--guide", required=True, help="guide image (PNG) or stack (DGSF)")
    p.add_argument("--scale", type=int, required=True, help="upsampling factor")
    p.add_argument("--out", required=True, help="output depth path (PFM/PNG)")
    p.add_argument("--mask", default=None, help="extra validity mask for the source")
    _add_solver_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_upsample)

    p = sub.add_parser("eval", help="benchmark against ground truth")
    p.add_argument("--gt", required=True, nargs="+",
                   help="ground-truth depth(s); sources are derived by "
                        "block-mean downsampling")
    p.add_argument("--guide", required=True, nargs="+",
                   help="guide per ground-truth image (one may be shared)")
    p.add_argument("--scale", type=int, required=True, help="upsampling factor")
    p.add_argument("--depth-scale", type=float, default=1.0,
                   help="multiply error metrics into physical units (default 1.0)")
    _add_solver_flags(p)
    _add_common_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("make-lowres", help="block-mean downsample a depth map")
    p.add_argument("--gt", required=True, help="full-resolution depth (PFM/PNG)")
    p.add_argument("--scale", type=int, required=True, help="downsampling factor")
    p.add_argument("--out", required=True, help="output depth path (PFM/PNG)")
    p.add_argument("--mask", default=None, help="extra validity mask")
    _add_common_flags(p)
    p.set_defaults(func=_cmd_make_lowres)

    p = sub.add_parser("baseline", help="bicubic upsampling, no guide")
    p.add_argument("--source", required=True, help="low-resolution depth (PFM/PNG)")
    p.add_argument("--scale", type=int, required=True, help="upsampling factor")
    p.add_argument("--out", required=True, help="output depth path (PFM/PNG)")
    p.add_argument("--mask", default=None, help="extra validity mask for the source")
    _add_common_flags(p)
    p.set_defaults(func=_cmd_baseline)

    return parser


def _apply_threads(threads) -> None:
    if threads is None:
        return
    if threads < 1:
        raise _UsageError(f"--threads must be >= 1, got {threads}")
    if "numba" not in sys.modules:
        os.environ["NUMBA_NUM_THREADS"] = str(threads)
        return
    import numba

    try:
        numba.set_num_threads(threads)
    except ValueError:
        print(
            f"warning: cannot raise thread count to {threads} in this process; "
            f"keeping the current pool",
            file=sys.stderr,
        )


def _emit(obj: dict) -> None:
    print(json.dumps(obj, sort_keys=True))


def _read_source(path, mask_path):
    from . import io_formats as iof
    from .grids import DepthGrid

    grid = iof.read_depth(path)
    if mask_path is not None:
        mask = iof.read_mask(mask_path)
        grid = DepthGrid(grid.values, grid.valid_mask() & mask)
    return grid


def _resolve_kappa(kappa, guide_path) -> float:
    if kappa is not None:
        return kappa
    try:
        with open(guide_path, "rb") as fh:
            is_stack = fh.read(4) == b"DGSF"
    except OSError:
        is_stack = False
    if is_stack:
        print(
            "warning: using default --kappa 0.03 with a feature stack; the "
            "default is tuned for guide values in [0, 1]",
            file=sys.stderr,
        )
    return 0.03


def _cmd_upsample(args) -> int:
    from . import io_formats as iof
    from .solver import solve

    source = _read_source(args.source, args.mask)
    guide = iof.read_guide(args.guide)
    kappa = _resolve_kappa(args.kappa, args.guide)
    result = solve(
        source,
        guide,
        args.scale,
        lam=args.lam,
        kappa=kappa,
        iters=args.iters,
        init=args.init,
        residual_tol=args.residual_tol,
        append_source=args.append_source_channel,
        log_every=args.log_every,
    )
    iof.write_depth(args.out, result.grid)
    _emit({"command": "upsample", "out": args.out, "scale": args.scale,
           **result.diagnostics()})
    return 0


def _scaled_metrics(report, factor: float) -> dict:
    d = report.as_dict()
    d["mae"] *= factor
    d["rmse"] *= factor
    d["mse"] *= factor * factor
    return d


def _cmd_eval(args) -> int:
    from . import io_formats as iof
    from .metrics import run_benchmark
    from .solver import SolverConfig

    if len(args.guide) not in (1, len(args.gt)):
        raise _UsageError(
            f"--guide count ({len(args.guide)}) must be 1 or match "
            f"--gt count ({len(args.gt)})"
        )
    guides = args.guide * len(args.gt) if len(args.guide) == 1 else args.guide
    config = SolverConfig(
        lam=args.lam,
        kappa=_resolve_kappa(args.kappa, guides[0]),
        iterations=args.iters,
        init_mode=args.init,
        residual_tol=args.residual_tol,
        append_source_channel=args.append_source_channel,
        log_every=args.log_every,
    )
    factor = args.depth_scale
    totals: dict[str, dict[str, float]] = {}
    for gt_path, guide_path in zip(args.gt, guides):
        gt = iof.read_depth(gt_path)
        guide = iof.read_guide(guide_path)
        diffusion, bicubic = run_benchmark(gt, guide, args.scale, config)
        line = {
            "image": gt_path,
            "scale": args.scale,
            "diffusion": _scaled_metrics(diffusion, factor),
            "bicubic": _scaled_metrics(bicubic, factor),
        }
        _emit(line)
        for method in ("diffusion", "bicubic"):
            bucket = totals.setdefault(method, {})
            for key, value in line[method].items():
                bucket[key] = bucket.get(key, 0.0) + value
    n = len(args.gt)
    aggregate = {
        "aggregate": True,
        "images": n,
        "scale": args.scale,
        "depth_scale": factor,
        "downsampling": "block_mean",
    }
    for method, bucket in totals.items():
        aggregate[method] = {
            key: (total / n if key != "valid_pixel_count" else total)
            for key, total in bucket.items()
        }
    _emit(aggregate)
    return 0


def _cmd_make_lowres(args) -> int:
    from . import io_formats as iof
    from .metrics import make_lowres

    grid = _read_source(args.gt, args.mask)
    out = make_lowres(grid, args.scale)
    iof.write_depth(args.out, out)
    _emit({"command": "make-lowres", "out": args.out, "scale": args.scale,
           "height": out.height, "width": out.width})
    return 0


def _cmd_baseline(args) -> int:
    from . import io_formats as iof
    from .resample import bicubic_upsample

    grid = _read_source(args.source, args.mask)
    out = bicubic_upsample(grid, args.scale)
    iof.write_depth(args.out, out)
    _emit({"command": "baseline", "out": args.out, "scale": args.scale,
           "height": out.height, "width": out.width})
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "cmd", None) is None:
            raise _UsageError("a subcommand is required "
                              "(upsample, eval, make-lowres, baseline)")
        _apply_threads(args.threads)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DiffSRError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
