"""Numba stencil kernels for the diffusion-adjustment loop.

Determinism contract: every output element is written by exactly one worker,
with a fixed per-pixel summation order (W, E, N, S for fluxes, row-major for
block sums), so results are bitwise identical for any thread count. Flux and
block sums accumulate in float64 regardless of the grid dtype; each stored
pixel rounds once to the grid dtype.
"""

from __future__ import annotations

import numpy as np
from numba import config as _numba_config
from numba import njit, prange

# The portable threading layer; avoids version-sensitive TBB/OMP probing and
# supports runtime thread-count changes.
_numba_config.THREADING_LAYER = "workqueue"


@njit(parallel=True, cache=True)
def diffuse(a, ch, cv, locked, lam, b):
    """One explicit diffusion step: read ``a``, write ``b``.

    ``locked`` pixels (nonzero) are held fixed and exchange no flux with
    their neighbors. Absent neighbors beyond the boundary contribute
    nothing (zero-flux).
    """
    H, W = a.shape
    for i in prange(H):
        for j in range(W):
            yp = a[i, j]
            if locked[i, j]:
                b[i, j] = yp
                continue
            acc = 0.0
            if j > 0 and not locked[i, j - 1]:
                acc += (a[i, j - 1] - yp) * ch[i, j - 1]
            if j < W - 1 and not locked[i, j + 1]:
                acc += (a[i, j + 1] - yp) * ch[i, j]
            if i > 0 and not locked[i - 1, j]:
                acc += (a[i - 1, j] - yp) * cv[i - 1, j]
            if i < H - 1 and not locked[i + 1, j]:
                acc += (a[i + 1, j] - yp) * cv[i, j]
            b[i, j] = yp + lam * acc


@njit(cache=True)
def edge_energy(y, ch, cv, valid):
    """Sum of c * (dy)^2 over edges whose both endpoints are valid."""
    H, W = y.shape
    total = 0.0
    for i in range(H):
        for j in range(W - 1):
            if valid[i, j] and valid[i, j + 1]:
                d = y[i, j] - y[i, j + 1]
                total += ch[i, j] * d * d
    for i in range(H - 1):
        for j in range(W):
            if valid[i, j] and valid[i + 1, j]:
                d = y[i, j] - y[i + 1, j]
                total += cv[i, j] * d * d
    return total


@njit(parallel=True, cache=True)
def block_mean(y, valid, s, out, out_valid):
    """Mean over each s x s block, restricted to valid pixels.

    A block with no valid pixel gets out_valid = 0 and out = 0. Sums run
    in row-major order within the block (float64 accumulator).
    """
    h, w = out.shape
    for bi in prange(h):
        for bj in range(w):
            i0 = bi * s
            j0 = bj * s
            total = 0.0
            count = 0
            for i in range(i0, i0 + s):
                for j in range(j0, j0 + s):
                    if valid[i, j]:
                        total += y[i, j]
                        count += 1
            if count > 0:
                out[bi, bj] = total / count
                out_valid[bi, bj] = 1
            else:
                out[bi, bj] = 0.0
                out_valid[bi, bj] = 0


@njit(parallel=True, cache=True)
def run_loop(a, b, src, src_valid, ch, cv, lam, s, iters, tol, upd, flag):
    """Up to ``iters`` diffusion-adjustment iterations with internal ping-pong.

    Per iteration: diffuse a -> b, then rescale each s x s block of b so its
    mean matches the source pixel (ratio 1 where the source is invalid),
    recording the max-abs update in ``upd`` per block. Stops early when the
    global max update drops below ``tol`` (strict, so tol = 0 never stops).

    Returns (iterations_done, last_update, stopped_early). The result lives
    in ``a`` if iterations_done is even, else in ``b``. A block whose mean
    falls to <= 1e-12 while its source pixel is valid sets flag[0] = 1 and
    gets ratio 1; the caller must check and abort.
    """
    H, W = a.shape
    h, w = src.shape
    done = 0
    last = np.inf
    stopped = False
    for _ in range(iters):
        for i in prange(H):
            for j in range(W):
                yp = a[i, j]
                acc = 0.0
                if j > 0:
                    acc += (a[i, j - 1] - yp) * ch[i, j - 1]
                if j < W - 1:
                    acc += (a[i, j + 1] - yp) * ch[i, j]
                if i > 0:
                    acc += (a[i - 1, j] - yp) * cv[i - 1, j]
                if i < H - 1:
                    acc += (a[i + 1, j] - yp) * cv[i, j]
                b[i, j] = yp + lam * acc
        for bi in prange(h):
            for bj in range(w):
                i0 = bi * s
                j0 = bj * s
                total = 0.0
                for i in range(i0, i0 + s):
                    for j in range(j0, j0 + s):
                        total += b[i, j]
                mean = total / (s * s)
                if src_valid[bi, bj]:
                    if mean <= 1e-12:
                        flag[0] = 1
                        r = 1.0
                    else:
                        r = src[bi, bj] / mean
                else:
                    r = 1.0
                u = 0.0
                for i in range(i0, i0 + s):
                    for j in range(j0, j0 + s):
                        v = b[i, j] * r
                        b[i, j] = v
                        d = abs(v - a[i, j])
                        if d > u:
                            u = d
                upd[bi, bj] = u
        last = upd.max()
        done += 1
        a, b = b, a
        if last < tol:
            stopped = True
            break
    return done, last, stopped
