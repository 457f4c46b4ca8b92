"""Explicit diffusion step: reference-implementation equivalence and the
stability-region invariants."""

import numpy as np
import pytest

from _scenes import random_coefficients
from diffsr.coefficients import CoefficientField, compute_coefficients, \
    uniform_coefficients
from diffsr.diffusion import diffuse, diffusion_step, dirichlet_energy
from diffsr.errors import DimensionMismatch, InvalidLambda
from diffsr.grids import DepthGrid


def reference_step(y, ch, cv, lam, locked=None):
    """Direct nested-loop evaluation of the update, W-E-N-S order."""
    h, w = y.shape
    if locked is None:
        locked = np.zeros((h, w), dtype=bool)
    out = np.empty((h, w), dtype=np.float64)
    for i in range(h):
        for j in range(w):
            yp = float(y[i, j])
            if locked[i, j]:
                out[i, j] = yp
                continue
            acc = 0.0
            if j > 0 and not locked[i, j - 1]:
                acc += (float(y[i, j - 1]) - yp) * ch[i, j - 1]
            if j < w - 1 and not locked[i, j + 1]:
                acc += (float(y[i, j + 1]) - yp) * ch[i, j]
            if i > 0 and not locked[i - 1, j]:
                acc += (float(y[i - 1, j]) - yp) * cv[i - 1, j]
            if i < h - 1 and not locked[i + 1, j]:
                acc += (float(y[i + 1, j]) - yp) * cv[i, j]
            out[i, j] = yp + lam * acc
    return out


def test_matches_reference_on_random_grids():
    rng = np.random.default_rng(10)
    for _ in range(50):
        y = rng.uniform(-3, 3, (5, 5))
        field = random_coefficients(rng, 5, 5)
        got = diffusion_step(y, field, 0.2)
        want = reference_step(y, field.c_h, field.c_v, 0.2)
        # float64 in, identical summation order: bitwise equal
        np.testing.assert_array_equal(got, want)


def test_matches_reference_with_mask():
    rng = np.random.default_rng(11)
    for _ in range(20):
        y = rng.uniform(0, 1, (6, 4))
        mask = rng.uniform(size=(6, 4)) > 0.3
        mask[0, 0] = True  # keep at least one valid pixel
        field = random_coefficients(rng, 6, 4)
        got = diffusion_step(DepthGrid(y, mask), field, 0.24)
        want = reference_step(y, field.c_h, field.c_v, 0.24, locked=~mask)
        np.testing.assert_array_equal(got, want)


def test_constant_grid_unchanged():
    y = np.full((4, 4), 2.5, dtype=np.float64)
    out = diffusion_step(y, uniform_coefficients((4, 4)), 0.24)
    np.testing.assert_array_equal(out, y)


def test_interior_pixel_hand_value():
    # center 0, four neighbors 1, c = 1, lam = 0.2 -> 0 + 0.2 * 4 = 0.8
    y = np.ones((3, 3), dtype=np.float64)
    y[1, 1] = 0.0
    out = diffusion_step(y, uniform_coefficients((3, 3)), 0.2)
    assert out[1, 1] == pytest.approx(0.8, rel=1e-12)


def test_corner_pixel_hand_value():
    # corner 0, two neighbors 1, c = 1, lam = 0.24 -> 0.48 (zero-flux boundary)
    y = np.ones((2, 2), dtype=np.float64)
    y[0, 0] = 0.0
    out = diffusion_step(y, uniform_coefficients((2, 2)), 0.24)
    assert out[0, 0] == pytest.approx(0.48, rel=1e-12)


def test_max_principle():
    rng = np.random.default_rng(12)
    for _ in range(30):
        y = rng.uniform(-5, 5, (8, 8)).astype(np.float32)
        field = random_coefficients(rng, 8, 8)
        out = diffusion_step(y, field, 0.24)
        span = float(y.max() - y.min())
        assert out.max() <= y.max() + 1e-6 * span
        assert out.min() >= y.min() - 1e-6 * span


def test_mass_conservation():
    rng = np.random.default_rng(13)
    for _ in range(30):
        y = rng.uniform(1, 9, (16, 16)).astype(np.float32)
        field = random_coefficients(rng, 16, 16)
        out = diffusion_step(y, field, 0.24)
        before = float(y.astype(np.float64).sum())
        after = float(out.astype(np.float64).sum())
        assert abs(after - before) <= 1e-5 * abs(before)


def test_energy_never_increases():
    rng = np.random.default_rng(14)
    for _ in range(30):
        y = rng.uniform(-1, 1, (8, 8))
        field = random_coefficients(rng, 8, 8)
        e0 = dirichlet_energy(y, field)
        e1 = dirichlet_energy(diffusion_step(y, field, 0.24), field)
        assert e1 <= e0 * (1 + 1e-12) + 1e-15


def test_linearity():
    rng = np.random.default_rng(15)
    field = random_coefficients(rng, 6, 6)
    y1 = rng.uniform(-1, 1, (6, 6))
    y2 = rng.uniform(-1, 1, (6, 6))
    a, b = 1.7, -0.4
    combined = diffusion_step(a * y1 + b * y2, field, 0.1)
    separate = a * diffusion_step(y1, field, 0.1) + b * diffusion_step(y2, field, 0.1)
    np.testing.assert_allclose(combined, separate, rtol=1e-12, atol=1e-14)


def test_self_guided_matches_direct_formula():
    # guide = y itself reproduces classic unguided anisotropic diffusion;
    # coefficients are written out longhand here as an independent route
    rng = np.random.default_rng(16)
    y = rng.uniform(0, 1, (5, 5))
    kappa, lam = 0.1, 0.15
    field = compute_coefficients(y, kappa)
    got = diffusion_step(y, field, lam)

    k2 = kappa * kappa
    ch = np.empty((5, 4))
    cv = np.empty((4, 5))
    for i in range(5):
        for j in range(4):
            ch[i, j] = k2 / (k2 + (y[i, j + 1] - y[i, j]) ** 2)
    for i in range(4):
        for j in range(5):
            cv[i, j] = k2 / (k2 + (y[i + 1, j] - y[i, j]) ** 2)
    want = reference_step(y, ch, cv, lam)
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_locked_pixels_fixed_and_fluxless():
    rng = np.random.default_rng(17)
    y = rng.uniform(0, 1, (5, 5))
    mask = np.ones((5, 5), dtype=bool)
    mask[2, 2] = False
    field = random_coefficients(rng, 5, 5)
    out = diffusion_step(DepthGrid(y, mask), field, 0.2)
    assert out[2, 2] == y[2, 2]
    # perturbing the locked value must not change any unlocked output
    y2 = y.copy()
    y2[2, 2] += 123.0
    out2 = diffusion_step(DepthGrid(y2, mask), field, 0.2)
    live = mask
    np.testing.assert_array_equal(out[live], out2[live])


def test_repeated_diffusion_approaches_mean():
    # without adjustment, zero-flux diffusion drives the grid to its mean
    rng = np.random.default_rng(18)
    y = rng.uniform(1, 3, (8, 8))
    out = diffuse(y, uniform_coefficients((8, 8)), 0.24, 4000)
    np.testing.assert_allclose(out, np.full((8, 8), y.mean()), rtol=1e-6)


def test_diffuse_equals_repeated_steps():
    rng = np.random.default_rng(19)
    y = rng.uniform(0, 1, (6, 6)).astype(np.float32)
    field = random_coefficients(rng, 6, 6)
    step = y
    for _ in range(7):
        step = diffusion_step(step, field, 0.21)
    np.testing.assert_array_equal(diffuse(y, field, 0.21, 7), step)


def test_input_not_mutated():
    y = np.ones((4, 4), dtype=np.float32)
    y[1, 1] = 5.0
    snapshot = y.copy()
    diffuse(y, uniform_coefficients((4, 4)), 0.2, 3)
    np.testing.assert_array_equal(y, snapshot)


def test_lambda_validation():
    y = np.ones((2, 2))
    field = uniform_coefficients((2, 2))
    for bad in (0.25, 0.3, 0.0, -0.1, float("nan"), float("inf")):
        with pytest.raises(InvalidLambda):
            diffusion_step(y, field, bad)
    # the boundary is strict; just inside is fine
    diffusion_step(y, field, 0.2499)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        diffusion_step(np.ones((3, 3)), uniform_coefficients((4, 4)), 0.2)


def test_dirichlet_energy_values():
    # 1x2 grid [0, 1] with c = 1: 0.5 * 1 * 1^2 = 0.5
    field = uniform_coefficients((1, 2))
    assert dirichlet_energy(np.array([[0.0, 1.0]]), field) == pytest.approx(0.5)
    assert dirichlet_energy(np.array([[2.0, 2.0]]), field) == 0.0
    # quadratic scaling
    rng = np.random.default_rng(20)
    y = rng.uniform(-1, 1, (5, 5))
    f2 = random_coefficients(rng, 5, 5)
    assert dirichlet_energy(3.0 * y, f2) == pytest.approx(
        9.0 * dirichlet_energy(y, f2), rel=1e-12
    )


def test_dirichlet_energy_ignores_masked_edges():
    y = np.array([[0.0, 100.0], [0.0, 0.0]])
    mask = np.array([[True, False], [True, True]])
    field = uniform_coefficients((2, 2))
    # only the bottom edge and the left vertical edge are fully valid
    assert dirichlet_energy(DepthGrid(y, mask), field) == pytest.approx(0.0)
