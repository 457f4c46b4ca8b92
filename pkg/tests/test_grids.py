"""Grid containers, normalization, and input validation."""

import dataclasses

import numpy as np
import pytest

from diffsr.errors import DimensionMismatch, NonFiniteInput, NonPositiveSource
from diffsr.grids import (
    DepthGrid,
    GuideStack,
    as_depth_grid,
    as_guide_stack,
    normalize_guide,
    validate_pair,
)


def test_depth_grid_shape_and_dtype():
    g = DepthGrid(np.arange(12, dtype=np.float32).reshape(3, 4) + 1)
    assert (g.height, g.width) == (3, 4)
    assert g.shape == (3, 4)
    assert g.values.dtype == np.float32
    assert g.mask is None
    assert g.valid_mask().all() and g.valid_mask().shape == (3, 4)


def test_depth_grid_keeps_float64():
    g = DepthGrid(np.ones((2, 2), dtype=np.float64))
    assert g.values.dtype == np.float64


def test_depth_grid_is_immutable():
    g = DepthGrid(np.ones((2, 2), dtype=np.float32))
    with pytest.raises(ValueError):
        g.values[0, 0] = 5.0
    with pytest.raises(dataclasses.FrozenInstanceError):
        g.values = np.zeros((2, 2))


def test_depth_grid_does_not_alias_input():
    src = np.ones((2, 2), dtype=np.float32)
    g = DepthGrid(src)
    src[0, 0] = 99.0
    assert g.values[0, 0] == 1.0


def test_depth_grid_mask_shape_checked():
    with pytest.raises(DimensionMismatch):
        DepthGrid(np.ones((2, 2)), np.ones((3, 2), dtype=bool))


def test_depth_grid_rejects_nonfinite_at_valid():
    values = np.array([[1.0, np.nan], [1.0, 1.0]], dtype=np.float32)
    with pytest.raises(NonFiniteInput):
        DepthGrid(values)
    # the same NaN under an invalid pixel is fine
    mask = np.array([[True, False], [True, True]])
    g = DepthGrid(values, mask)
    assert list(g.valid_values()) == [1.0, 1.0, 1.0]


def test_depth_grid_rejects_bad_shapes():
    with pytest.raises(DimensionMismatch):
        DepthGrid(np.ones(4))
    with pytest.raises(DimensionMismatch):
        DepthGrid(np.ones((0, 3)))


def test_as_depth_grid_passthrough():
    g = DepthGrid(np.ones((2, 2)))
    assert as_depth_grid(g) is g
    assert isinstance(as_depth_grid(np.ones((2, 2))), DepthGrid)


def test_guide_stack_promotes_2d():
    g = GuideStack(np.ones((4, 5), dtype=np.float32))
    assert (g.height, g.width, g.channels) == (4, 5, 1)
    assert g.values.shape == (4, 5, 1)


def test_guide_stack_rejects_bad_input():
    with pytest.raises(DimensionMismatch):
        GuideStack(np.ones((2, 2, 2, 2)))
    with pytest.raises(DimensionMismatch):
        GuideStack(np.ones((4, 5, 0)))
    with pytest.raises(NonFiniteInput):
        GuideStack(np.array([[np.inf]]))


def test_guide_stack_immutable():
    g = GuideStack(np.zeros((2, 2, 3), dtype=np.float32))
    with pytest.raises(ValueError):
        g.values[0, 0, 0] = 1.0


def test_normalize_guide_8bit_endpoints():
    raw = np.array([[0, 255]], dtype=np.uint8)
    g = normalize_guide(raw)
    assert g.values[0, 0, 0] == 0.0
    assert g.values[0, 1, 0] == 1.0


def test_normalize_guide_16bit_midpoint():
    raw = np.array([[32768]], dtype=np.uint16)
    g = normalize_guide(raw)
    assert g.values[0, 0, 0] == pytest.approx(32768 / 65535, rel=1e-7)
    assert g.values[0, 0, 0] == pytest.approx(0.50000763, rel=1e-6)


def test_normalize_guide_idempotent_on_floats():
    rng = np.random.default_rng(3)
    raw = rng.uniform(0, 1, (4, 4, 3)).astype(np.float32)
    once = normalize_guide(raw)
    twice = normalize_guide(once)
    assert twice is once


def test_normalize_guide_rejects_unsupported_dtype():
    with pytest.raises(TypeError):
        normalize_guide(np.ones((2, 2), dtype=np.int32))


def test_validate_pair_accepts_matching_dims():
    rng = np.random.default_rng(5)
    source = DepthGrid(rng.uniform(1, 5, (32, 32)).astype(np.float32))
    guide = GuideStack(rng.uniform(0, 1, (256, 256, 3)).astype(np.float32))
    validate_pair(source, guide, 8)


def test_validate_pair_rejects_wrong_dims():
    source = DepthGrid(np.ones((32, 32)))
    guide = GuideStack(np.ones((250, 250, 3), dtype=np.float32))
    with pytest.raises(DimensionMismatch):
        validate_pair(source, guide, 8)


def test_validate_pair_rejects_nonpositive_source():
    values = np.ones((2, 2), dtype=np.float32)
    values[0, 0] = 0.0
    guide = GuideStack(np.ones((4, 4, 1), dtype=np.float32))
    with pytest.raises(NonPositiveSource):
        validate_pair(DepthGrid(values), guide, 2)
    # the same zero under an invalid pixel passes
    mask = np.array([[False, True], [True, True]])
    validate_pair(DepthGrid(values, mask), guide, 2)


def test_validate_pair_rejects_bad_scale():
    source = DepthGrid(np.ones((2, 2)))
    guide = GuideStack(np.ones((4, 4, 1), dtype=np.float32))
    with pytest.raises(DimensionMismatch):
        validate_pair(source, guide, 0)
    with pytest.raises(DimensionMismatch):
        validate_pair(source, guide, True)
    with pytest.raises(DimensionMismatch):
        validate_pair(source, guide, 2.0)


def test_as_guide_stack_passthrough():
    g = GuideStack(np.ones((2, 2, 1), dtype=np.float32))
    assert as_guide_stack(g) is g
