"""Tensor and mask primitives: types, upsampling, binarization, components."""

import math

import numpy as np
import pytest

from oracles import bilinear_reference, flood_fill_components, largest_component_box
from wsfl import (
    BBox,
    BinaryMask,
    FeatureMap,
    ImageDims,
    InvalidInputError,
    ProbMask,
    bilinear_upsample,
    binarize,
    connected_components,
    largest_component_bbox,
)


# -- types ---------------------------------------------------------------------

def test_bbox_basic_geometry():
    b = BBox(1.0, 2.0, 4.0, 8.0)
    assert (b.x1, b.y1, b.x2, b.y2) == (1.0, 2.0, 4.0, 8.0)
    assert b.width == 3.0
    assert b.height == 6.0
    assert b.area == 18.0
    assert b.as_list() == [1.0, 2.0, 4.0, 8.0]


def test_bbox_rejects_swapped_corner_order():
    # (x1, x2, y1, y2) ordering of a 5<=x<10, 2<=y<8 box lands here as x1 >= x2
    with pytest.raises(InvalidInputError, match=r"coordinate order"):
        BBox(5, 10, 2, 8)


@pytest.mark.parametrize(
    "coords",
    [
        (0, 0, 0, 5),        # zero width
        (0, 0, 5, 0),        # zero height
        (3, 0, 2, 5),        # x1 > x2
        (-1, 0, 2, 5),       # negative
        (0, 0, float("nan"), 5),
        (0, 0, float("inf"), 5),
    ],
)
def test_bbox_rejects_invalid_coords(coords):
    with pytest.raises(InvalidInputError):
        BBox(*coords)


def test_image_dims_validation():
    dims = ImageDims(224, 224)
    assert (dims.H, dims.W) == (224, 224)
    for bad in [(0, 5), (5, 0), (-1, 5)]:
        with pytest.raises(InvalidInputError):
            ImageDims(*bad)
    with pytest.raises(InvalidInputError):
        ImageDims(2.5, 5)


def test_feature_map_shape_and_dtype():
    fm = FeatureMap(np.zeros((3, 4, 5)))
    assert (fm.h, fm.w, fm.d) == (3, 4, 5)
    assert fm.values.dtype == np.float32
    with pytest.raises(ValueError):
        fm.values[0, 0, 0] = 1.0  # storage is immutable


@pytest.mark.parametrize("shape", [(3, 4), (0, 4, 5), (3, 0, 5), (3, 4, 0)])
def test_feature_map_rejects_bad_shapes(shape):
    with pytest.raises(InvalidInputError):
        FeatureMap(np.zeros(shape))


def test_feature_map_rejects_non_finite():
    vals = np.zeros((2, 2, 1))
    vals[1, 1, 0] = np.nan
    with pytest.raises(InvalidInputError):
        FeatureMap(vals)


def test_prob_mask_range_checks():
    ProbMask(np.array([[0.0, 1.0], [0.5, 0.25]]))
    with pytest.raises(InvalidInputError):
        ProbMask(np.array([[0.0, 1.1]]))
    with pytest.raises(InvalidInputError):
        ProbMask(np.array([[-0.1, 0.5]]))
    with pytest.raises(InvalidInputError):
        ProbMask(np.array([[np.nan, 0.5]]))
    with pytest.raises(InvalidInputError):
        ProbMask(np.zeros((0, 3)))


def test_binary_mask_accepts_bits_only():
    m = BinaryMask(np.array([[0, 1], [1, 0]]))
    assert m.values.dtype == np.bool_
    assert m.count() == 2
    BinaryMask(np.array([[True, False]]))
    with pytest.raises(InvalidInputError):
        BinaryMask(np.array([[0, 2]]))
    with pytest.raises(InvalidInputError):
        BinaryMask(np.array([[0.5, 1.0]]))


# -- bilinear_upsample -----------------------------------------------------------

def test_upsample_preserves_constant_field():
    out = bilinear_upsample(ProbMask(np.full((14, 14), 0.7)), ImageDims(224, 224))
    assert out.values.shape == (224, 224)
    assert np.all(out.values == 0.7)


def test_upsample_single_cell_broadcasts_value():
    out = bilinear_upsample(ProbMask(np.array([[0.3]])), ImageDims(5, 9))
    assert out.values.shape == (5, 9)
    assert np.all(out.values == 0.3)


def test_upsample_2x2_checker_to_4x4():
    out = bilinear_upsample(ProbMask(np.array([[0.0, 1.0], [1.0, 0.0]])), ImageDims(4, 4))
    expected = np.array(
        [
            [0.0, 0.25, 0.75, 1.0],
            [0.25, 0.375, 0.625, 0.75],
            [0.75, 0.625, 0.375, 0.25],
            [1.0, 0.75, 0.25, 0.0],
        ]
    )
    assert np.max(np.abs(out.values - expected)) < 1e-6
    ref = bilinear_reference(np.array([[0.0, 1.0], [1.0, 0.0]]), 4, 4)
    assert np.max(np.abs(out.values - ref)) < 1e-6


def test_upsample_matches_scalar_formula_on_random_grids():
    rng = np.random.default_rng(8)
    for _ in range(40):
        h, w = rng.integers(1, 9, 2)
        H, W = rng.integers(1, 25, 2)
        vals = rng.random((h, w))
        out = bilinear_upsample(ProbMask(vals), ImageDims(int(H), int(W)))
        ref = bilinear_reference(vals, int(H), int(W))
        assert np.max(np.abs(out.values - ref)) < 1e-6
        # value range never leaves the input range
        assert out.values.min() >= vals.min() - 1e-12
        assert out.values.max() <= vals.max() + 1e-12
        assert np.all((out.values >= 0.0) & (out.values <= 1.0))


def test_upsample_identity_at_matching_dims():
    rng = np.random.default_rng(9)
    for _ in range(10):
        h, w = rng.integers(1, 12, 2)
        vals = rng.random((h, w))
        out = bilinear_upsample(ProbMask(vals), ImageDims(int(h), int(w)))
        assert np.array_equal(out.values, vals)


def test_upsample_supports_downscaling():
    vals = np.linspace(0.0, 1.0, 36).reshape(6, 6)
    out = bilinear_upsample(ProbMask(vals), ImageDims(3, 2))
    ref = bilinear_reference(vals, 3, 2)
    assert np.max(np.abs(out.values - ref)) < 1e-6


# -- binarize --------------------------------------------------------------------

def test_binarize_threshold_semantics():
    m = ProbMask(np.full((3, 3), 0.7))
    assert np.all(binarize(m, 0.5).values)
    assert np.all(binarize(m, 0.7).values)  # >= is inclusive
    assert not np.any(binarize(m, 0.71).values)


def test_binarize_filter_threshold_example():
    m = ProbMask(np.array([[0.1, 0.25]]))
    assert binarize(m, 0.2).values.tolist() == [[False, True]]


def test_binarize_rejects_out_of_range_threshold():
    m = ProbMask(np.full((2, 2), 0.5))
    for bad in (-0.01, 1.01, float("nan")):
        with pytest.raises(InvalidInputError):
            binarize(m, bad)


def test_binarize_monotone_in_threshold():
    rng = np.random.default_rng(10)
    vals = rng.random((12, 12))
    m = ProbMask(vals)
    prev = binarize(m, 0.0).values
    for t in np.linspace(0.1, 1.0, 10):
        cur = binarize(m, float(t)).values
        assert not np.any(cur & ~prev)  # raising t never turns 0 into 1
        prev = cur


# -- connected_components ----------------------------------------------------------

def test_components_two_disjoint_blocks():
    bits = np.zeros((6, 8), dtype=bool)
    bits[0:2, 0:2] = True
    bits[4:6, 5:7] = True
    comps = connected_components(BinaryMask(bits))
    assert [c.size for c in comps] == [4, 4]
    assert comps[0].first_pixel == (0, 0)
    assert comps[1].first_pixel == (4, 5)


def test_components_empty_mask():
    assert connected_components(BinaryMask(np.zeros((4, 4), dtype=bool))) == []


def test_components_diagonal_pixels_connect():
    bits = np.eye(4, dtype=bool)
    comps = connected_components(BinaryMask(bits))
    assert len(comps) == 1
    assert comps[0].size == 4


def test_components_match_flood_fill_on_random_masks():
    rng = np.random.default_rng(11)
    for i in range(1000):
        density = 0.15 + 0.7 * (i % 10) / 10.0
        bits = rng.random((20, 20)) < density
        comps = connected_components(BinaryMask(bits))
        ref = flood_fill_components(bits)
        assert len(comps) == len(ref)
        if i % 25 == 0:  # full pixel-set comparison on a subsample
            got = [[tuple(p) for p in c.pixels] for c in comps]
            assert got == ref


def test_components_partition_the_ones():
    rng = np.random.default_rng(12)
    bits = rng.random((15, 17)) < 0.4
    comps = connected_components(BinaryMask(bits))
    seen = np.zeros_like(bits)
    for c in comps:
        ys, xs = c.pixels[:, 0], c.pixels[:, 1]
        assert not np.any(seen[ys, xs])  # disjoint
        seen[ys, xs] = True
    assert np.array_equal(seen, bits)  # union covers every 1-pixel


# -- largest_component_bbox ---------------------------------------------------------

def test_largest_bbox_single_pixel():
    bits = np.zeros((6, 8), dtype=bool)
    bits[3, 5] = True
    assert largest_component_bbox(BinaryMask(bits)) == BBox(5, 3, 6, 4)


def test_largest_bbox_picks_bigger_component():
    bits = np.zeros((6, 8), dtype=bool)
    bits[0:2, 0:2] = True
    bits[5, 7] = True
    assert largest_component_bbox(BinaryMask(bits)) == BBox(0, 0, 2, 2)


def test_largest_bbox_tie_goes_to_earliest_raster_pixel():
    bits = np.zeros((5, 9), dtype=bool)
    bits[3, 0:2] = True  # size 2, first pixel (3, 0)
    bits[0, 4:6] = True  # size 2, first pixel (0, 4)
    assert largest_component_bbox(BinaryMask(bits)) == BBox(4, 0, 6, 1)


def test_largest_bbox_none_on_empty():
    assert largest_component_bbox(BinaryMask(np.zeros((3, 3), dtype=bool))) is None


def test_largest_bbox_matches_flood_fill_oracle():
    rng = np.random.default_rng(13)
    for _ in range(200):
        bits = rng.random((14, 14)) < rng.uniform(0.1, 0.9)
        got = largest_component_bbox(BinaryMask(bits))
        ref = largest_component_box(bits)
        if ref is None:
            assert got is None
        else:
            assert got == BBox(*ref)


def test_largest_bbox_is_tight():
    rng = np.random.default_rng(14)
    bits = rng.random((10, 10)) < 0.5
    box = largest_component_bbox(BinaryMask(bits))
    if box is None:
        pytest.skip("empty draw")
    comps = connected_components(BinaryMask(bits))
    best = max(comps, key=lambda c: c.size)
    ys, xs = best.pixels[:, 0], best.pixels[:, 1]
    assert (box.x1, box.y1) == (xs.min(), ys.min())
    assert (box.x2, box.y2) == (xs.max() + 1, ys.max() + 1)


def test_component_first_pixel_order_is_raster():
    bits = np.zeros((4, 4), dtype=bool)
    bits[2, 1] = True
    bits[0, 3] = True
    bits[1, 0] = True
    comps = connected_components(BinaryMask(bits))
    firsts = [c.first_pixel for c in comps]
    assert firsts == sorted(firsts)
