"""Localization pipeline: forward + upsample + binarize + largest component."""

import numpy as np
import pytest

from wsfl import (
    BBox,
    FeatureMap,
    ImageDims,
    InvalidInputError,
    PixelHead,
    binarize,
    bilinear_upsample,
    head_forward,
    localize_dataset,
    localize_image,
)


def _head(w, b=0.0):
    return PixelHead(weights=np.asarray(w, dtype=np.float64), bias=float(b))


def _blob_feature(rng, grid=6, d=4, sep=6.0):
    """Feature map with one rectangular high-activation block on channel 0."""
    bits = np.zeros((grid, grid), dtype=bool)
    bw, bh = rng.integers(2, grid - 1, 2)
    gx = rng.integers(0, grid - bw + 1)
    gy = rng.integers(0, grid - bh + 1)
    bits[gy:gy + bh, gx:gx + bw] = True
    vals = rng.standard_normal((grid, grid, d)) * 0.1
    vals[..., 0] += np.where(bits, sep / 2.0, -sep / 2.0)
    return FeatureMap(vals)


def test_saturated_head_fills_the_image():
    fm = FeatureMap(np.zeros((4, 4, 2)))
    dims = ImageDims(64, 64)
    res = localize_image(_head(np.zeros(2), b=30.0), fm, dims)
    assert res.box == BBox(0.0, 0.0, 64.0, 64.0)
    assert res.component_boxes == (res.box,)
    assert res.upsampled_dims == dims


def test_nothing_above_threshold_falls_back_to_peak_pixel():
    # probabilities all far below 0.5; fallback is a 1x1 box at the peak
    vals = np.zeros((2, 2, 1), dtype=np.float32)
    vals[1, 0, 0] = 1.0
    fm = FeatureMap(vals)
    head = _head([1.0], b=-8.0)
    dims = ImageDims(2, 2)
    res = localize_image(head, fm, dims)
    hr = bilinear_upsample(head_forward(head, fm), dims)
    flat = int(np.argmax(hr.values))
    py, px = divmod(flat, hr.values.shape[1])
    assert res.box == BBox(float(px), float(py), float(px + 1), float(py + 1))
    assert res.component_boxes == ()


def test_relative_threshold_tracks_the_peak():
    rng = np.random.default_rng(21)
    fm = _blob_feature(rng)
    head = _head([1.0, 0.0, 0.0, 0.0], b=-1.0)
    dims = ImageDims(96, 96)
    hr = bilinear_upsample(head_forward(head, fm), dims)
    theta = 0.4
    rel = localize_image(head, fm, dims, theta, mode="relative")
    ab = localize_image(head, fm, dims, theta * float(hr.values.max()))
    assert rel.box == ab.box


def test_absolute_is_the_default_mode():
    rng = np.random.default_rng(22)
    fm = _blob_feature(rng)
    head = _head([1.0, 0.0, 0.0, 0.0])
    dims = ImageDims(48, 48)
    assert localize_image(head, fm, dims).box == localize_image(
        head, fm, dims, 0.5, mode="absolute"
    ).box


def test_box_always_inside_image():
    rng = np.random.default_rng(23)
    for _ in range(25):
        fm = _blob_feature(rng, sep=float(rng.uniform(0.0, 8.0)))
        dims = ImageDims(int(rng.integers(8, 120)), int(rng.integers(8, 120)))
        head = _head(rng.standard_normal(4) * 0.5, b=float(rng.standard_normal()))
        box = localize_image(head, fm, dims).box
        assert 0.0 <= box.x1 < box.x2 <= dims.W
        assert 0.0 <= box.y1 < box.y2 <= dims.H


def test_lower_threshold_never_shrinks_the_mask():
    rng = np.random.default_rng(24)
    fm = _blob_feature(rng)
    head = _head([1.0, 0.0, 0.0, 0.0])
    dims = ImageDims(64, 64)
    hr = bilinear_upsample(head_forward(head, fm), dims)
    areas = []
    for thr in (0.8, 0.6, 0.4, 0.2):
        areas.append(int(binarize(hr, thr).values.sum()))
    assert areas == sorted(areas)


@pytest.mark.parametrize("args,kwargs", [
    ((0.5,), {"mode": "sideways"}),
    ((-0.1,), {}),
    ((1.5,), {}),
    ((float("nan"),), {}),
])
def test_localize_rejects_bad_arguments(args, kwargs):
    fm = FeatureMap(np.zeros((2, 2, 1)))
    with pytest.raises(InvalidInputError):
        localize_image(_head([1.0]), fm, ImageDims(4, 4), *args, **kwargs)


# -- dataset-level driver --------------------------------------------------------

def _dataset(rng, n=8, d=4):
    features = [_blob_feature(rng, d=d) for _ in range(n)]
    dims = [ImageDims(64, 64) for _ in range(n)]
    return features, dims


def test_dataset_matches_per_image_calls():
    rng = np.random.default_rng(25)
    features, dims = _dataset(rng)
    head = _head([1.0, 0.0, 0.0, 0.0])
    results, failures = localize_dataset(head, features, dims)
    assert failures == []
    assert len(results) == len(features)
    for res, fm, image in zip(results, features, dims):
        assert res.box == localize_image(head, fm, image).box
    assert [r.image_id for r in results] == [str(i) for i in range(len(features))]


def test_dataset_uses_supplied_ids_in_order():
    rng = np.random.default_rng(26)
    features, dims = _dataset(rng, n=3)
    ids = ["img_b", "img_a", "img_c"]
    results, failures = localize_dataset(_head([1.0, 0, 0, 0]), features, dims, image_ids=ids)
    assert failures == []
    assert [r.image_id for r in results] == ids


def test_dataset_reports_failures_and_keeps_going():
    rng = np.random.default_rng(27)
    features, dims = _dataset(rng, n=4)
    features.insert(2, FeatureMap(rng.standard_normal((3, 3, 7))))  # depth mismatch
    dims.insert(2, ImageDims(32, 32))
    ids = ["a", "b", "bad", "c", "d"]
    results, failures = localize_dataset(_head([1.0, 0, 0, 0]), features, dims, image_ids=ids)
    assert [r.image_id for r in results] == ["a", "b", "c", "d"]
    assert len(failures) == 1
    assert failures[0][0] == "bad"
    assert failures[0][1]  # carries a message


def test_dataset_threads_do_not_change_results():
    rng = np.random.default_rng(28)
    features, dims = _dataset(rng, n=12)
    head = _head([1.0, 0.0, 0.0, 0.0])
    r1, f1 = localize_dataset(head, features, dims, threads=1)
    r3, f3 = localize_dataset(head, features, dims, threads=3)
    assert f1 == f3 == []
    assert [r.image_id for r in r1] == [r.image_id for r in r3]
    assert [r.box for r in r1] == [r.box for r in r3]


def test_dataset_validates_inputs():
    rng = np.random.default_rng(29)
    features, dims = _dataset(rng, n=2)
    head = _head([1.0, 0.0, 0.0, 0.0])
    with pytest.raises(InvalidInputError):
        localize_dataset(head, features, dims, image_ids=["only_one"])
    with pytest.raises(InvalidInputError):
        localize_dataset(head, features, dims[:1])
    with pytest.raises(InvalidInputError):
        localize_dataset(head, features, dims, threads=0)
    results, failures = localize_dataset(head, [], [])
    assert results == [] and failures == []
