"""Mask-to-box localization: score, upsample, threshold, box the largest region."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    BBox,
    ImageDims,
    FeatureMap,
    ProbMask,
    bilinear_upsample,
    binarize,
    connected_components,
)
from .errors import InvalidInputError, WsflError
from .head import PixelHead, head_forward

THRESHOLD_ABSOLUTE = "absolute"
THRESHOLD_RELATIVE = "relative"
DEFAULT_MASK_THRESHOLD = 0.5


@dataclass(frozen=True)
class LocalizationResult:
    """One image's localization output.

    box is the tight box of the largest thresholded component (pixel units).
    component_boxes carries every disjoint region's box for inspection; only
    the largest is scored. lr_mask is the head's grid-resolution output and
    upsampled_dims records the resolution the mask was upsampled to.
    """

    image_id: str
    box: BBox
    lr_mask: ProbMask
    upsampled_dims: ImageDims
    component_boxes: tuple[BBox, ...] = ()


def localize_image(
    head: PixelHead,
    features: FeatureMap,
    image: ImageDims,
    mask_threshold: float = DEFAULT_MASK_THRESHOLD,
    *,
    mode: str = THRESHOLD_ABSOLUTE,
    image_id: str = "",
) -> LocalizationResult:
    """Predict one box: forward, upsample to image dims, binarize, box.

    mode "absolute" thresholds the upsampled mask at mask_threshold itself;
    mode "relative" thresholds at mask_threshold times the mask's max value.
    When nothing survives the threshold the result is a 1x1 pixel box at the
    argmax of the upsampled mask (first position in raster order on ties).
    """
    if mode not in (THRESHOLD_ABSOLUTE, THRESHOLD_RELATIVE):
        raise InvalidInputError(f"threshold mode must be 'absolute' or 'relative', got {mode!r}")
    if not (0.0 <= mask_threshold <= 1.0):
        raise InvalidInputError(f"mask_threshold must lie in [0, 1], got {mask_threshold}")

    lr = head_forward(head, features)
    hr = bilinear_upsample(lr, image)
    threshold = mask_threshold
    if mode == THRESHOLD_RELATIVE:
        threshold = mask_threshold * float(hr.values.max())
    comps = connected_components(binarize(hr, threshold))

    if comps:
        best = max(comps, key=lambda c: c.size)  # first max wins ties
        box = best.bbox()
        component_boxes = tuple(c.bbox() for c in comps)
    else:
        flat = int(np.argmax(hr.values))
        iy, ix = divmod(flat, hr.w)
        box = BBox(float(ix), float(iy), float(ix + 1), float(iy + 1))
        component_boxes = ()

    return LocalizationResult(
        image_id=image_id,
        box=box,
        lr_mask=lr,
        upsampled_dims=image,
        component_boxes=component_boxes,
    )


def localize_dataset(
    head: PixelHead,
    features: Sequence[FeatureMap],
    dims: Sequence[ImageDims],
    mask_threshold: float = DEFAULT_MASK_THRESHOLD,
    *,
    mode: str = THRESHOLD_ABSOLUTE,
    image_ids: Sequence[str] | None = None,
    threads: int = 1,
) -> tuple[list[LocalizationResult], list[tuple[str, str]]]:
    """localize_image over a dataset, preserving input order.

    Per-image failures do not stop the run: they come back as (image_id,
    message) pairs in the second element, and the corresponding image is
    simply missing from the results. threads > 1 fans the images out over a
    thread pool; outputs are merged back in input order, so the thread count
    never changes the result.
    """
    if image_ids is None:
        image_ids = [str(i) for i in range(len(features))]
    if not (len(features) == len(dims) == len(image_ids)):
        raise InvalidInputError(
            f"features ({len(features)}), dims ({len(dims)}) and image_ids ({len(image_ids)}) "
            "must have equal lengths"
        )
    if threads < 1:
        raise InvalidInputError(f"threads must be >= 1, got {threads}")

    def run(item: tuple[str, FeatureMap, ImageDims]):
        image_id, fm, image = item
        try:
            return localize_image(
                head, fm, image, mask_threshold, mode=mode, image_id=image_id
            ), None
        except WsflError as exc:
            return None, (image_id, str(exc))

    items = list(zip(image_ids, features, dims))
    if threads == 1:
        rows = [run(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, items))

    results = [res for res, err in rows if res is not None]
    failures = [err for res, err in rows if err is not None]
    return results, failures
