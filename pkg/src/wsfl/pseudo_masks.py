"""Rasterize bounding boxes into binary masks at image or grid resolution."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import BBox, BinaryMask, ImageDims
from .errors import InvalidInputError


@dataclass(frozen=True)
class MaskGrid:
    """A low-resolution h x w grid laid over an H x W image.

    Cell (gy, gx) covers the pixel rectangle
    [gx * W / w, (gx + 1) * W / w) x [gy * H / h, (gy + 1) * H / h).
    """

    h: int
    w: int
    image: ImageDims

    def __post_init__(self) -> None:
        if not (1 <= self.h <= self.image.H and 1 <= self.w <= self.image.W):
            raise InvalidInputError(
                f"grid {self.h}x{self.w} must satisfy 1 <= h <= H and 1 <= w <= W "
                f"for image {self.image.H}x{self.image.W}"
            )


def _check_box_inside(box: BBox, image: ImageDims, what: str = "box") -> None:
    if box.x2 > image.W or box.y2 > image.H:
        raise InvalidInputError(
            f"{what} {box.as_list()} extends outside the {image.W}x{image.H} image"
        )


def boxes_to_hr_mask(boxes: Sequence[BBox], image: ImageDims) -> BinaryMask:
    """Full-resolution mask of the union of boxes.

    Pixel (x, y) is foreground iff some box satisfies x1 <= x < x2 and
    y1 <= y < y2. An empty box list gives an all-zero mask.
    """
    m = np.zeros((image.H, image.W), dtype=bool)
    for box in boxes:
        _check_box_inside(box, image)
        # Integer x with x1 <= x < x2 is exactly the range [ceil(x1), ceil(x2)).
        m[math.ceil(box.y1):math.ceil(box.y2), math.ceil(box.x1):math.ceil(box.x2)] = True
    return BinaryMask(m)


def boxes_to_lr_mask(boxes: Sequence[BBox], grid: MaskGrid) -> BinaryMask:
    """Quantize the union of boxes onto a low-resolution grid.

    A cell turns on iff at least half of its pixels are covered by the
    union (a coverage of exactly one half counts as foreground). With the
    grid equal to the image dims this reduces to boxes_to_hr_mask.
    """
    H, W = grid.image.H, grid.image.W
    hr = boxes_to_hr_mask(boxes, grid.image).values
    # First pixel of cell g along an axis of length N split w ways: ceil(g*N/w).
    bx = np.array([(g * W + grid.w - 1) // grid.w for g in range(grid.w)], dtype=np.intp)
    by = np.array([(g * H + grid.h - 1) // grid.h for g in range(grid.h)], dtype=np.intp)
    counts = np.add.reduceat(np.add.reduceat(hr.astype(np.int64), by, axis=0), bx, axis=1)
    nx = np.diff(np.append(bx, W))
    ny = np.diff(np.append(by, H))
    cell_pixels = ny[:, None] * nx[None, :]
    return BinaryMask(2 * counts >= cell_pixels)


def generate_training_masks(
    items: Iterable[tuple[tuple[int, int], ImageDims, Sequence[BBox]]],
    mode: str = "ddt",
) -> list[BinaryMask]:
    """Low-resolution target masks for a whole dataset.

    Each item is ((grid_h, grid_w), image_dims, boxes); the grid comes from
    that image's feature map dims. Pseudo-box mode ("ddt") requires exactly
    one box per image; groundtruth mode ("gt") accepts one or more.
    """
    if mode not in ("ddt", "gt"):
        raise InvalidInputError(f"mode must be 'ddt' or 'gt', got {mode!r}")
    out = []
    for i, ((gh, gw), image, boxes) in enumerate(items):
        if len(boxes) == 0:
            raise InvalidInputError(f"item {i}: no boxes given ({mode} mode needs at least one)")
        if mode == "ddt" and len(boxes) != 1:
            raise InvalidInputError(f"item {i}: ddt mode expects exactly one box, got {len(boxes)}")
        out.append(boxes_to_lr_mask(list(boxes), MaskGrid(gh, gw, image)))
    return out
