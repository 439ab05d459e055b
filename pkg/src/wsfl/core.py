"""Grid and mask primitives shared by the whole pipeline.

Coordinate conventions, used everywhere without exception:

* pixel coordinates have x horizontal, y vertical, origin at the top left;
* a box is stored as (x1, y1, x2, y2) and denotes the half-open region
  [x1, x2) x [y1, y2): integer pixel (x, y) is inside iff
  x1 <= x < x2 and y1 <= y < y2;
* dense grids are indexed [y][x] (row major).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError

# 3x3 all-ones structuring element: 8-connectivity (diagonals connect).
_EIGHT_CONN = np.ones((3, 3), dtype=int)


def _freeze(a: np.ndarray) -> np.ndarray:
    """Mark an array read-only. Constructors take ownership of their input."""
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ImageDims:
    """Pixel dimensions of an image, height first."""

    H: int
    W: int

    def __post_init__(self) -> None:
        if not (isinstance(self.H, int) and isinstance(self.W, int)):
            raise InvalidInputError(f"image dims must be ints, got ({self.H!r}, {self.W!r})")
        if self.H < 1 or self.W < 1:
            raise InvalidInputError(f"image dims must be >= 1, got {self.H}x{self.W}")


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box over the half-open region [x1, x2) x [y1, y2).

    Coordinates are continuous, non-negative pixel units. A degenerate or
    inverted box is rejected outright; code that wants "no box" uses None.
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        coords = (float(self.x1), float(self.y1), float(self.x2), float(self.y2))
        for name, c in zip(("x1", "y1", "x2", "y2"), coords):
            if not np.isfinite(c):
                raise InvalidInputError(f"box coordinate {name} is not finite: {c!r}")
            if c < 0:
                raise InvalidInputError(f"box coordinate {name} is negative: {c!r}")
        if not (coords[0] < coords[2] and coords[1] < coords[3]):
            raise InvalidInputError(
                "box must satisfy x1 < x2 and y1 < y2 "
                f"(coordinate order is (x1, y1, x2, y2)), got {list(coords)}"
            )
        object.__setattr__(self, "x1", coords[0])
        object.__setattr__(self, "y1", coords[1])
        object.__setattr__(self, "x2", coords[2])
        object.__setattr__(self, "y2", coords[3])

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]


@dataclass(frozen=True)
class FeatureMap:
    """An h x w grid of d-dimensional float32 descriptors, shape (h, w, d).

    Values are finite and immutable after construction; the constructor
    locks the backing array, so pass a copy if the caller keeps writing.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float32)
        if v.ndim != 3 or min(v.shape) < 1:
            raise InvalidInputError(f"feature map must have shape (h, w, d) with h, w, d >= 1, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("feature map contains non-finite values")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def h(self) -> int:
        return int(self.values.shape[0])

    @property
    def w(self) -> int:
        return int(self.values.shape[1])

    @property
    def d(self) -> int:
        return int(self.values.shape[2])


@dataclass(frozen=True)
class ProbMask:
    """An h x w grid of probabilities, every value finite and in [0, 1]."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or min(v.shape) < 1:
            raise InvalidInputError(f"probability mask must be 2-d and non-empty, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("probability mask contains non-finite values")
        lo, hi = float(v.min()), float(v.max())
        if lo < 0.0 or hi > 1.0:
            raise InvalidInputError(f"probability mask values must lie in [0, 1], got range [{lo}, {hi}]")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def h(self) -> int:
        return int(self.values.shape[0])

    @property
    def w(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True)
class BinaryMask:
    """An h x w grid of bits, stored as a bool array."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if v.ndim != 2 or min(v.shape) < 1:
            raise InvalidInputError(f"binary mask must be 2-d and non-empty, got shape {v.shape}")
        if v.dtype != np.bool_:
            if not np.all(np.isin(v, (0, 1))):
                raise InvalidInputError("binary mask values must be 0 or 1")
            v = v.astype(bool)
        object.__setattr__(self, "values", _freeze(v))

    @property
    def h(self) -> int:
        return int(self.values.shape[0])

    @property
    def w(self) -> int:
        return int(self.values.shape[1])

    def count(self) -> int:
        return int(self.values.sum())


@dataclass(frozen=True)
class Component:
    """One connected region: its pixels as an (n, 2) array of (y, x), raster order."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "pixels", _freeze(np.asarray(self.pixels, dtype=np.intp)))

    @property
    def size(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def first_pixel(self) -> tuple[int, int]:
        return int(self.pixels[0, 0]), int(self.pixels[0, 1])

    def bbox(self) -> BBox:
        """Tight half-open box around the component, in pixel index units."""
        ys = self.pixels[:, 0]
        xs = self.pixels[:, 1]
        return BBox(float(xs.min()), float(ys.min()), float(xs.max() + 1), float(ys.max() + 1))


def bilinear_upsample(mask: ProbMask, target: ImageDims) -> ProbMask:
    """Resize a probability mask with bilinear interpolation.

    Uses the half-pixel-center convention: output pixel x samples the source
    at sx = (x + 0.5) * (w_in / W_out) - 0.5, clamped to [0, w_in - 1], and
    likewise for y. Resizing to the input dims is the identity, constant
    fields stay exactly constant, and outputs never leave the input's
    [min, max] range.
    """
    v = mask.values
    y0, y1, fy = _axis_coords(target.H, mask.h)
    x0, x1, fx = _axis_coords(target.W, mask.w)
    v00 = v[np.ix_(y0, x0)]
    v01 = v[np.ix_(y0, x1)]
    v10 = v[np.ix_(y1, x0)]
    v11 = v[np.ix_(y1, x1)]
    top = v00 + fx[None, :] * (v01 - v00)
    bot = v10 + fx[None, :] * (v11 - v10)
    out = top + fy[:, None] * (bot - top)
    # Guard against ulp-level overshoot so the range bound holds exactly.
    np.clip(out, v.min(), v.max(), out=out)
    return ProbMask(out)


def _axis_coords(n_out: int, n_in: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    s = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    np.clip(s, 0.0, float(n_in - 1), out=s)
    lo = np.floor(s).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, s - lo


def binarize(mask: ProbMask, threshold: float) -> BinaryMask:
    """Threshold a probability mask: bit = 1 iff value >= threshold."""
    threshold = float(threshold)
    if not (0.0 <= threshold <= 1.0):
        raise InvalidInputError(f"binarize threshold must lie in [0, 1], got {threshold}")
    return BinaryMask(mask.values >= threshold)


def connected_components(mask: BinaryMask) -> list[Component]:
    """All 8-connected foreground components, ordered by their first pixel.

    Ordering is deterministic: components sort by the raster position of
    their earliest pixel, and each component's pixel list is raster sorted.
    An all-zero mask yields an empty list.
    """
    labeled, n = ndimage.label(mask.values, structure=_EIGHT_CONN)
    comps = [Component(np.argwhere(labeled == lab)) for lab in range(1, n + 1)]
    comps.sort(key=lambda c: c.first_pixel)
    return comps


def largest_component_bbox(mask: BinaryMask) -> BBox | None:
    """Tight box of the largest component, or None for an all-zero mask.

    Size ties go to the component whose first pixel comes earliest in
    raster order.
    """
    comps = connected_components(mask)
    if not comps:
        return None
    best = max(comps, key=lambda c: c.size)  # max keeps the first on ties
    return best.bbox()
