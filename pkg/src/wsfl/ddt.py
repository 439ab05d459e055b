"""Category-level descriptor co-localization.

Pools every spatial descriptor of a category, finds the dominant principal
axis of their covariance, and turns each image's positive-projection region
into a single pseudo bounding box. Works at any grid resolution because it
only ever touches individual d-dimensional descriptors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import BBox, BinaryMask, FeatureMap, ImageDims, largest_component_bbox
from .errors import DegenerateModelError, InvalidInputError

POWER_TOL = 1e-8
POWER_MAX_ITERS = 1000

# Relative floor under which the pooled covariance counts as zero signal.
_DEGENERATE_TRACE_FLOOR = 1e-20


@dataclass(frozen=True)
class DdtModel:
    """Fitted co-localization model for one category.

    mean: (d,) float64 mean descriptor over every position of the category.
    axis: (d,) float64 unit vector, the dominant covariance eigenvector with
        its sign fixed so the strongest projection in the category is positive.
    eigenvalue: variance captured along axis, >= 0.
    """

    mean: np.ndarray
    axis: np.ndarray
    eigenvalue: float
    category: str = ""

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        axis = np.asarray(self.axis, dtype=np.float64)
        if mean.ndim != 1 or axis.shape != mean.shape:
            raise InvalidInputError(f"mean and axis must be matching 1-d vectors, got {mean.shape} / {axis.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(axis))):
            raise InvalidInputError("model parameters must be finite")
        if abs(float(np.linalg.norm(axis)) - 1.0) > 1e-6:
            raise InvalidInputError("axis must have unit norm")
        if not (np.isfinite(self.eigenvalue) and self.eigenvalue >= 0.0):
            raise InvalidInputError(f"eigenvalue must be finite and >= 0, got {self.eigenvalue!r}")
        mean.setflags(write=False)
        axis.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "eigenvalue", float(self.eigenvalue))

    @property
    def depth(self) -> int:
        return int(self.mean.shape[0])


def fit_ddt(features: Sequence[FeatureMap], seed: int, category: str = "") -> DdtModel:
    """Fit the dominant-axis model over all positions of all given maps.

    The covariance is accumulated in float64 in two passes (exact mean, then
    centered outer products). The dominant eigenvector comes from power
    iteration with a seeded random start, stopping when successive iterates
    move less than POWER_TOL in L2 norm or after POWER_MAX_ITERS rounds.

    Raises DegenerateModelError when the pooled covariance is zero
    (all descriptors identical).
    """
    if not features:
        raise InvalidInputError("fit_ddt needs at least one feature map")
    d = features[0].d
    for i, fm in enumerate(features):
        if fm.d != d:
            raise InvalidInputError(f"feature map {i} has depth {fm.d}, expected {d}")
    n = sum(fm.h * fm.w for fm in features)
    if n < 2:
        raise InvalidInputError(f"fit_ddt needs at least 2 positions in total, got {n}")

    total = np.zeros(d, dtype=np.float64)
    for fm in features:
        total += fm.values.reshape(-1, d).sum(axis=0, dtype=np.float64)
    mean = total / n

    cov = np.zeros((d, d), dtype=np.float64)
    for fm in features:
        centered = fm.values.reshape(-1, d).astype(np.float64) - mean
        cov += centered.T @ centered
    cov /= n

    trace = float(np.trace(cov))
    if trace <= _DEGENERATE_TRACE_FLOOR * max(1.0, float(mean @ mean)):
        raise DegenerateModelError(
            f"category {category!r}: descriptor covariance is zero, all {n} descriptors are identical"
        )

    axis = _power_iteration(cov, seed)
    eigenvalue = float(axis @ cov @ axis)

    # Fix the sign: the position with the strongest |projection| anywhere in
    # the category must project positive. First occurrence wins ties.
    best_abs = -1.0
    best_val = 0.0
    for fm in features:
        proj = (fm.values.reshape(-1, d).astype(np.float64) - mean) @ axis
        i = int(np.argmax(np.abs(proj)))
        if abs(proj[i]) > best_abs:
            best_abs = abs(proj[i])
            best_val = float(proj[i])
    if best_val < 0.0:
        axis = -axis

    return DdtModel(mean=mean, axis=axis, eigenvalue=eigenvalue, category=category)


def _power_iteration(cov: np.ndarray, seed: int) -> np.ndarray:
    d = cov.shape[0]
    rng = np.random.default_rng(seed)
    v = _unit_draw(rng, d)
    for _ in range(POWER_MAX_ITERS):
        w = cov @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            # Start vector fell in the nullspace; redraw and keep going.
            v = _unit_draw(rng, d)
            continue
        w /= norm
        if float(np.linalg.norm(w - v)) < POWER_TOL:
            return w
        v = w
    return v


def _unit_draw(rng: np.random.Generator, d: int) -> np.ndarray:
    while True:
        v = rng.standard_normal(d)
        norm = float(np.linalg.norm(v))
        if norm > 0.0:
            return v / norm


def ddt_project(model: DdtModel, features: FeatureMap) -> np.ndarray:
    """Signed projection map: (h, w) float64 of axis . (descriptor - mean)."""
    if features.d != model.depth:
        raise InvalidInputError(f"feature depth {features.d} does not match model depth {model.depth}")
    centered = features.values.astype(np.float64) - model.mean
    return centered @ model.axis


def ddt_pseudo_box(model: DdtModel, features: FeatureMap, image: ImageDims) -> BBox:
    """One pseudo box per image from the positive-projection region.

    Takes the largest 8-connected component of strictly positive projections,
    boxes it tightly in grid cells, and scales grid coordinates to pixels as
    x_px = x_grid * W / w (likewise for y). An image with no positive
    position falls back to the full-image box.
    """
    proj = ddt_project(model, features)
    grid_box = largest_component_bbox(BinaryMask(proj > 0.0))
    if grid_box is None:
        return BBox(0.0, 0.0, float(image.W), float(image.H))
    sx = image.W / features.w
    sy = image.H / features.h
    return BBox(
        max(0.0, grid_box.x1 * sx),
        max(0.0, grid_box.y1 * sy),
        min(float(image.W), grid_box.x2 * sx),
        min(float(image.H), grid_box.y2 * sy),
    )
