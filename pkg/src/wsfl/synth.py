"""Seeded synthetic datasets: two-cluster descriptor grids with known boxes.

Every image is an (h, w, d) grid of unit-variance Gaussian descriptors.
Positions inside a randomly placed grid-aligned box share a foreground mean
and the rest share a background mean, the two means `separation` standard
deviations apart along a random unit direction. Annotations carry the
pixel-space groundtruth box, so downstream localization quality is
measurable exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import BBox, FeatureMap, ImageDims
from .errors import InvalidInputError
from .fileio import AnnotationRecord, write_annotations, write_feature_file

# Pixel dims are the grid dims times this stride (224 = 14 * 16).
PIXEL_STRIDE = 16


@dataclass(frozen=True)
class SynthSpec:
    """Generator settings.

    Box sides are drawn uniformly from [box_min, box_max] grid cells and
    scaled by PIXEL_STRIDE into pixel units. separation is the distance
    between the cluster means in units of the per-coordinate standard
    deviation; zero yields statistically indistinguishable clusters.
    """

    n_train: int
    n_test: int
    grid_h: int = 14
    grid_w: int = 14
    depth: int = 16
    separation: float = 4.0
    box_min: int = 6
    box_max: int = 11
    seed: int = 0
    label: str = "synth"

    def __post_init__(self) -> None:
        if self.n_train < 1 or self.n_test < 0:
            raise InvalidInputError(f"need n_train >= 1 and n_test >= 0, got {self.n_train}/{self.n_test}")
        if self.grid_h < 1 or self.grid_w < 1 or self.depth < 1:
            raise InvalidInputError("grid dims and depth must be >= 1")
        if not (np.isfinite(self.separation) and self.separation >= 0.0):
            raise InvalidInputError(f"separation must be finite and >= 0, got {self.separation}")
        if not (1 <= self.box_min <= self.box_max <= min(self.grid_h, self.grid_w)):
            raise InvalidInputError(
                f"box sides must satisfy 1 <= box_min <= box_max <= min(grid dims), "
                f"got [{self.box_min}, {self.box_max}] on a {self.grid_h}x{self.grid_w} grid"
            )

    @property
    def dims(self) -> ImageDims:
        return ImageDims(PIXEL_STRIDE * self.grid_h, PIXEL_STRIDE * self.grid_w)


def synth_generate(spec: SynthSpec, out_dir: str | Path) -> tuple[list[AnnotationRecord], list[AnnotationRecord]]:
    """Write the dataset under out_dir and return (train, test) records.

    Layout: <out_dir>/<split>/features/<image_id>.wsft plus
    <out_dir>/<split>/annotations.jsonl for split in {train, test}. The same
    spec always produces byte-identical files.
    """
    out = Path(out_dir)
    rng = np.random.default_rng(spec.seed)
    direction = _unit_direction(rng, spec.depth)
    mu_fg = 0.5 * spec.separation * direction
    mu_bg = -mu_fg

    splits: list[list[AnnotationRecord]] = []
    for split, count in (("train", spec.n_train), ("test", spec.n_test)):
        feat_dir = out / split / "features"
        feat_dir.mkdir(parents=True, exist_ok=True)
        records = []
        for i in range(count):
            image_id = f"{split}_{i:04d}"
            bw = int(rng.integers(spec.box_min, spec.box_max + 1))
            bh = int(rng.integers(spec.box_min, spec.box_max + 1))
            gx = int(rng.integers(0, spec.grid_w - bw + 1))
            gy = int(rng.integers(0, spec.grid_h - bh + 1))
            values = rng.standard_normal((spec.grid_h, spec.grid_w, spec.depth)) + mu_bg
            values[gy:gy + bh, gx:gx + bw, :] += mu_fg - mu_bg
            write_feature_file(feat_dir / f"{image_id}.wsft", FeatureMap(values.astype(np.float32)))
            box = BBox(
                float(PIXEL_STRIDE * gx),
                float(PIXEL_STRIDE * gy),
                float(PIXEL_STRIDE * (gx + bw)),
                float(PIXEL_STRIDE * (gy + bh)),
            )
            records.append(
                AnnotationRecord(image_id, spec.dims, spec.label, [box], top1_correct=True)
            )
        write_annotations(out / split / "annotations.jsonl", records)
        splits.append(records)
    return splits[0], splits[1]


def _unit_direction(rng: np.random.Generator, d: int) -> np.ndarray:
    while True:
        v = rng.standard_normal(d)
        norm = float(np.linalg.norm(v))
        if norm > 0.0:
            return v / norm
