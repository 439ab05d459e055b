"""Evaluation: box IoU, CorLoc, Top-1 localization, and VOC-style mAP."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import BBox, ImageDims
from .errors import InvalidInputError

logger = logging.getLogger(__name__)

# Localization counts as correct at IoU >= 0.5, inclusive.
CORLOC_IOU = 0.5


@dataclass(frozen=True)
class GroundTruthRecord:
    """Groundtruth boxes of one class on one image."""

    image_id: str
    dims: ImageDims
    label: str
    boxes: tuple[BBox, ...]

    def __post_init__(self) -> None:
        boxes = tuple(self.boxes)
        if len(boxes) < 1:
            raise InvalidInputError(f"image {self.image_id!r}: groundtruth needs at least one box")
        for b in boxes:
            if b.x2 > self.dims.W or b.y2 > self.dims.H:
                raise InvalidInputError(
                    f"image {self.image_id!r}: groundtruth box {b.as_list()} extends outside "
                    f"the {self.dims.W}x{self.dims.H} image"
                )
        object.__setattr__(self, "boxes", boxes)


@dataclass(frozen=True)
class DetectionRecord:
    """One scored class detection on one image."""

    image_id: str
    class_name: str
    score: float
    box: BBox

    def __post_init__(self) -> None:
        if not np.isfinite(self.score):
            raise InvalidInputError(f"detection score must be finite, got {self.score!r}")


@dataclass(frozen=True)
class ClsFlag:
    """Whether the image's top-1 classification was correct."""

    image_id: str
    top1_correct: bool


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two continuous half-open boxes."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def _prediction_map(predictions: Sequence[tuple[str, BBox]]) -> dict[str, BBox]:
    out: dict[str, BBox] = {}
    for image_id, box in predictions:
        if image_id in out:
            raise InvalidInputError(f"duplicate prediction for image {image_id!r}")
        out[image_id] = box
    return out


def _loc_correct(pred: dict[str, BBox], record: GroundTruthRecord) -> bool:
    best = max(iou(pred[record.image_id], g) for g in record.boxes)
    return best >= CORLOC_IOU


def corloc(predictions: Sequence[tuple[str, BBox]], gt: Sequence[GroundTruthRecord]) -> float:
    """Fraction of images whose predicted box reaches IoU >= 0.5 with some
    groundtruth box of that image. Needs exactly one prediction per image.
    """
    if len(gt) == 0:
        raise InvalidInputError("corloc needs at least one groundtruth record")
    pred = _prediction_map(predictions)
    missing = [r.image_id for r in gt if r.image_id not in pred]
    if missing:
        raise InvalidInputError(
            f"missing predictions for {len(missing)} image(s): {', '.join(missing[:10])}"
        )
    hits = sum(1 for r in gt if _loc_correct(pred, r))
    return hits / len(gt)


def top1_loc(
    predictions: Sequence[tuple[str, BBox]],
    gt: Sequence[GroundTruthRecord],
    cls_flags: Sequence[ClsFlag],
) -> float:
    """Fraction of images that are localized (as in corloc) AND classified
    correctly. Always <= corloc on the same inputs.
    """
    if len(gt) == 0:
        raise InvalidInputError("top1_loc needs at least one groundtruth record")
    pred = _prediction_map(predictions)
    flags: dict[str, bool] = {}
    for f in cls_flags:
        if f.image_id in flags:
            raise InvalidInputError(f"duplicate classification flag for image {f.image_id!r}")
        flags[f.image_id] = f.top1_correct
    missing = [r.image_id for r in gt if r.image_id not in pred]
    if missing:
        raise InvalidInputError(
            f"missing predictions for {len(missing)} image(s): {', '.join(missing[:10])}"
        )
    unflagged = [r.image_id for r in gt if r.image_id not in flags]
    if unflagged:
        raise InvalidInputError(
            f"missing classification flags for {len(unflagged)} image(s): {', '.join(unflagged[:10])}"
        )
    hits = sum(1 for r in gt if flags[r.image_id] and _loc_correct(pred, r))
    return hits / len(gt)


def _detection_sort_key(det: DetectionRecord):
    # Descending score; ties broken by image id, then box raster order.
    return (-det.score, det.image_id, det.box.y1, det.box.x1, det.box.y2, det.box.x2)


def _ap_11point(recalls: np.ndarray, precisions: np.ndarray) -> float:
    total = 0.0
    for i in range(11):
        r = i / 10.0
        mask = recalls >= r
        total += float(precisions[mask].max()) if mask.any() else 0.0
    return total / 11.0


def _ap_all_points(recalls: np.ndarray, precisions: np.ndarray) -> float:
    mrec = np.concatenate(([0.0], recalls, [1.0]))
    mpre = np.concatenate(([0.0], precisions, [0.0]))
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    idx = np.where(mrec[1:] != mrec[:-1])[0]
    return float(((mrec[idx + 1] - mrec[idx]) * mpre[idx + 1]).sum())


def voc_map(
    detections: Sequence[DetectionRecord],
    gt: Sequence[GroundTruthRecord],
    iou_thresh: float = 0.5,
    *,
    all_points: bool = False,
) -> tuple[dict[str, float], float]:
    """Per-class average precision and its mean.

    Detections are walked per class in descending score order (ties broken
    by image id, then box raster order); each detection greedily takes its
    best-IoU still-unmatched groundtruth box and is a true positive iff that
    IoU >= iou_thresh. AP uses VOC 11-point interpolation,
    AP = (1/11) * sum over r in {0, 0.1, ..., 1} of max precision at
    recall >= r, unless all_points is set, which integrates the full
    precision envelope instead. The mean runs over classes with at least one
    groundtruth instance; a class with detections but no groundtruth gets
    AP 0 and a warning but does not enter the mean. No annotation is ever
    treated as "difficult": every groundtruth box counts.
    """
    if not (0.0 < iou_thresh <= 1.0):
        raise InvalidInputError(f"iou_thresh must lie in (0, 1], got {iou_thresh}")

    gt_boxes: dict[tuple[str, str], list[BBox]] = {}
    n_gt: dict[str, int] = defaultdict(int)
    for r in gt:
        key = (r.image_id, r.label)
        if key in gt_boxes:
            raise InvalidInputError(f"duplicate groundtruth record for image {r.image_id!r} class {r.label!r}")
        gt_boxes[key] = list(r.boxes)
        n_gt[r.label] += len(r.boxes)

    gt_classes = set(n_gt)
    det_classes = {d.class_name for d in detections}
    per_class: dict[str, float] = {}

    for cls in sorted(gt_classes | det_classes):
        if cls not in gt_classes:
            logger.warning("class %r has detections but no groundtruth; AP set to 0", cls)
            per_class[cls] = 0.0
            continue
        dets = sorted((d for d in detections if d.class_name == cls), key=_detection_sort_key)
        if not dets:
            per_class[cls] = 0.0
            continue
        matched: dict[str, list[bool]] = {}
        tp = np.zeros(len(dets))
        for i, det in enumerate(dets):
            boxes = gt_boxes.get((det.image_id, cls), [])
            taken = matched.setdefault(det.image_id, [False] * len(boxes))
            best_iou, best_j = 0.0, -1
            for j, g in enumerate(boxes):
                if taken[j]:
                    continue
                v = iou(det.box, g)
                if v > best_iou:
                    best_iou, best_j = v, j
            if best_j >= 0 and best_iou >= iou_thresh:
                taken[best_j] = True
                tp[i] = 1.0
        tp_cum = np.cumsum(tp)
        recalls = tp_cum / n_gt[cls]
        precisions = tp_cum / np.arange(1, len(dets) + 1)
        ap = _ap_all_points(recalls, precisions) if all_points else _ap_11point(recalls, precisions)
        per_class[cls] = ap

    mean_ap = float(np.mean([per_class[c] for c in sorted(gt_classes)])) if gt_classes else 0.0
    return per_class, mean_ap
