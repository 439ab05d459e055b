"""On-disk formats.

Binary containers (all little-endian):

* feature grid: magic "WSFT", uint16 version (1), uint32 h, w, d, then
  h*w*d float32 values in row-major order with position (y*w + x)*d + c;
* head checkpoint: magic "WSFH", uint16 version (1), uint32 d, then d+1
  float64 values (weights, then bias).

Full-resolution masks reuse the feature container with d = 1.

Line-oriented JSON (one object per line):

* annotations: {"image_id", "width", "height", "label", "boxes": [[x1, y1,
  x2, y2], ...], "top1_correct"?} plus arbitrary extra fields, preserved;
* predictions: {"image_id", "box", "mask_path"?};
* proposals: {"image_id", "box", "class"?};
* detections: {"image_id", "class", "score", "box"};
* scored proposals: {"image_id", "box", "objectness", "filtered", "class"?}.

Metrics reports are a single JSON document with sorted keys, so identical
content is byte-identical on disk.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import BBox, FeatureMap, ImageDims
from .errors import InvalidInputError, ParseError
from .head import PixelHead
from .metrics import DetectionRecord
from .wsod import Proposal, ScoredProposal

FEATURE_MAGIC = b"WSFT"
HEAD_MAGIC = b"WSFH"
FORMAT_VERSION = 1

_FEATURE_HEADER = struct.Struct("<4sHIII")  # magic, version, h, w, d
_HEAD_HEADER = struct.Struct("<4sHI")       # magic, version, d


# -- binary feature grids ----------------------------------------------------

def write_feature_file(path: str | Path, fmap: FeatureMap) -> None:
    blob = _FEATURE_HEADER.pack(FEATURE_MAGIC, FORMAT_VERSION, fmap.h, fmap.w, fmap.d)
    Path(path).write_bytes(blob + fmap.values.astype("<f4").tobytes())


def read_feature_file(path: str | Path) -> FeatureMap:
    data = Path(path).read_bytes()
    h, w, d = _read_feature_header(data, path)
    expected = h * w * d * 4
    body = len(data) - _FEATURE_HEADER.size
    if body < expected:
        raise ParseError(
            f"truncated payload: expected {expected} bytes of float32 data, got {body}",
            path=path, offset=len(data),
        )
    if body > expected:
        raise ParseError("trailing bytes after payload", path=path, offset=_FEATURE_HEADER.size + expected)
    values = np.frombuffer(data, dtype="<f4", offset=_FEATURE_HEADER.size).reshape(h, w, d)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise ParseError(
            "non-finite value in payload",
            path=path, offset=_FEATURE_HEADER.size + int(bad[0]) * 4,
        )
    return FeatureMap(values)


def read_feature_dims(path: str | Path) -> tuple[int, int, int]:
    """(h, w, d) from the header alone, without loading the payload."""
    with open(path, "rb") as f:
        data = f.read(_FEATURE_HEADER.size)
    return _read_feature_header(data, path)


def _read_feature_header(data: bytes, path: str | Path) -> tuple[int, int, int]:
    if len(data) < 4 or data[:4] != FEATURE_MAGIC:
        raise ParseError(f"bad magic, expected {FEATURE_MAGIC!r}", path=path, offset=0)
    if len(data) < 6:
        raise ParseError("truncated version field", path=path, offset=4)
    (version,) = struct.unpack_from("<H", data, 4)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported version {version}", path=path, offset=4)
    if len(data) < _FEATURE_HEADER.size:
        raise ParseError("truncated dimension header", path=path, offset=6)
    h, w, d = struct.unpack_from("<III", data, 6)
    if min(h, w, d) < 1:
        raise ParseError(f"dimensions must be >= 1, got {h}x{w}x{d}", path=path, offset=6)
    return h, w, d


# -- head checkpoints --------------------------------------------------------

def write_head_file(path: str | Path, head: PixelHead) -> None:
    blob = _HEAD_HEADER.pack(HEAD_MAGIC, FORMAT_VERSION, head.dim)
    params = np.concatenate([head.weights, [head.bias]]).astype("<f8")
    Path(path).write_bytes(blob + params.tobytes())


def read_head_file(path: str | Path) -> PixelHead:
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != HEAD_MAGIC:
        raise ParseError(f"bad magic, expected {HEAD_MAGIC!r}", path=path, offset=0)
    if len(data) < 6:
        raise ParseError("truncated version field", path=path, offset=4)
    (version,) = struct.unpack_from("<H", data, 4)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported version {version}", path=path, offset=4)
    if len(data) < _HEAD_HEADER.size:
        raise ParseError("truncated dimension header", path=path, offset=6)
    (d,) = struct.unpack_from("<I", data, 6)
    if d < 1:
        raise ParseError(f"head dimension must be >= 1, got {d}", path=path, offset=6)
    expected = (d + 1) * 8
    body = len(data) - _HEAD_HEADER.size
    if body != expected:
        raise ParseError(
            f"expected {expected} bytes of float64 parameters, got {body}",
            path=path, offset=len(data) if body < expected else _HEAD_HEADER.size + expected,
        )
    params = np.frombuffer(data, dtype="<f8", offset=_HEAD_HEADER.size)
    if not np.all(np.isfinite(params)):
        bad = int(np.flatnonzero(~np.isfinite(params))[0])
        raise ParseError("non-finite parameter", path=path, offset=_HEAD_HEADER.size + bad * 8)
    return PixelHead(weights=params[:d].copy(), bias=float(params[d]))


# -- JSON lines --------------------------------------------------------------

@dataclass
class AnnotationRecord:
    """One image's annotation: dims, class label, boxes, optional top-1 flag."""

    image_id: str
    dims: ImageDims
    label: str
    boxes: list[BBox] = field(default_factory=list)
    top1_correct: bool | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class PredictionRecord:
    image_id: str
    box: BBox
    mask_path: str | None = None


def _iter_jsonl(path: str | Path):
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed JSON: {exc.msg}", path=path, line=lineno) from exc
            if not isinstance(obj, dict):
                raise ParseError("each line must hold a JSON object", path=path, line=lineno)
            yield lineno, obj


def _need(obj: dict, key: str, path, lineno: int):
    if key not in obj:
        raise ParseError(f"missing required field {key!r}", path=path, line=lineno)
    return obj[key]


def _parse_box(raw, path, lineno: int) -> BBox:
    if not (isinstance(raw, (list, tuple)) and len(raw) == 4):
        raise ParseError(f"box must be a list of 4 numbers, got {raw!r}", path=path, line=lineno)
    try:
        return BBox(*[float(c) for c in raw])
    except (TypeError, ValueError) as exc:
        raise ParseError(f"box {raw!r} is not numeric", path=path, line=lineno) from exc
    except InvalidInputError as exc:
        raise ParseError(f"invalid box: {exc}", path=path, line=lineno) from exc


def read_annotations(path: str | Path) -> list[AnnotationRecord]:
    known = {"image_id", "width", "height", "label", "boxes", "top1_correct"}
    records: list[AnnotationRecord] = []
    seen: set[str] = set()
    for lineno, obj in _iter_jsonl(path):
        image_id = _need(obj, "image_id", path, lineno)
        if not isinstance(image_id, str) or not image_id:
            raise ParseError(f"image_id must be a non-empty string, got {image_id!r}", path=path, line=lineno)
        if image_id in seen:
            raise ParseError(f"duplicate image id {image_id!r}", path=path, line=lineno)
        seen.add(image_id)
        width = _need(obj, "width", path, lineno)
        height = _need(obj, "height", path, lineno)
        if not (isinstance(width, int) and isinstance(height, int)) or width < 1 or height < 1:
            raise ParseError(f"width/height must be positive ints, got {width!r}/{height!r}", path=path, line=lineno)
        label = _need(obj, "label", path, lineno)
        if not isinstance(label, str):
            raise ParseError(f"label must be a string, got {label!r}", path=path, line=lineno)
        dims = ImageDims(height, width)
        boxes = []
        for raw in obj.get("boxes", []):
            box = _parse_box(raw, path, lineno)
            if box.x2 > width or box.y2 > height:
                raise ParseError(
                    f"box {box.as_list()} extends outside the {width}x{height} image",
                    path=path, line=lineno,
                )
            boxes.append(box)
        top1 = obj.get("top1_correct")
        if top1 is not None and not isinstance(top1, bool):
            raise ParseError(f"top1_correct must be a bool, got {top1!r}", path=path, line=lineno)
        extra = {k: v for k, v in obj.items() if k not in known}
        records.append(AnnotationRecord(image_id, dims, label, boxes, top1, extra))
    return records


def write_annotations(path: str | Path, records: Sequence[AnnotationRecord]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            obj = {
                "image_id": r.image_id,
                "width": r.dims.W,
                "height": r.dims.H,
                "label": r.label,
                "boxes": [b.as_list() for b in r.boxes],
            }
            if r.top1_correct is not None:
                obj["top1_correct"] = r.top1_correct
            for k in sorted(r.extra):
                obj.setdefault(k, r.extra[k])
            f.write(json.dumps(obj) + "\n")


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    records: list[PredictionRecord] = []
    seen: set[str] = set()
    for lineno, obj in _iter_jsonl(path):
        image_id = _need(obj, "image_id", path, lineno)
        if not isinstance(image_id, str) or not image_id:
            raise ParseError(f"image_id must be a non-empty string, got {image_id!r}", path=path, line=lineno)
        if image_id in seen:
            raise ParseError(f"duplicate image id {image_id!r}", path=path, line=lineno)
        seen.add(image_id)
        box = _parse_box(_need(obj, "box", path, lineno), path, lineno)
        mask_path = obj.get("mask_path")
        if mask_path is not None and not isinstance(mask_path, str):
            raise ParseError(f"mask_path must be a string, got {mask_path!r}", path=path, line=lineno)
        records.append(PredictionRecord(image_id, box, mask_path))
    return records


def write_predictions(path: str | Path, records: Sequence[PredictionRecord]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            obj: dict = {"image_id": r.image_id, "box": r.box.as_list()}
            if r.mask_path is not None:
                obj["mask_path"] = r.mask_path
            f.write(json.dumps(obj) + "\n")


def read_proposals(path: str | Path) -> list[tuple[str, BBox, str | None]]:
    """(image_id, box, class) rows; many proposals per image are fine."""
    rows: list[tuple[str, BBox, str | None]] = []
    for lineno, obj in _iter_jsonl(path):
        image_id = _need(obj, "image_id", path, lineno)
        if not isinstance(image_id, str) or not image_id:
            raise ParseError(f"image_id must be a non-empty string, got {image_id!r}", path=path, line=lineno)
        box = _parse_box(_need(obj, "box", path, lineno), path, lineno)
        cls = obj.get("class")
        if cls is not None and not isinstance(cls, str):
            raise ParseError(f"class must be a string, got {cls!r}", path=path, line=lineno)
        rows.append((image_id, box, cls))
    return rows


def write_scored_proposals(path: str | Path, scored: Sequence[ScoredProposal]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for sp in scored:
            obj: dict = {
                "image_id": sp.proposal.image_id,
                "box": sp.proposal.box.as_list(),
                "objectness": sp.objectness,
                "filtered": sp.filtered,
            }
            if sp.class_name is not None:
                obj["class"] = sp.class_name
            f.write(json.dumps(obj) + "\n")


def read_scored_proposals(path: str | Path) -> list[ScoredProposal]:
    rows: list[ScoredProposal] = []
    for lineno, obj in _iter_jsonl(path):
        image_id = _need(obj, "image_id", path, lineno)
        box = _parse_box(_need(obj, "box", path, lineno), path, lineno)
        objectness = _need(obj, "objectness", path, lineno)
        filtered = _need(obj, "filtered", path, lineno)
        if not isinstance(objectness, (int, float)) or isinstance(objectness, bool):
            raise ParseError(f"objectness must be a number, got {objectness!r}", path=path, line=lineno)
        if not isinstance(filtered, bool):
            raise ParseError(f"filtered must be a bool, got {filtered!r}", path=path, line=lineno)
        cls = obj.get("class")
        try:
            rows.append(ScoredProposal(Proposal(image_id, box), float(objectness), cls, filtered))
        except InvalidInputError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from exc
    return rows


def read_detections(path: str | Path) -> list[DetectionRecord]:
    rows: list[DetectionRecord] = []
    for lineno, obj in _iter_jsonl(path):
        image_id = _need(obj, "image_id", path, lineno)
        cls = _need(obj, "class", path, lineno)
        score = _need(obj, "score", path, lineno)
        box = _parse_box(_need(obj, "box", path, lineno), path, lineno)
        if not isinstance(cls, str) or not cls:
            raise ParseError(f"class must be a non-empty string, got {cls!r}", path=path, line=lineno)
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise ParseError(f"score must be a number, got {score!r}", path=path, line=lineno)
        try:
            rows.append(DetectionRecord(image_id, cls, float(score), box))
        except InvalidInputError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from exc
    return rows


# -- metrics reports ---------------------------------------------------------

def format_metrics_report(report: dict) -> str:
    """Canonical serialization: sorted keys, two-space indent, one trailing
    newline. Identical content always produces identical bytes.
    """
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_metrics_report(path: str | Path, report: dict) -> None:
    Path(path).write_text(format_metrics_report(report), encoding="utf-8")
