"""Command-line surface.

Subcommands cover the full pipeline: synth-gen, ddt-boxes, make-masks,
train-head, predict, eval-wsol, score-proposals, eval-map, render-overlay.
Every subcommand accepts --seed, --config (a key=value defaults file that
explicit flags override) and --threads (parallel width for per-image
stages; it never changes outputs). Logs go to stderr with verbosity from
WSFL_LOG={error,info,debug}; machine-readable output goes to files or
stdout. Exit codes: 0 success, 1 validation error, 2 I/O or parse error.
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence, TypeVar

import numpy as np

from .core import BinaryMask, FeatureMap, ProbMask, bilinear_upsample
from .ddt import ddt_pseudo_box, fit_ddt
from .errors import DegenerateModelError, InvalidInputError, ParseError
from .fileio import (
    AnnotationRecord,
    PredictionRecord,
    format_metrics_report,
    read_annotations,
    read_detections,
    read_feature_dims,
    read_feature_file,
    read_head_file,
    read_predictions,
    read_proposals,
    write_feature_file,
    write_head_file,
    write_metrics_report,
    write_predictions,
    write_scored_proposals,
)
from .head import TrainConfig, train_head
from .metrics import CORLOC_IOU, ClsFlag, GroundTruthRecord, corloc, top1_loc, voc_map
from .pseudo_masks import generate_training_masks
from .synth import SynthSpec, synth_generate
from .wsod import (
    GT_MASK_THRESHOLD,
    WSFL_MASK_THRESHOLD,
    Proposal,
    ScoredProposal,
    filter_proposals,
    proposal_objectness,
)
from .wsol import DEFAULT_MASK_THRESHOLD, THRESHOLD_ABSOLUTE, THRESHOLD_RELATIVE, localize_dataset

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2

logger = logging.getLogger("wsfl")

T = TypeVar("T")
U = TypeVar("U")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits the process on bad flags; raise instead so the
    # dispatcher can print usage and return the validation exit code.
    def error(self, message: str):
        raise _UsageError(message)


def _setup_logging() -> None:
    name = os.environ.get("WSFL_LOG", "info").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if name not in levels:
        name = "info"
    logging.basicConfig(
        stream=sys.stderr,
        level=levels[name],
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _pmap(fn: Callable[[T], U], items: Sequence[T], threads: int) -> list[U]:
    """Ordered map, optionally over a thread pool. Same results either way."""
    if threads < 1:
        raise InvalidInputError(f"threads must be >= 1, got {threads}")
    if threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- shared loading helpers ----------------------------------------------------

def _sorted_annotations(path: str) -> list[AnnotationRecord]:
    records = read_annotations(path)
    records.sort(key=lambda r: r.image_id)
    if not records:
        raise InvalidInputError(f"{path}: no annotation records")
    return records


def _feature_path(features_dir: str, image_id: str) -> Path:
    return Path(features_dir) / f"{image_id}.wsft"


def _load_mask_values(path: str | Path) -> np.ndarray:
    """(H, W) float64 values from a d=1 feature container."""
    fm = read_feature_file(path)
    if fm.d != 1:
        raise InvalidInputError(f"{path}: expected a d=1 mask container, got d={fm.d}")
    return fm.values[:, :, 0].astype(np.float64)


def _emit_report(out: str, report: dict) -> None:
    if out == "-":
        sys.stdout.write(format_metrics_report(report))
    else:
        write_metrics_report(out, report)


def _gt_records(records: Sequence[AnnotationRecord], *, require_boxes: bool) -> list[GroundTruthRecord]:
    boxless = [r.image_id for r in records if not r.boxes]
    if require_boxes and boxless:
        raise InvalidInputError(
            f"{len(boxless)} annotation(s) have no boxes and cannot be evaluated: "
            + ", ".join(boxless[:10])
        )
    return [
        GroundTruthRecord(r.image_id, r.dims, r.label, tuple(r.boxes))
        for r in records
        if r.boxes
    ]


# -- subcommand handlers -------------------------------------------------------

def _cmd_synth_gen(args) -> int:
    gh, gw = _parse_grid(args.grid)
    spec = SynthSpec(
        n_train=args.n_train,
        n_test=args.n_test,
        grid_h=gh,
        grid_w=gw,
        depth=args.depth,
        separation=args.separation,
        box_min=args.box_min,
        box_max=args.box_max,
        seed=args.seed,
        label=args.label,
    )
    train, test = synth_generate(spec, args.out)
    logger.info("wrote %d train and %d test images under %s", len(train), len(test), args.out)
    return EXIT_OK


def _cmd_ddt_boxes(args) -> int:
    records = _sorted_annotations(args.annotations)
    groups: dict[str, list[AnnotationRecord]] = {}
    for r in records:
        groups.setdefault(r.label, []).append(r)
    rows: list[PredictionRecord] = []
    for label in sorted(groups):
        recs = groups[label]
        feats = [read_feature_file(_feature_path(args.features, r.image_id)) for r in recs]
        model = fit_ddt(feats, seed=args.seed, category=label)
        logger.info(
            "category %r: axis fitted over %d images, eigenvalue %.6g",
            label, len(recs), model.eigenvalue,
        )
        boxes = _pmap(
            lambda pair: ddt_pseudo_box(model, pair[0], pair[1].dims),
            list(zip(feats, recs)),
            args.threads,
        )
        rows.extend(PredictionRecord(r.image_id, b) for r, b in zip(recs, boxes))
    rows.sort(key=lambda p: p.image_id)
    write_predictions(args.out, rows)
    logger.info("wrote %d pseudo boxes to %s", len(rows), args.out)
    return EXIT_OK


def _cmd_make_masks(args) -> int:
    records = _sorted_annotations(args.annotations)
    if args.gt_boxes:
        mode = "gt"
        boxes_by_id = {r.image_id: list(r.boxes) for r in records}
    else:
        if not args.boxes:
            raise InvalidInputError("make-masks needs --boxes unless --gt-boxes is set")
        mode = "ddt"
        preds = {p.image_id: p.box for p in read_predictions(args.boxes)}
        missing = [r.image_id for r in records if r.image_id not in preds]
        if missing:
            raise InvalidInputError(
                f"missing pseudo boxes for {len(missing)} image(s): " + ", ".join(missing[:10])
            )
        boxes_by_id = {r.image_id: [preds[r.image_id]] for r in records}
    items = []
    for r in records:
        h, w, _ = read_feature_dims(_feature_path(args.features, r.image_id))
        items.append(((h, w), r.dims, boxes_by_id[r.image_id]))
    masks = generate_training_masks(items, mode=mode)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for r, mask in zip(records, masks):
        write_feature_file(
            out / f"{r.image_id}.wsft",
            FeatureMap(mask.values[:, :, None].astype(np.float32)),
        )
    logger.info("wrote %d %s-mode masks to %s", len(masks), mode, out)
    return EXIT_OK


def _cmd_train_head(args) -> int:
    records = _sorted_annotations(args.annotations)
    dataset = []
    for r in records:
        fm = read_feature_file(_feature_path(args.features, r.image_id))
        mvals = _load_mask_values(Path(args.masks) / f"{r.image_id}.wsft")
        if mvals.shape != (fm.h, fm.w):
            raise InvalidInputError(
                f"image {r.image_id!r}: mask {mvals.shape} does not match feature grid {(fm.h, fm.w)}"
            )
        if not np.all(np.isin(mvals, (0.0, 1.0))):
            raise InvalidInputError(f"image {r.image_id!r}: training mask values must be 0 or 1")
        dataset.append((fm, BinaryMask(mvals != 0.0)))
    config = TrainConfig(
        batch_size=args.batch_size,
        learning_rate=args.lr,
        momentum=args.momentum,
        weight_decay=args.weight_decay,
        epochs=args.epochs,
        decay_period=args.decay_period,
        decay_factor=args.decay_factor,
        seed=args.seed,
    )
    head, trace = train_head(dataset, config)
    for epoch, loss in enumerate(trace):
        logger.info("epoch %d: mean loss %.6f", epoch, loss)
    write_head_file(args.out, head)
    logger.info("wrote head checkpoint to %s", args.out)
    return EXIT_OK


def _cmd_predict(args) -> int:
    records = _sorted_annotations(args.annotations)
    head = read_head_file(args.head)
    feats = [read_feature_file(_feature_path(args.features, r.image_id)) for r in records]
    results, failures = localize_dataset(
        head,
        feats,
        [r.dims for r in records],
        args.mask_threshold,
        mode=args.threshold_mode,
        image_ids=[r.image_id for r in records],
        threads=args.threads,
    )
    for image_id, message in failures:
        logger.error("image %s failed: %s", image_id, message)
    if failures:
        logger.warning("%d of %d images failed; their predictions are missing", len(failures), len(records))
    masks_out = Path(args.masks_out) if args.masks_out else None
    if masks_out is not None:
        masks_out.mkdir(parents=True, exist_ok=True)
    preds = []
    for res in results:
        mask_path = None
        if masks_out is not None:
            hr = bilinear_upsample(res.lr_mask, res.upsampled_dims)
            target = masks_out / f"{res.image_id}.wsft"
            write_feature_file(target, FeatureMap(hr.values[:, :, None].astype(np.float32)))
            mask_path = str(target)
        preds.append(PredictionRecord(res.image_id, res.box, mask_path))
    write_predictions(args.out, preds)
    logger.info("wrote %d predictions to %s", len(preds), args.out)
    return EXIT_OK


def _cmd_eval_wsol(args) -> int:
    records = _sorted_annotations(args.annotations)
    gt = _gt_records(records, require_boxes=True)
    pairs = [(p.image_id, p.box) for p in read_predictions(args.predictions)]
    results = {"corloc": corloc(pairs, gt)}
    flagged = [r for r in records if r.top1_correct is not None]
    if len(flagged) == len(records):
        flags = [ClsFlag(r.image_id, bool(r.top1_correct)) for r in records]
        results["top1_loc"] = top1_loc(pairs, gt, flags)
    elif flagged:
        missing = [r.image_id for r in records if r.top1_correct is None]
        raise InvalidInputError(
            "top1_correct is present on some annotations but missing for: " + ", ".join(missing[:10])
        )
    report = {
        "command": "eval-wsol",
        "config": {
            "annotations": str(args.annotations),
            "iou_threshold": CORLOC_IOU,
            "predictions": str(args.predictions),
            "seed": args.seed,
        },
        "metrics": results,
        "num_images": len(gt),
    }
    _emit_report(args.out, report)
    return EXIT_OK


def _cmd_score_proposals(args) -> int:
    records = _sorted_annotations(args.annotations)
    dims_by_id = {r.image_id: r.dims for r in records}
    rows = read_proposals(args.proposals)
    needed = sorted({image_id for image_id, _, _ in rows})
    unknown = [i for i in needed if i not in dims_by_id]
    if unknown:
        raise InvalidInputError(
            f"proposals reference {len(unknown)} unknown image(s): " + ", ".join(unknown[:10])
        )
    masks: dict[str, ProbMask] = {}
    for image_id in needed:
        vals = _load_mask_values(Path(args.masks) / f"{image_id}.wsft")
        dims = dims_by_id[image_id]
        if vals.shape != (dims.H, dims.W):
            raise InvalidInputError(
                f"mask for image {image_id!r} has shape {vals.shape}, expected {(dims.H, dims.W)}"
            )
        masks[image_id] = ProbMask(vals)

    def score(row: tuple[str, object, object]) -> ScoredProposal:
        image_id, box, cls = row
        dims = dims_by_id[image_id]
        if box.x2 > dims.W or box.y2 > dims.H:
            raise InvalidInputError(
                f"proposal {box.as_list()} extends outside image {image_id!r} ({dims.W}x{dims.H})"
            )
        prop = Proposal(image_id, box)
        return ScoredProposal(prop, proposal_objectness(masks[image_id], prop), cls)

    scored = _pmap(score, rows, args.threads)
    if args.threshold is not None:
        threshold = args.threshold
    else:
        threshold = GT_MASK_THRESHOLD if args.gt_masks else WSFL_MASK_THRESHOLD
    exempt = frozenset(s.strip() for s in args.exempt.split(",") if s.strip())
    scored = filter_proposals(scored, threshold, exempt)
    write_scored_proposals(args.out, scored)
    kept = sum(1 for sp in scored if not sp.filtered)
    logger.info(
        "scored %d proposals (%d kept, %d filtered at threshold %g) into %s",
        len(scored), kept, len(scored) - kept, threshold, args.out,
    )
    return EXIT_OK


def _cmd_eval_map(args) -> int:
    records = _sorted_annotations(args.annotations)
    gt = _gt_records(records, require_boxes=False)
    if not gt:
        raise InvalidInputError(f"{args.annotations}: no annotation has groundtruth boxes")
    detections = read_detections(args.detections)
    per_class, mean_ap = voc_map(detections, gt, args.iou_threshold, all_points=args.all_points)
    report = {
        "command": "eval-map",
        "config": {
            "annotations": str(args.annotations),
            "detections": str(args.detections),
            "interpolation": "all-points" if args.all_points else "11-point",
            "iou_threshold": args.iou_threshold,
            "seed": args.seed,
        },
        "metrics": {"map": mean_ap},
        "num_detections": len(detections),
        "num_images": len(records),
        "per_class_ap": per_class,
    }
    _emit_report(args.out, report)
    return EXIT_OK


def _cmd_render_overlay(args) -> int:
    from PIL import Image, ImageDraw

    records = {r.image_id: r for r in read_annotations(args.annotations)}
    preds = read_predictions(args.predictions)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rendered = 0
    for p in preds:
        if p.mask_path is None:
            logger.warning("prediction for %s has no mask_path; skipped", p.image_id)
            continue
        rec = records.get(p.image_id)
        if rec is None:
            logger.warning("no annotation for %s; skipped", p.image_id)
            continue
        mask = ProbMask(_load_mask_values(p.mask_path))
        if (mask.h, mask.w) != (rec.dims.H, rec.dims.W):
            mask = bilinear_upsample(mask, rec.dims)
        heat = np.stack(
            [
                np.round(255.0 * mask.values),
                np.round(64.0 * mask.values),
                np.round(255.0 * (1.0 - mask.values)),
            ],
            axis=-1,
        ).astype(np.uint8)
        img = Image.fromarray(heat, mode="RGB")
        draw = ImageDraw.Draw(img)
        for g in rec.boxes:
            draw.rectangle(_draw_xy(g, rec.dims.W, rec.dims.H), outline=(255, 255, 255))
        draw.rectangle(_draw_xy(p.box, rec.dims.W, rec.dims.H), outline=(0, 255, 0))
        img.save(out / f"{p.image_id}.png")
        rendered += 1
    logger.info("rendered %d overlay(s) into %s", rendered, out)
    return EXIT_OK


def _draw_xy(box, W: int, H: int) -> list[int]:
    import math

    x1 = min(max(int(math.floor(box.x1)), 0), W - 1)
    y1 = min(max(int(math.floor(box.y1)), 0), H - 1)
    x2 = min(max(int(math.ceil(box.x2)) - 1, x1), W - 1)
    y2 = min(max(int(math.ceil(box.y2)) - 1, y1), H - 1)
    return [x1, y1, x2, y2]


def _parse_grid(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)x(\d+)", text)
    if not m:
        raise InvalidInputError(f"grid must look like HxW (for example 14x14), got {text!r}")
    return int(m.group(1)), int(m.group(2))


# -- parser / config plumbing ---------------------------------------------------

def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every seeded stage (default 0)")
    common.add_argument("--config", default=None, metavar="PATH",
                        help="key=value defaults file; explicit flags override it")
    common.add_argument("--threads", type=int, default=1, metavar="N",
                        help="parallel width for per-image stages (default 1); never changes outputs")

    parser = _Parser(prog="wsfl", description="Foreground learning on precomputed feature grids.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    registry: dict[str, _Parser] = {}

    p = sub.add_parser("synth-gen", parents=[common], help="generate a synthetic two-cluster dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--n-train", type=int, required=True)
    p.add_argument("--n-test", type=int, required=True)
    p.add_argument("--grid", default="14x14", help="grid dims as HxW (default 14x14)")
    p.add_argument("--depth", type=int, default=16)
    p.add_argument("--separation", type=float, default=4.0,
                   help="cluster mean distance in standard deviations (default 4)")
    p.add_argument("--box-min", type=int, default=6, help="min box side in grid cells")
    p.add_argument("--box-max", type=int, default=11, help="max box side in grid cells")
    p.add_argument("--label", default="synth")
    p.set_defaults(func=_cmd_synth_gen)
    registry["synth-gen"] = p

    p = sub.add_parser("ddt-boxes", parents=[common], help="fit per-category axes and emit pseudo boxes")
    p.add_argument("--features", required=True, help="directory of <image_id>.wsft feature files")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True, help="output pseudo-box JSONL")
    p.set_defaults(func=_cmd_ddt_boxes)
    registry["ddt-boxes"] = p

    p = sub.add_parser("make-masks", parents=[common], help="rasterize boxes to grid-resolution training masks")
    p.add_argument("--features", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--boxes", default=None, help="pseudo-box JSONL (from ddt-boxes)")
    p.add_argument("--gt-boxes", action="store_true", help="use annotation boxes instead of --boxes")
    p.add_argument("--out", required=True, help="output mask directory")
    p.set_defaults(func=_cmd_make_masks)
    registry["make-masks"] = p

    p = sub.add_parser("train-head", parents=[common], help="train the per-position classifier")
    p.add_argument("--features", required=True)
    p.add_argument("--masks", required=True, help="directory of training masks (from make-masks)")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True, help="output head checkpoint")
    p.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    p.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    p.add_argument("--momentum", type=float, default=TrainConfig.momentum)
    p.add_argument("--weight-decay", type=float, default=TrainConfig.weight_decay)
    p.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p.add_argument("--decay-period", type=int, default=TrainConfig.decay_period)
    p.add_argument("--decay-factor", type=float, default=TrainConfig.decay_factor)
    p.set_defaults(func=_cmd_train_head)
    registry["train-head"] = p

    p = sub.add_parser("predict", parents=[common], help="localize every annotated image")
    p.add_argument("--head", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True, help="output predictions JSONL")
    p.add_argument("--mask-threshold", type=float, default=DEFAULT_MASK_THRESHOLD)
    p.add_argument("--threshold-mode", choices=[THRESHOLD_ABSOLUTE, THRESHOLD_RELATIVE],
                   default=THRESHOLD_ABSOLUTE)
    p.add_argument("--masks-out", default=None,
                   help="also write full-resolution probability masks into this directory")
    p.set_defaults(func=_cmd_predict)
    registry["predict"] = p

    p = sub.add_parser("eval-wsol", parents=[common], help="CorLoc (and Top-1 Loc when flags are present)")
    p.add_argument("--predictions", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", default="-", help="report path, - for stdout (default)")
    p.set_defaults(func=_cmd_eval_wsol)
    registry["eval-wsol"] = p

    p = sub.add_parser("score-proposals", parents=[common], help="objectness-score and filter proposals")
    p.add_argument("--masks", required=True, help="directory of full-resolution masks (predict --masks-out)")
    p.add_argument("--proposals", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True, help="output scored-proposal JSONL")
    p.add_argument("--threshold", type=float, default=None,
                   help=f"filter threshold (default {WSFL_MASK_THRESHOLD}, or {GT_MASK_THRESHOLD} with --gt-masks)")
    p.add_argument("--gt-masks", action="store_true",
                   help="masks come from groundtruth boxes; use the stricter default threshold")
    p.add_argument("--exempt", default="person,plant",
                   help="comma-separated classes never filtered (default person,plant)")
    p.set_defaults(func=_cmd_score_proposals)
    registry["score-proposals"] = p

    p = sub.add_parser("eval-map", parents=[common], help="VOC-style mean average precision")
    p.add_argument("--detections", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", default="-", help="report path, - for stdout (default)")
    p.add_argument("--iou-threshold", type=float, default=0.5)
    p.add_argument("--all-points", action="store_true",
                   help="integrate the full precision envelope instead of 11-point interpolation")
    p.set_defaults(func=_cmd_eval_map)
    registry["eval-map"] = p

    p = sub.add_parser("render-overlay", parents=[common], help="PNG heatmap overlays with boxes")
    p.add_argument("--predictions", required=True, help="predictions JSONL with mask_path entries")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_render_overlay)
    registry["render-overlay"] = p

    parser._wsfl_subparsers = registry  # type: ignore[attr-defined]
    return parser


def _read_config_file(path: str) -> list[tuple[str, str]]:
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("expected key=value", path=path, line=lineno)
            key, value = line.split("=", 1)
            pairs.append((key.strip(), value.strip()))
    return pairs


def _parse_bool(value: str, key: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise InvalidInputError(f"config key {key!r}: expected a boolean, got {value!r}")


def _apply_config(argv: list[str], parser: _Parser) -> list[str]:
    """Splice config-file values in as defaults, right after the subcommand.

    Explicit command-line flags come later in argv, so they win. Config keys
    that do not apply to the chosen subcommand are ignored.
    """
    config_path = None
    for i, tok in enumerate(argv):
        if tok == "--config":
            if i + 1 >= len(argv):
                raise _UsageError("--config needs a path")
            config_path = argv[i + 1]
        elif tok.startswith("--config="):
            config_path = tok.split("=", 1)[1]
    if config_path is None:
        return argv
    registry = getattr(parser, "_wsfl_subparsers", {})
    command = next((t for t in argv if not t.startswith("-")), None)
    if command is None or command not in registry:
        return argv  # let the parser report the real problem
    options: dict[str, argparse.Action] = {}
    for action in registry[command]._actions:
        for opt in action.option_strings:
            if opt.startswith("--"):
                options[opt[2:].replace("-", "_")] = action
    tokens: list[str] = []
    for key, value in _read_config_file(config_path):
        action = options.get(key.replace("-", "_"))
        if action is None or key.replace("-", "_") == "config":
            logger.debug("config key %r does not apply to %s; ignored", key, command)
            continue
        if isinstance(action, argparse._StoreTrueAction):
            if _parse_bool(value, key):
                tokens.append(action.option_strings[-1])
        else:
            tokens.extend([action.option_strings[-1], value])
    at = argv.index(command) + 1
    return argv[:at] + tokens + argv[at:]


def cli_dispatch(argv: Sequence[str]) -> int:
    """Run one command line. Returns the process exit code."""
    _setup_logging()
    parser = build_parser()
    try:
        merged = _apply_config(list(argv), parser)
        args = parser.parse_args(merged)
        if getattr(args, "command", None) is None:
            parser.print_usage(sys.stderr)
            print("wsfl: a subcommand is required", file=sys.stderr)
            return EXIT_VALIDATION
        return args.func(args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"wsfl: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SystemExit as exc:  # argparse --help
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except (InvalidInputError, DegenerateModelError) as exc:
        logger.error("%s", exc)
        return EXIT_VALIDATION
    except ParseError as exc:
        logger.error("%s", exc)
        return EXIT_IO
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_IO


def main(argv: Sequence[str] | None = None) -> int:
    return cli_dispatch(sys.argv[1:] if argv is None else list(argv))


if __name__ == "__main__":
    sys.exit(main())
