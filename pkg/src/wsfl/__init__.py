"""Weakly supervised foreground learning on precomputed feature grids.

The pipeline: fit a per-category co-localization axis to get one pseudo box
per image (ddt), rasterize boxes into grid-resolution training masks
(pseudo_masks), train a per-position sigmoid classifier on them (head),
upsample and threshold its output into boxes (wsol) or score object
proposals with it (wsod), and evaluate with CorLoc / Top-1 Loc / VOC mAP
(metrics). fileio defines the on-disk formats, synth generates seeded
datasets with known groundtruth, and cli ties the stages together.
"""

from .core import (
    BBox,
    BinaryMask,
    Component,
    FeatureMap,
    ImageDims,
    ProbMask,
    bilinear_upsample,
    binarize,
    connected_components,
    largest_component_bbox,
)
from .ddt import DdtModel, ddt_project, ddt_pseudo_box, fit_ddt
from .errors import DegenerateModelError, InvalidInputError, ParseError, WsflError
from .head import PixelHead, TrainConfig, bce_grad, bce_loss, head_forward, init_head, train_head
from .metrics import (
    ClsFlag,
    DetectionRecord,
    GroundTruthRecord,
    corloc,
    iou,
    top1_loc,
    voc_map,
)
from .pseudo_masks import MaskGrid, boxes_to_hr_mask, boxes_to_lr_mask, generate_training_masks
from .synth import SynthSpec, synth_generate
from .wsod import (
    DEFAULT_EXEMPT_CLASSES,
    GT_MASK_THRESHOLD,
    WSFL_MASK_THRESHOLD,
    Proposal,
    ScoredProposal,
    filter_proposals,
    proposal_objectness,
)
from .wsol import LocalizationResult, localize_dataset, localize_image

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "BinaryMask",
    "ClsFlag",
    "Component",
    "DEFAULT_EXEMPT_CLASSES",
    "DdtModel",
    "DegenerateModelError",
    "DetectionRecord",
    "FeatureMap",
    "GT_MASK_THRESHOLD",
    "GroundTruthRecord",
    "ImageDims",
    "InvalidInputError",
    "LocalizationResult",
    "MaskGrid",
    "ParseError",
    "PixelHead",
    "ProbMask",
    "Proposal",
    "ScoredProposal",
    "SynthSpec",
    "TrainConfig",
    "WSFL_MASK_THRESHOLD",
    "WsflError",
    "bce_grad",
    "bce_loss",
    "bilinear_upsample",
    "binarize",
    "boxes_to_hr_mask",
    "boxes_to_lr_mask",
    "connected_components",
    "corloc",
    "ddt_project",
    "ddt_pseudo_box",
    "filter_proposals",
    "fit_ddt",
    "generate_training_masks",
    "head_forward",
    "init_head",
    "iou",
    "largest_component_bbox",
    "localize_dataset",
    "localize_image",
    "proposal_objectness",
    "synth_generate",
    "top1_loc",
    "train_head",
    "voc_map",
]
