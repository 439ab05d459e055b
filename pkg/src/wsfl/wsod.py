"""Proposal objectness from foreground masks, and background filtering."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import AbstractSet, Sequence

from .core import BBox, ProbMask
from .errors import InvalidInputError

# Default score thresholds below which a proposal counts as background.
WSFL_MASK_THRESHOLD = 0.2  # masks predicted by a trained head
GT_MASK_THRESHOLD = 0.5    # masks rasterized from groundtruth boxes

# Classes whose proposals are never filtered, regardless of score.
DEFAULT_EXEMPT_CLASSES = frozenset({"person", "plant"})


@dataclass(frozen=True)
class Proposal:
    image_id: str
    box: BBox


@dataclass(frozen=True)
class ScoredProposal:
    """A proposal with its objectness, optional class label, and filter bit."""

    proposal: Proposal
    objectness: float
    class_name: str | None = None
    filtered: bool = False

    def __post_init__(self) -> None:
        if not (0.0 <= self.objectness <= 1.0):
            raise InvalidInputError(f"objectness must lie in [0, 1], got {self.objectness}")


def proposal_objectness(mask: ProbMask, proposal: Proposal) -> float:
    """Mean mask value over the proposal's pixels.

    The box rasterizes to integer pixels floor(x1) <= x < ceil(x2) (same for
    y), clipped to the mask. The mask must already be at image resolution; a
    proposal that rasterizes to zero pixels is invalid.
    """
    b = proposal.box
    x0 = max(0, math.floor(b.x1))
    x1 = min(mask.w, math.ceil(b.x2))
    y0 = max(0, math.floor(b.y1))
    y1 = min(mask.h, math.ceil(b.y2))
    if x0 >= x1 or y0 >= y1:
        raise InvalidInputError(
            f"proposal {b.as_list()} on image {proposal.image_id!r} rasterizes to zero pixels "
            f"within the {mask.h}x{mask.w} mask"
        )
    return float(mask.values[y0:y1, x0:x1].mean())


def filter_proposals(
    scored: Sequence[ScoredProposal],
    threshold: float,
    exempt_classes: AbstractSet[str] = frozenset(),
) -> list[ScoredProposal]:
    """Mark background proposals: filtered iff objectness < threshold (strict)
    and the proposal's class is not exempt. Order is preserved; nothing is
    dropped, callers decide what to do with filtered entries.
    """
    if not (0.0 <= threshold <= 1.0):
        raise InvalidInputError(f"filter threshold must lie in [0, 1], got {threshold}")
    out = []
    for sp in scored:
        exempt = sp.class_name is not None and sp.class_name in exempt_classes
        out.append(replace(sp, filtered=(sp.objectness < threshold) and not exempt))
    return out
