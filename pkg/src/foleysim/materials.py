"""Per-plane material labels derived from a per-pixel label image.

The segmentation itself is an offline input: an 8-bit grayscale PNG whose
pixel values map to labels by a fixed table (0=Unknown, 1=Wood, 2=Carpet,
3=Concrete, 4=Paper, 5=Metal, 6=Glass). This module aggregates those pixels
into one label per plane mask.

Aggregation rule: majority label over the mask's pixels, ignoring Unknown
pixels. The result is Unknown when the mask is empty, when Unknown pixels
make up at least half the mask, or when the winning label covers less than
30% of the non-Unknown pixels. Ties break by enumeration order.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import OutOfBounds, ParseError


class MaterialLabel(Enum):
    WOOD = "wood"
    CARPET = "carpet"
    CONCRETE = "concrete"
    PAPER = "paper"
    METAL = "metal"
    GLASS = "glass"
    UNKNOWN = "unknown"


# Pixel value -> label, fixed file-format table.
PIXEL_TO_LABEL = {
    0: MaterialLabel.UNKNOWN,
    1: MaterialLabel.WOOD,
    2: MaterialLabel.CARPET,
    3: MaterialLabel.CONCRETE,
    4: MaterialLabel.PAPER,
    5: MaterialLabel.METAL,
    6: MaterialLabel.GLASS,
}
LABEL_TO_PIXEL = {label: value for value, label in PIXEL_TO_LABEL.items()}

# Enumeration order used for tie-breaking, Unknown excluded.
VOTE_ORDER = (
    MaterialLabel.WOOD,
    MaterialLabel.CARPET,
    MaterialLabel.CONCRETE,
    MaterialLabel.PAPER,
    MaterialLabel.METAL,
    MaterialLabel.GLASS,
)

_NAMES = {
    MaterialLabel.WOOD: "wood",
    MaterialLabel.CARPET: "carpet",
    MaterialLabel.CONCRETE: "concrete",
    MaterialLabel.PAPER: "paper",
    MaterialLabel.METAL: "metal",
    MaterialLabel.GLASS: "glass",
    MaterialLabel.UNKNOWN: "unknown surface",
}


def material_name(label: MaterialLabel) -> str:
    """Lowercase noun phrase used in rendered event text."""
    return _NAMES[label]


def material_from_token(token: str) -> MaterialLabel:
    try:
        return MaterialLabel(token)
    except ValueError as exc:
        raise ParseError(f"unknown material token {token!r}") from exc


@dataclass(frozen=True)
class LabelImage:
    """Row-major grid of label codes (uint8, shape (height, width))."""

    width: int
    height: int
    codes: np.ndarray

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ParseError("label image dimensions must be positive")
        if self.codes.shape != (self.height, self.width):
            raise ParseError("label grid shape does not match width x height")

    def label_at(self, x: int, y: int) -> MaterialLabel:
        return PIXEL_TO_LABEL[int(self.codes[y, x])]


def load_label_image(path: str | Path) -> LabelImage:
    try:
        img = Image.open(path)
    except OSError as exc:
        raise ParseError(f"cannot read label image {path}: {exc}") from exc
    if img.mode != "L":
        raise ParseError(f"{path}: label image must be 8-bit grayscale, got mode {img.mode}")
    codes = np.asarray(img, dtype=np.uint8)
    if codes.size and codes.max() > max(PIXEL_TO_LABEL):
        raise ParseError(f"{path}: pixel value {int(codes.max())} has no label mapping")
    return LabelImage(width=img.width, height=img.height, codes=codes)


def save_label_image(image: LabelImage, path: str | Path) -> None:
    Image.fromarray(image.codes, mode="L").save(path)


@dataclass(frozen=True)
class PlaneMask:
    """Pixel set of one plane's footprint in the label image. May be empty."""

    plane_id: str
    pixels: frozenset[tuple[int, int]]

    @staticmethod
    def from_reference(plane_id: str, ref: object) -> "PlaneMask":
        """Build from a scene-file mask reference.

        Accepted forms: {"rect": [x, y, w, h]} or {"pixels": [[x, y], ...]}.
        """
        if isinstance(ref, dict) and "rect" in ref:
            x0, y0, w, h = (int(v) for v in ref["rect"])
            pixels = frozenset((x, y) for y in range(y0, y0 + h) for x in range(x0, x0 + w))
        elif isinstance(ref, dict) and "pixels" in ref:
            pixels = frozenset((int(p[0]), int(p[1])) for p in ref["pixels"])
        else:
            raise ParseError(f"plane_masks[{plane_id}]: expected a 'rect' or 'pixels' mask")
        return PlaneMask(plane_id=plane_id, pixels=pixels)


def assign_plane_materials(
    image: LabelImage, masks: list[PlaneMask]
) -> dict[str, MaterialLabel]:
    """One label per plane by thresholded majority vote over its mask pixels."""
    result: dict[str, MaterialLabel] = {}
    for mask in masks:
        result[mask.plane_id] = _vote(image, mask)
    return result


def _vote(image: LabelImage, mask: PlaneMask) -> MaterialLabel:
    if not mask.pixels:
        return MaterialLabel.UNKNOWN
    xs = np.fromiter((p[0] for p in mask.pixels), dtype=np.int64, count=len(mask.pixels))
    ys = np.fromiter((p[1] for p in mask.pixels), dtype=np.int64, count=len(mask.pixels))
    bad = (xs < 0) | (xs >= image.width) | (ys < 0) | (ys >= image.height)
    if bad.any():
        i = int(np.argmax(bad))
        raise OutOfBounds(
            f"mask for plane {mask.plane_id!r}: pixel ({int(xs[i])}, {int(ys[i])})"
            f" outside {image.width}x{image.height} image"
        )
    codes = image.codes[ys, xs]
    counts = np.bincount(codes, minlength=len(PIXEL_TO_LABEL))
    total = len(mask.pixels)
    unknown = int(counts[LABEL_TO_PIXEL[MaterialLabel.UNKNOWN]])
    if 2 * unknown >= total:
        return MaterialLabel.UNKNOWN
    known = total - unknown
    # argmax over VOTE_ORDER resolves ties toward the earlier enumeration entry.
    material_counts = [int(counts[LABEL_TO_PIXEL[m]]) for m in VOTE_ORDER]
    best = max(range(len(VOTE_ORDER)), key=lambda i: (material_counts[i], -i))
    if material_counts[best] * 10 < 3 * known:
        return MaterialLabel.UNKNOWN
    return VOTE_ORDER[best]
