"""Cosmetic rendering of annotations (and optionally a heatmap) onto images."""

import numpy as np
from PIL import Image, ImageDraw

from .basepoints import Heatmap
from .masks import Mask

_PALETTE = [
    (230, 70, 70), (70, 160, 230), (90, 200, 90), (230, 180, 60),
    (180, 100, 220), (80, 210, 200), (240, 130, 180),
]


def _mask_outline(bitmap: np.ndarray) -> np.ndarray:
    inner = np.zeros_like(bitmap)
    inner[1:-1, 1:-1] = (
        bitmap[1:-1, 1:-1] & bitmap[:-2, 1:-1] & bitmap[2:, 1:-1]
        & bitmap[1:-1, :-2] & bitmap[1:-1, 2:]
    )
    return bitmap & ~inner


def render_overlay(image, annotations, heatmap: Heatmap | None = None,
                   class_names: dict | None = None, out_path=None) -> Image.Image:
    """Draw boxes, labels, and mask outlines; alpha-blend a normalized heatmap.

    Accepts a path or an RGB array. Purely cosmetic: nothing here feeds back
    into any exported data.
    """
    if isinstance(image, (str, bytes)) or hasattr(image, "__fspath__"):
        img = Image.open(image).convert("RGB")
    else:
        img = Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB")

    arr = np.array(img, dtype=np.float64)
    if heatmap is not None:
        peak = float(heatmap.values.max())
        if peak > 0:
            alpha = (heatmap.values / peak)[..., None]
            hot = np.array([255.0, 40.0, 40.0])
            arr = arr * (1.0 - 0.6 * alpha) + hot * 0.6 * alpha
    img = Image.fromarray(np.clip(arr, 0, 255).astype(np.uint8), mode="RGB")
    draw = ImageDraw.Draw(img)

    for ann in annotations:
        color = _PALETTE[(ann.class_id - 1) % len(_PALETTE)]
        x, y, w, h = ann.bbox
        draw.rectangle([x, y, x + w, y + h], outline=color, width=2)
        label = class_names.get(ann.class_id, str(ann.class_id)) if class_names else str(ann.class_id)
        draw.text((x + 2, max(y - 12, 0)), f"{label} {ann.score:.2f}", fill=color)
        if isinstance(ann.mask, Mask):
            edge = _mask_outline(ann.mask.bitmap)
            ys, xs = np.nonzero(edge)
            px = img.load()
            for yy, xx in zip(ys.tolist(), xs.tolist()):
                px[xx, yy] = color

    if out_path is not None:
        img.save(out_path)
    return img
