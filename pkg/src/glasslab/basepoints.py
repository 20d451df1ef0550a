"""Glass base points and their confidence heatmaps.

A base point is where a glass touches the table: the cap centroid dropped
perpendicular onto the table plane, then projected into the image. Base
point proposals render into a heatmap as score-weighted Gaussian kernels,
and per-box local maxima recover the points.
"""

import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .camera import CameraProfile, project
from .geometry import GeometryError, Plane, project_point_to_plane
from .pipeline import Annotation

HEATMAP_MAGIC = b"GLHM"


@dataclass
class BasePoint:
    p: np.ndarray          # cap centroid, world meters
    p_proj: np.ndarray     # foot point on the table
    pixel: np.ndarray      # image location
    keypoint_box: Optional[tuple] = None  # set by to_keypoint_annotation


@dataclass(frozen=True)
class KeypointProposal:
    center: tuple  # (x_c, y_c) px
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"proposal score {self.score} outside [0, 1]")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))


@dataclass
class Heatmap:
    width: int
    height: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.height, self.width):
            raise ValueError(f"heatmap grid {vals.shape} != (height={self.height}, width={self.width})")
        if (vals < 0).any():
            raise ValueError("heatmap values must be non-negative")
        self.values = vals


def compute_base_point(cap_points, table: Plane, cam: CameraProfile) -> BasePoint:
    """Average the cap points and drop the centroid onto the table."""
    pts = np.asarray(getattr(cap_points, "points", cap_points), dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] == 0:
        raise GeometryError("cap point set is empty")
    p = pts.mean(axis=0)
    _, p_proj = project_point_to_plane(p, table)
    pixel = project(p_proj, cam)
    return BasePoint(p=p, p_proj=p_proj, pixel=pixel)


def to_keypoint_annotation(bp: BasePoint, box_size: int, category_id: int,
                           camera: str, image_size, scene_id: str = "",
                           frame_id: str = "", score: float = 1.0) -> Optional[Annotation]:
    """Fixed-size box centered on the base pixel, as an extra class.

    Returns None when the pixel itself is off the image. Boxes that merely
    poke past the edge stay unclipped and get the clipped flag, so the box
    center still encodes the base point.
    """
    if box_size < 1:
        raise ValueError("box_size must be >= 1")
    w, h = image_size
    u, v = float(bp.pixel[0]), float(bp.pixel[1])
    if not (-0.5 <= u < w - 0.5 and -0.5 <= v < h - 0.5):
        return None
    x = round(u - box_size / 2.0)
    y = round(v - box_size / 2.0)
    bp.keypoint_box = (x, y, box_size, box_size)
    clipped = x < 0 or y < 0 or x + box_size > w or y + box_size > h
    return Annotation(
        class_id=category_id,
        bbox=(x, y, box_size, box_size),
        mask=None,
        score=score,
        camera=camera,
        scene_id=scene_id,
        frame_id=frame_id,
        clipped=clipped,
    )


def render_heatmap(proposals, width: int, height: int, k: int = 15,
                   sigma: Optional[float] = None) -> Heatmap:
    """Sum score-weighted Gaussian kernels, each truncated to a k x k window.

    sigma defaults to k/6 so the kernel effectively vanishes at the window
    edge. Proposals accumulate in list order, which keeps rendering
    bit-reproducible.
    """
    if k < 1 or k % 2 == 0:
        raise ValueError("kernel size k must be odd and >= 1 (a window needs a center pixel)")
    if sigma is None:
        sigma = k / 6.0
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    values = np.zeros((height, width), dtype=np.float64)
    half = k // 2
    norm = 1.0 / (2.0 * np.pi * sigma * sigma)
    two_s2 = 2.0 * sigma * sigma
    for prop in proposals:
        xc, yc = prop.center
        px, py = int(round(xc)), int(round(yc))
        x0, x1 = max(px - half, 0), min(px + half, width - 1)
        y0, y1 = max(py - half, 0), min(py + half, height - 1)
        if x1 < x0 or y1 < y0:
            continue
        xs = np.arange(x0, x1 + 1, dtype=np.float64)
        ys = np.arange(y0, y1 + 1, dtype=np.float64)
        gx = (xs - xc) ** 2
        gy = (ys - yc) ** 2
        kernel = np.exp(-(gy[:, None] + gx[None, :]) / two_s2) * (norm * prop.score)
        values[y0:y1 + 1, x0:x1 + 1] += kernel
    return Heatmap(width=width, height=height, values=values)


def extract_base_points(heatmap: Heatmap, glass_boxes) -> list:
    """Per-box argmax of the heatmap; ties resolve to the smallest row, then
    column; boxes whose maximum is zero contribute no point."""
    points = []
    for box in glass_boxes:
        x, y, w, h = (int(round(v)) for v in box)
        x0 = max(x, 0)
        y0 = max(y, 0)
        x1 = min(x + w, heatmap.width)
        y1 = min(y + h, heatmap.height)
        if x1 <= x0 or y1 <= y0:
            continue
        window = heatmap.values[y0:y1, x0:x1]
        flat = int(np.argmax(window))  # first occurrence: smallest row, then column
        if window.ravel()[flat] <= 0.0:
            continue
        dy, dx = divmod(flat, window.shape[1])
        points.append((x0 + dx, y0 + dy))
    return points


def save_heatmap(heatmap: Heatmap, path) -> None:
    """Binary container: magic, uint32 width, uint32 height, float32 grid."""
    with open(path, "wb") as fh:
        fh.write(HEATMAP_MAGIC)
        fh.write(struct.pack("<II", heatmap.width, heatmap.height))
        fh.write(heatmap.values.astype("<f4").tobytes())


def load_heatmap(path) -> Heatmap:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != HEATMAP_MAGIC:
            raise ValueError(f"not a heatmap container (magic {magic!r})")
        width, height = struct.unpack("<II", fh.read(8))
        data = np.frombuffer(fh.read(width * height * 4), dtype="<f4")
        if data.size != width * height:
            raise ValueError("heatmap container is truncated")
    return Heatmap(width=width, height=height, values=data.reshape(height, width).astype(np.float64))


def heatmap_to_png(heatmap: Heatmap, path) -> None:
    """8-bit normalized grayscale PNG for visual inspection."""
    from PIL import Image

    peak = float(heatmap.values.max())
    if peak > 0:
        img = (heatmap.values / peak * 255.0).astype(np.uint8)
    else:
        img = np.zeros((heatmap.height, heatmap.width), dtype=np.uint8)
    Image.fromarray(img, mode="L").save(path)
