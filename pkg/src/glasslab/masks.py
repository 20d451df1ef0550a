"""Binary segmentation masks: RLE codec, tight boxes, convex hull fill."""

from dataclasses import dataclass, field

import numpy as np


class MaskError(ValueError):
    pass


@dataclass
class Mask:
    width: int
    height: int
    bitmap: np.ndarray = field(repr=False)

    def __post_init__(self):
        bm = np.asarray(self.bitmap, dtype=bool)
        if bm.shape != (self.height, self.width):
            raise MaskError(f"bitmap shape {bm.shape} != (height={self.height}, width={self.width})")
        self.bitmap = bm

    @property
    def area(self) -> int:
        return int(self.bitmap.sum())

    def to_rle(self) -> dict:
        """Row-major RLE: alternating run counts starting with a zero-run."""
        flat = self.bitmap.ravel().astype(np.int8)
        if flat.size == 0:
            return {"counts": [], "size": [self.height, self.width]}
        changes = np.nonzero(np.diff(flat))[0] + 1
        bounds = np.concatenate([[0], changes, [flat.size]])
        counts = np.diff(bounds).tolist()
        if flat[0] == 1:
            counts = [0] + counts
        return {"counts": counts, "size": [self.height, self.width]}

    @classmethod
    def from_rle(cls, rle: dict) -> "Mask":
        h, w = int(rle["size"][0]), int(rle["size"][1])
        counts = rle["counts"]
        total = int(sum(counts))
        if total != h * w:
            raise MaskError(f"RLE counts sum to {total}, expected {h * w}")
        flat = np.zeros(h * w, dtype=bool)
        pos = 0
        val = False
        for c in counts:
            if val:
                flat[pos:pos + c] = True
            pos += int(c)
            val = not val
        return cls(width=w, height=h, bitmap=flat.reshape(h, w))


def mask_to_bbox(mask: Mask) -> tuple[int, int, int, int]:
    """Tight (x, y, w, h) bounds of the set pixels."""
    rows = np.any(mask.bitmap, axis=1)
    cols = np.any(mask.bitmap, axis=0)
    if not rows.any():
        raise MaskError("mask has no set pixels")
    y0, y1 = np.nonzero(rows)[0][[0, -1]]
    x0, x1 = np.nonzero(cols)[0][[0, -1]]
    return int(x0), int(y0), int(x1 - x0 + 1), int(y1 - y0 + 1)


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain hull, counter-clockwise in image coordinates.

    Degenerate inputs (single point, collinear set) return the endpoints.
    """
    pts = np.unique(np.asarray(points, dtype=np.float64).reshape(-1, 2), axis=0)
    if pts.shape[0] <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def fill_convex_hull(points: np.ndarray, width: int, height: int) -> Mask:
    """Rasterize the filled convex hull of 2D points onto a binary grid.

    A pixel is set when its center lies inside or on the hull boundary.
    """
    hull = convex_hull(points)
    bitmap = np.zeros((height, width), dtype=bool)
    if hull.shape[0] == 0:
        return Mask(width=width, height=height, bitmap=bitmap)
    if hull.shape[0] == 1:
        x, y = int(round(hull[0, 0])), int(round(hull[0, 1]))
        if 0 <= x < width and 0 <= y < height:
            bitmap[y, x] = True
        return Mask(width=width, height=height, bitmap=bitmap)

    x0 = max(int(np.floor(hull[:, 0].min())), 0)
    x1 = min(int(np.ceil(hull[:, 0].max())), width - 1)
    y0 = max(int(np.floor(hull[:, 1].min())), 0)
    y1 = min(int(np.ceil(hull[:, 1].max())), height - 1)
    if x1 < x0 or y1 < y0:
        return Mask(width=width, height=height, bitmap=bitmap)

    xs, ys = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
    inside = np.ones(xs.shape, dtype=bool)
    tol = 1e-9
    if hull.shape[0] == 2:
        # Collinear: keep pixels within half a pixel of the segment.
        a, b = hull
        ab = b - a
        denom = float(ab @ ab)
        tq = ((xs - a[0]) * ab[0] + (ys - a[1]) * ab[1]) / denom
        tq = np.clip(tq, 0.0, 1.0)
        dx = xs - (a[0] + tq * ab[0])
        dy = ys - (a[1] + tq * ab[1])
        inside = dx * dx + dy * dy <= 0.5**2
    else:
        for i in range(hull.shape[0]):
            a = hull[i]
            b = hull[(i + 1) % hull.shape[0]]
            # CCW hull: interior is the positive side of each edge.
            side = (b[0] - a[0]) * (ys - a[1]) - (b[1] - a[1]) * (xs - a[0])
            inside &= side >= -tol
    bitmap[y0:y1 + 1, x0:x1 + 1] = inside
    return Mask(width=width, height=height, bitmap=bitmap)
