"""The auto-labeling cascade for one RGB-D frame.

Candidates come from depth alone: points off the table plane are clustered,
sized against the known glass heights, and then pushed through a chain of
cheap vetoes (cap color in CIELAB, an external glass verifier, a promptable
segmenter, a mask width sanity check). Each stage may only drop or annotate
candidates, never invent new ones.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .camera import BehindCameraError, CameraProfile, project_points
from .color import srgb_to_cielab_array
from .geometry import (
    DepthFrame,
    GeometryError,
    Plane,
    PointCloud,
    cluster_height,
    cluster_plane_offset,
    cluster_points,
    deproject_depth,
    fit_plane_ransac,
    project_point_to_plane,
)
from .masks import Mask, MaskError, mask_to_bbox
from .plugins.ports import PluginError


@dataclass(frozen=True)
class GlassClassSpec:
    """One labelable glass type: category id, display name, physical size."""

    id: int
    name: str
    height: float
    diameter: float

    def __post_init__(self):
        if self.height <= 0 or self.diameter <= 0:
            raise ValueError(f"class '{self.name}' must have positive height and diameter")


def default_glass_classes() -> list[GlassClassSpec]:
    """The six stock glass types; sizes are rig configuration, not constants."""
    return [
        GlassClassSpec(1, "high beer glass", height=0.22, diameter=0.070),
        GlassClassSpec(2, "beer glass with a handle", height=0.15, diameter=0.085),
        GlassClassSpec(3, "wine glass", height=0.18, diameter=0.075),
        GlassClassSpec(4, "water glass", height=0.12, diameter=0.075),
        GlassClassSpec(5, "whiskey glass", height=0.09, diameter=0.080),
        GlassClassSpec(6, "shot glass", height=0.06, diameter=0.045),
    ]


def keypoint_category_id(classes) -> int:
    """The reserved extra category that carries base-point boxes."""
    return max(c.id for c in classes) + 1


@dataclass
class ColorGate:
    """CIELAB acceptance box for cap pixels."""

    L_range: tuple = (20.0, 95.0)
    a_range: tuple = (-128.0, -20.0)
    b_range: tuple = (5.0, 128.0)
    min_fraction: float = 0.6

    def __post_init__(self):
        for lo, hi in (self.L_range, self.a_range, self.b_range):
            if hi < lo:
                raise ValueError("color gate interval is empty")
        if not 0.0 < self.min_fraction <= 1.0:
            raise ValueError("min_fraction must be in (0, 1]")


@dataclass
class PipelineConfig:
    deviation_threshold: float = 0.01  # meters above the table to count as object
    cluster_eps: float = 0.02
    cluster_min_points: int = 20
    ransac_threshold: float = 0.005
    ransac_iterations: int = 500
    height_tolerance: float = 0.015
    height_tolerance_overrides: dict = field(default_factory=dict)  # class id -> meters
    top_percentile: float = 95.0
    cap_band: float = 0.2  # top fraction of the cluster treated as cap
    footprint_samples: int = 64
    verify_iou: float = 0.5
    mask_width_factor: float = 1.5
    strict: bool = False
    seed: int = 0
    keypoint_boxes: bool = False
    keypoint_box_size: int = 12
    gate: ColorGate = field(default_factory=ColorGate)


@dataclass
class ClusterCandidate:
    cluster: object
    height: float
    class_id: Optional[int] = None
    footprint_pixels: Optional[np.ndarray] = None
    cap_pixels: Optional[np.ndarray] = None
    color_ok: Optional[bool] = None
    verifier_ok: Optional[bool] = None
    verifier_score: float = 1.0


@dataclass
class Annotation:
    class_id: int
    bbox: tuple  # (x, y, w, h) pixels
    mask: Optional[Mask]
    score: float
    camera: str
    scene_id: str = ""
    frame_id: str = ""
    clipped: bool = False

    def __post_init__(self):
        x, y, w, h = self.bbox
        if w <= 0 or h <= 0:
            raise ValueError("bbox must have positive width and height")
        self.bbox = (float(x), float(y), float(w), float(h))


@dataclass
class StageCounts:
    candidates: int = 0
    height_classified: int = 0
    color_passed: int = 0
    verifier_passed: int = 0
    segmented: int = 0
    accepted: int = 0

    def as_sequence(self):
        return (
            self.candidates,
            self.height_classified,
            self.color_passed,
            self.verifier_passed,
            self.segmented,
            self.accepted,
        )


@dataclass
class FrameReport:
    camera: str = ""
    frame_id: str = ""
    counts: StageCounts = field(default_factory=StageCounts)
    errors: list = field(default_factory=list)  # (candidate index, stage, message)
    dropped: list = field(default_factory=list)  # (candidate index, stage)

    def record_error(self, idx, stage, message):
        self.errors.append((idx, stage, str(message)))

    def record_drop(self, idx, stage):
        self.dropped.append((idx, stage))


@dataclass
class FrameInput:
    """Everything the cascade needs for one camera view of one scene."""

    camera: CameraProfile
    depth: DepthFrame  # capped pass
    capped_color: np.ndarray  # HxWx3 uint8, capped pass
    clean_image_path: str  # annotation attach target, passed to ports
    scene_id: str = ""
    frame_id: str = ""


def extract_candidates(cloud: PointCloud, table: Plane, cfg: PipelineConfig) -> list[ClusterCandidate]:
    """Cluster points standing above the table and size each cluster."""
    signed = table.signed_distance(cloud.points) if len(cloud) else np.empty(0)
    above = signed > cfg.deviation_threshold
    if not above.any():
        return []
    off_plane = PointCloud(cloud.points[above], frame=cloud.frame)
    clusters = cluster_points(off_plane, eps=cfg.cluster_eps, min_points=cfg.cluster_min_points)
    original_idx = np.nonzero(above)[0]
    candidates = []
    for cl in clusters:
        cl.indices = original_idx[cl.indices]  # back into the full cloud
        d_prime = cluster_plane_offset(cl, cloud, table, percentile=cfg.top_percentile)
        cl.plane_offset = d_prime
        candidates.append(ClusterCandidate(cluster=cl, height=cluster_height(d_prime, table)))
    candidates.sort(key=lambda c: (c.cluster.centroid[0], c.cluster.centroid[1]))
    return candidates


def assign_class_by_height(h: float, classes, tol: float) -> Optional[int]:
    """Closest class by height, or None when nothing is within tolerance.

    Ties go to the smaller class id.
    """
    if not classes:
        raise ValueError("class list is empty")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    best_id = None
    best_dev = None
    for spec in sorted(classes, key=lambda c: c.id):
        dev = abs(h - spec.height)
        if best_dev is None or dev < best_dev:
            best_dev = dev
            best_id = spec.id
    return best_id if best_dev <= tol else None


def verify_color(image: np.ndarray, footprint_pixels, gate: ColorGate) -> bool:
    """True when enough sampled pixels land inside the CIELAB gate box."""
    px = np.asarray(footprint_pixels, dtype=np.float64).reshape(-1, 2)
    if px.shape[0] == 0:
        raise ValueError("footprint is empty")
    h, w = image.shape[:2]
    u = np.clip(np.rint(px[:, 0]).astype(int), 0, w - 1)
    v = np.clip(np.rint(px[:, 1]).astype(int), 0, h - 1)
    lab = srgb_to_cielab_array(image[v, u].astype(np.float64))
    ok = (
        (lab[:, 0] >= gate.L_range[0]) & (lab[:, 0] <= gate.L_range[1])
        & (lab[:, 1] >= gate.a_range[0]) & (lab[:, 1] <= gate.a_range[1])
        & (lab[:, 2] >= gate.b_range[0]) & (lab[:, 2] <= gate.b_range[1])
    )
    return float(ok.mean()) >= gate.min_fraction


def bbox_iou(a, b) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix0 = max(ax, bx)
    iy0 = max(ay, by)
    ix1 = min(ax + aw, bx + bw)
    iy1 = min(ay + ah, by + bh)
    iw = max(0.0, ix1 - ix0)
    ih = max(0.0, iy1 - iy0)
    inter = iw * ih
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


def verify_with_detector(image_path, bbox_hint, class_names, verifier, iou_threshold: float = 0.5):
    """Ask the verifier port for glass-like detections near the hint.

    Returns (passed, score); PluginError propagates for the caller's
    strict-mode policy.
    """
    detections = verifier.verify(image_path, points=None, bbox_hint=bbox_hint, class_names=class_names)
    best = 0.0
    passed = False
    for det in detections:
        if bbox_iou(det.bbox, bbox_hint) >= iou_threshold:
            passed = True
            best = max(best, float(det.score))
    return passed, best


def prompt_segmenter(image_path, sample_points, segmenter, image_size) -> Mask:
    """Point-prompt the segmenter port; the mock fills the sample hull."""
    pts = np.asarray(sample_points, dtype=np.float64).reshape(-1, 2)
    w, h = image_size
    inside = (pts[:, 0] >= -0.5) & (pts[:, 0] < w - 0.5) & (pts[:, 1] >= -0.5) & (pts[:, 1] < h - 0.5)
    if not inside.any():
        raise ValueError("no sample point falls inside the image")
    mask = segmenter.segment(image_path, pts[inside].tolist())
    if mask.area == 0:
        raise MaskError("segmenter returned an empty mask")
    return mask


def filter_mask(mask: Mask, glass: GlassClassSpec, cam: CameraProfile, base_point,
                width_factor: float = 1.5, table: Optional[Plane] = None) -> bool:
    """Reject masks wider than the class plausibly projects at that depth.

    Merged neighboring glasses show up as one overly wide mask. With a table
    plane the expected width is the projected width of the class cylinder
    standing at the base point (tall off-axis glasses shear wider than their
    diameter); without one it falls back to the diameter at the base point's
    camera depth. The factor boundary is inclusive (ratio == width_factor
    passes).
    """
    if mask.area == 0:
        raise MaskError("mask has no set pixels")
    _, _, mask_w, _ = mask_to_bbox(mask)
    z = float(cam.world_to_camera(np.asarray(base_point))[0][2])
    if z <= 0:
        raise BehindCameraError("base point is behind the camera")
    expected_w = cam.fx * glass.diameter / z
    if table is not None:
        box = _cylinder_bbox(base_point, glass, table.normal / table.norm, cam)
        if box is not None:
            expected_w = max(expected_w, box[2])
    return mask_w <= width_factor * expected_w


def farthest_point_subsample(points: np.ndarray, count: int) -> np.ndarray:
    """Greedy spread-maximizing subsample; keeps extremes early."""
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    if n <= count:
        return pts
    chosen = [int(np.argmin(pts[:, 1] * 1e6 + pts[:, 0]))]  # deterministic start: top-most, then left-most
    dist = np.linalg.norm(pts - pts[chosen[0]], axis=1)
    for _ in range(count - 1):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(pts - pts[nxt], axis=1))
    return pts[np.array(chosen)]


def _project_in_bounds(points_world, cam) -> np.ndarray:
    pixels, valid = project_points(points_world, cam)
    keep = valid.copy()
    keep &= (pixels[:, 0] >= -0.5) & (pixels[:, 0] < cam.width - 0.5)
    keep &= (pixels[:, 1] >= -0.5) & (pixels[:, 1] < cam.height - 0.5)
    return pixels[keep]


def label_frame(frame: FrameInput, table: Optional[Plane], classes, cfg: PipelineConfig, ports):
    """Run the full cascade over one frame.

    Returns (annotations, report). Per-candidate failures are recorded in the
    report; they never abort the frame.
    """
    from .basepoints import compute_base_point, to_keypoint_annotation

    cam = frame.camera
    report = FrameReport(camera=cam.name, frame_id=frame.frame_id)

    cloud_cam = deproject_depth(frame.depth, cam)
    world_pts = (cloud_cam.points - cam.t) @ cam.R  # R^T (p - t), vectorized
    cloud = PointCloud(world_pts, frame="world")

    if table is None:
        table, _ = fit_plane_ransac(
            cloud, inlier_threshold=cfg.ransac_threshold,
            iterations=cfg.ransac_iterations, seed=cfg.seed,
        )

    candidates = extract_candidates(cloud, table, cfg)
    report.counts.candidates = len(candidates)

    class_names = [c.name for c in classes]
    class_by_id = {c.id: c for c in classes}
    annotations = []

    for idx, cand in enumerate(candidates):
        nearest = min(sorted(classes, key=lambda c: c.id), key=lambda c: abs(cand.height - c.height))
        tol = cfg.height_tolerance_overrides.get(nearest.id, cfg.height_tolerance)
        cand.class_id = assign_class_by_height(cand.height, classes, tol)
        if cand.class_id is None:
            report.record_drop(idx, "height")
            continue
        report.counts.height_classified += 1
        glass = class_by_id[cand.class_id]

        member_pts = cloud.points[cand.cluster.indices]
        signed = table.signed_distance(member_pts)
        side = 1.0 if float(np.median(signed)) >= 0.0 else -1.0
        heights = side * signed
        cap_cut = (1.0 - cfg.cap_band) * float(heights.max())
        cap_pts = member_pts[heights >= cap_cut]

        footprint = _project_in_bounds(member_pts, cam)
        cap_px = _project_in_bounds(cap_pts, cam)
        if footprint.shape[0] == 0 or cap_px.shape[0] == 0:
            report.record_drop(idx, "projection")
            continue
        cand.footprint_pixels = farthest_point_subsample(footprint, cfg.footprint_samples)
        cand.cap_pixels = farthest_point_subsample(cap_px, cfg.footprint_samples)

        cand.color_ok = verify_color(frame.capped_color, cand.cap_pixels, cfg.gate)
        if not cand.color_ok:
            report.record_drop(idx, "color")
            continue
        report.counts.color_passed += 1

        x0 = float(cand.footprint_pixels[:, 0].min())
        y0 = float(cand.footprint_pixels[:, 1].min())
        hint = (x0, y0,
                float(cand.footprint_pixels[:, 0].max()) - x0,
                float(cand.footprint_pixels[:, 1].max()) - y0)
        try:
            cand.verifier_ok, cand.verifier_score = verify_with_detector(
                frame.clean_image_path, hint, class_names, ports.verifier, cfg.verify_iou)
        except PluginError as exc:
            report.record_error(idx, "verifier", exc)
            if cfg.strict:
                report.record_drop(idx, "verifier")
                continue
            cand.verifier_ok = False
            cand.verifier_score = 1.0
        else:
            if not cand.verifier_ok:
                report.record_drop(idx, "verifier")
                continue
        report.counts.verifier_passed += 1

        try:
            mask = prompt_segmenter(
                frame.clean_image_path, cand.footprint_pixels, ports.segmenter,
                image_size=(cam.width, cam.height))
        except (PluginError, MaskError, ValueError) as exc:
            report.record_error(idx, "segmenter", exc)
            report.record_drop(idx, "segmenter")
            continue
        report.counts.segmented += 1

        cap_centroid = cap_pts.mean(axis=0)
        _, base_world = project_point_to_plane(cap_centroid, table)
        if not filter_mask(mask, glass, cam, base_world, cfg.mask_width_factor, table=table):
            report.record_drop(idx, "mask_width")
            continue

        bbox = mask_to_bbox(mask)
        annotations.append(Annotation(
            class_id=cand.class_id,
            bbox=bbox,
            mask=mask,
            score=float(cand.verifier_score),
            camera=cam.name,
            scene_id=frame.scene_id,
            frame_id=frame.frame_id,
        ))
        report.counts.accepted += 1

        if cfg.keypoint_boxes:
            try:
                bp = compute_base_point(cap_pts, table, cam)
            except (GeometryError, BehindCameraError) as exc:
                report.record_error(idx, "basepoint", exc)
                continue
            kp = to_keypoint_annotation(
                bp, cfg.keypoint_box_size, keypoint_category_id(classes),
                camera=cam.name, scene_id=frame.scene_id, frame_id=frame.frame_id,
                image_size=(cam.width, cam.height), score=float(cand.verifier_score),
            )
            if kp is None:
                report.record_error(idx, "basepoint", "base pixel outside image")
            else:
                annotations.append(kp)

    return annotations, report


def project_annotations(annotations, cam_from: CameraProfile, cam_to: CameraProfile,
                        table: Plane, classes, keypoint_box_size: int = 12):
    """Re-express detections in another calibrated view via the table plane.

    Boxes are rebuilt from each class's physical cylinder at the transferred
    base point; masks do not transfer and are flagged absent.
    """
    from .camera import cast_ray_to_plane, transfer_pixel
    from .camera import CameraError

    class_by_id = {c.id: c for c in classes}
    kp_id = keypoint_category_id(classes)
    out = []
    dropped = []
    n_hat = table.normal / table.norm
    _, from_foot = project_point_to_plane(cam_from.center, table)

    for i, ann in enumerate(annotations):
        x, y, w, h = ann.bbox
        try:
            if ann.class_id == kp_id:
                center = (x + w / 2.0, y + h / 2.0)
                target_px, in_bounds = transfer_pixel(center, cam_from, cam_to, table)
                if not in_bounds:
                    dropped.append((i, "out_of_view"))
                    continue
                bbox = (target_px[0] - keypoint_box_size / 2.0,
                        target_px[1] - keypoint_box_size / 2.0,
                        float(keypoint_box_size), float(keypoint_box_size))
            else:
                glass = class_by_id.get(ann.class_id)
                if glass is None:
                    dropped.append((i, "unknown_class"))
                    continue
                # The bottom-center ray lands on the camera-facing hull, so
                # the cylinder axis sits one radius beyond it along the table.
                hull_pt = cast_ray_to_plane((x + w / 2.0, y + h), cam_from, table)
                away = hull_pt - from_foot
                away_n = float(np.linalg.norm(away))
                base = hull_pt + (away / away_n) * (glass.diameter / 2.0) if away_n > 1e-9 else hull_pt
                bbox = _cylinder_bbox(base, glass, n_hat, cam_to)
                if bbox is None:
                    dropped.append((i, "out_of_view"))
                    continue
            out.append(Annotation(
                class_id=ann.class_id, bbox=bbox, mask=None, score=ann.score,
                camera=cam_to.name, scene_id=ann.scene_id, frame_id=ann.frame_id,
            ))
        except CameraError:
            dropped.append((i, "behind_camera"))
    return out, dropped


def _cylinder_bbox(base, glass, n_hat, cam, n_angles: int = 32):
    """Image bounds of the class cylinder standing at a table point."""
    base = np.asarray(base, dtype=np.float64)
    # Two table-parallel axes orthogonal to the plane normal.
    seed = np.array([1.0, 0.0, 0.0])
    if abs(float(seed @ n_hat)) > 0.9:
        seed = np.array([0.0, 1.0, 0.0])
    u = np.cross(n_hat, seed)
    u /= np.linalg.norm(u)
    v = np.cross(n_hat, u)
    r = glass.diameter / 2.0
    angles = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)
    ring = base + r * (np.outer(np.cos(angles), u) + np.outer(np.sin(angles), v))
    pts = np.vstack([ring, ring + glass.height * n_hat, base[None, :], base + glass.height * n_hat])
    pixels, valid = project_points(pts, cam)
    if not valid.all():
        return None
    x0, y0 = pixels.min(axis=0)
    x1, y1 = pixels.max(axis=0)
    if x1 < -0.5 or y1 < -0.5 or x0 >= cam.width - 0.5 or y0 >= cam.height - 0.5:
        return None
    return (float(x0), float(y0), float(x1 - x0), float(y1 - y0))
