"""Synthetic tabletop renderer: analytic depth + color for test scenes.

Glasses are vertical cylinders on the z=0 table. Depth is exact ray-cast
geometry, so every downstream quantity (height, base point, silhouette box)
has a closed-form ground truth to compare against.
"""

from dataclasses import dataclass

import numpy as np

from .camera import CameraProfile, project_points
from .geometry import Plane
from .pipeline import GlassClassSpec
from .scene import write_color, write_depth

TABLE_RGB = (120, 120, 120)
GLASS_BODY_RGB = (178, 188, 198)
CAP_RGB = (40, 200, 60)
CHALK_RGB = (224, 221, 216)

TABLE_PLANE = Plane(0.0, 0.0, 1.0, 0.0)


@dataclass(frozen=True)
class CylinderGlass:
    glass: GlassClassSpec
    x: float
    y: float

    @property
    def radius(self) -> float:
        return self.glass.diameter / 2.0

    @property
    def height(self) -> float:
        return self.glass.height


def _pixel_rays(cam: CameraProfile):
    """Unit ray directions for every pixel (distortion-free intrinsics)."""
    u, v = np.meshgrid(np.arange(cam.width, dtype=np.float64),
                       np.arange(cam.height, dtype=np.float64))
    x = (u - cam.cx) / cam.fx
    y = (v - cam.cy) / cam.fy
    dirs_cam = np.stack([x, y, np.ones_like(x)], axis=-1)
    dirs_cam /= np.linalg.norm(dirs_cam, axis=-1, keepdims=True)
    dirs_world = dirs_cam @ cam.R  # R^T applied row-wise
    return dirs_world, dirs_cam[..., 2]


def _intersect_plane(origin, dirs) -> np.ndarray:
    dz = dirs[..., 2]
    t = np.where(np.abs(dz) > 1e-12, -origin[2] / np.where(np.abs(dz) > 1e-12, dz, 1.0), np.inf)
    return np.where(t > 0, t, np.inf)


def _intersect_cylinder(origin, dirs, cyl: CylinderGlass):
    """Nearest hit with the capped cylinder; returns (t, is_cap_top)."""
    ox, oy, oz = origin
    dx = dirs[..., 0]
    dy = dirs[..., 1]
    dz = dirs[..., 2]
    cx, cy = cyl.x, cyl.y
    r = cyl.radius

    a = dx * dx + dy * dy
    fx = ox - cx
    fy = oy - cy
    b = 2.0 * (fx * dx + fy * dy)
    c = fx * fx + fy * fy - r * r
    disc = b * b - 4.0 * a * c
    hit_t = np.full(dirs.shape[:2], np.inf)

    ok = (disc >= 0) & (a > 1e-15)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    for sign in (-1.0, 1.0):  # near root first; far root covers rays inside the wall
        t = np.where(ok, (-b + sign * sq) / (2.0 * a), np.inf)
        z = oz + t * dz
        valid = ok & (t > 0) & (z >= 0.0) & (z <= cyl.height)
        hit_t = np.where(valid & (t < hit_t), t, hit_t)

    # Top disk.
    t_cap = np.where(np.abs(dz) > 1e-12, (cyl.height - oz) / np.where(np.abs(dz) > 1e-12, dz, 1.0), np.inf)
    px = ox + t_cap * dx - cx
    py = oy + t_cap * dy - cy
    cap_valid = (t_cap > 0) & (px * px + py * py <= r * r)
    is_cap = cap_valid & (t_cap < hit_t)
    hit_t = np.where(is_cap, t_cap, hit_t)
    return hit_t, is_cap


def render_views(cam: CameraProfile, glasses, include_glasses: bool = True):
    """Ray-cast the scene once; returns (depth_m, hit id grid, cap-zone mask).

    hit id: -1 = table, >= 0 = glass index. The cap zone is the top cap_band
    of each cylinder (the 3D-printed cap in the capped pass).
    """
    origin = cam.center
    dirs, dir_cam_z = _pixel_rays(cam)
    best_t = _intersect_plane(origin, dirs)
    hit_id = np.full(best_t.shape, -1, dtype=np.int32)
    cap_zone = np.zeros(best_t.shape, dtype=bool)

    if include_glasses:
        for i, cyl in enumerate(glasses):
            t, is_cap = _intersect_cylinder(origin, dirs, cyl)
            closer = t < best_t
            best_t = np.where(closer, t, best_t)
            hit_id = np.where(closer, i, hit_id)
            z_hit = origin[2] + best_t * dirs[..., 2]
            in_band = closer & ((z_hit >= 0.8 * cyl.height) | (is_cap & closer))
            cap_zone = np.where(closer, in_band, cap_zone)

    depth_m = np.where(np.isfinite(best_t), best_t * dir_cam_z, 0.0)
    return depth_m, hit_id, cap_zone


def render_depth_mm(cam, glasses, include_glasses=True) -> np.ndarray:
    depth_m, _, _ = render_views(cam, glasses, include_glasses)
    return np.clip(np.round(depth_m * 1000.0), 0, 65535).astype(np.uint16)


def render_color(cam, glasses, pass_tag: str) -> np.ndarray:
    include = pass_tag in ("capped", "chalk", "clean")
    _, hit_id, cap_zone = render_views(cam, glasses, include_glasses=include)
    img = np.empty(hit_id.shape + (3,), dtype=np.uint8)
    img[...] = TABLE_RGB
    body = hit_id >= 0
    if pass_tag == "chalk":
        img[body] = CHALK_RGB
    else:
        img[body] = GLASS_BODY_RGB
        if pass_tag == "capped":
            img[body & cap_zone] = CAP_RGB
    return img


def analytic_bbox(cam: CameraProfile, cyl: CylinderGlass, n_angles: int = 720):
    """Dense parametric silhouette bounds of a cylinder: the oracle box."""
    angles = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)
    ring = np.stack([cyl.x + cyl.radius * np.cos(angles),
                     cyl.y + cyl.radius * np.sin(angles),
                     np.zeros_like(angles)], axis=1)
    pts = np.vstack([ring, ring + np.array([0.0, 0.0, cyl.height])])
    pixels, valid = project_points(pts, cam)
    pixels = pixels[valid]
    x0, y0 = pixels.min(axis=0)
    x1, y1 = pixels.max(axis=0)
    return float(x0), float(y0), float(x1 - x0), float(y1 - y0)


def write_synthetic_scene(scene_dir, cameras, glasses, pose: str = "000") -> None:
    """Write the cameras' frames for all three passes plus the rig file."""
    from .rig import Rig, save_rig

    if isinstance(cameras, CameraProfile):
        cameras = [cameras]
    scene_dir = str(scene_dir)
    for cam in cameras:
        depth_full = render_depth_mm(cam, glasses, include_glasses=True)
        depth_plane = render_depth_mm(cam, glasses, include_glasses=False)
        for pass_tag in ("clean", "capped", "chalk"):
            base = f"{scene_dir}/{pass_tag}/{cam.name}"
            write_color(f"{base}/{pose}.png", render_color(cam, glasses, pass_tag))
            # Transparent glass returns almost no depth in the clean pass.
            depth = depth_plane if pass_tag == "clean" else depth_full
            write_depth(f"{base}/{pose}.depth.png", depth)

    save_rig(Rig({cam.name: cam for cam in cameras}), f"{scene_dir}/rig.json")
