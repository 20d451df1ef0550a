"""Calibrated projective camera model for the five-camera rig.

Pixels are image coordinates with the origin at the top-left pixel center.
World <-> camera mapping is p_cam = R @ p_world + t. Two distortion models
are supported: brown_conrady (RealSense RGB) and fisheye_equidistant
(wide-angle eye cameras).
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

BROWN_CONRADY = "brown_conrady"
FISHEYE_EQUIDISTANT = "fisheye_equidistant"

_DIST_LEN = {BROWN_CONRADY: 5, FISHEYE_EQUIDISTANT: 4}


class CameraError(ValueError):
    """Bad input to a camera operation."""


class BehindCameraError(CameraError):
    """Point does not have positive depth in the camera frame."""


class NoIntersectionError(CameraError):
    """Ray does not hit the plane in front of the camera."""


class UndistortError(CameraError):
    """Iterative distortion inversion failed to converge."""


@dataclass(frozen=True)
class CameraProfile:
    name: str
    model: str
    fx: float
    fy: float
    cx: float
    cy: float
    dist: tuple
    R: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)
    width: int = 640
    height: int = 480

    def __post_init__(self):
        if self.model not in _DIST_LEN:
            raise CameraError(f"unknown distortion model '{self.model}'")
        if self.fx <= 0 or self.fy <= 0:
            raise CameraError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise CameraError("sensor size must be positive")
        dist = tuple(float(v) for v in self.dist)
        want = _DIST_LEN[self.model]
        if len(dist) != want:
            raise CameraError(f"{self.model} expects {want} distortion coefficients, got {len(dist)}")
        R = np.asarray(self.R, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.t, dtype=np.float64).reshape(3)
        if np.abs(R.T @ R - np.eye(3)).max() > 1e-9 or np.linalg.det(R) < 0:
            raise CameraError("R must be a proper rotation (orthonormal, det +1)")
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    @property
    def center(self) -> np.ndarray:
        """Camera origin in world coordinates."""
        return -self.R.T @ self.t

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return pts @ self.R.T + self.t

    def in_bounds(self, pixel) -> bool:
        u, v = float(pixel[0]), float(pixel[1])
        return -0.5 <= u < self.width - 0.5 and -0.5 <= v < self.height - 0.5


@dataclass(frozen=True)
class Correspondence:
    """One observed calibration marker: pixel measurement and 3D ground truth."""

    pixel: tuple
    world: tuple

    def __post_init__(self):
        object.__setattr__(self, "pixel", (float(self.pixel[0]), float(self.pixel[1])))
        w = tuple(float(v) for v in self.world)
        if len(w) != 3 or not all(np.isfinite(w)):
            raise CameraError("world point must be a finite 3-vector")
        object.__setattr__(self, "world", w)


def distort_normalized(x: np.ndarray, y: np.ndarray, model: str, dist: tuple):
    """Apply the lens model to ideal normalized image coordinates."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if model == BROWN_CONRADY:
        k1, k2, p1, p2, k3 = dist
        r2 = x * x + y * y
        radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
        xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
        yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
        return xd, yd
    if model == FISHEYE_EQUIDISTANT:
        k1, k2, k3, k4 = dist
        r = np.sqrt(x * x + y * y)
        theta = np.arctan(r)
        t2 = theta * theta
        theta_d = theta * (1.0 + t2 * (k1 + t2 * (k2 + t2 * (k3 + t2 * k4))))
        scale = np.where(r > 1e-12, theta_d / np.where(r > 1e-12, r, 1.0), 1.0)
        return x * scale, y * scale
    raise CameraError(f"unknown distortion model '{model}'")


def undistort_normalized(xd, yd, model: str, dist: tuple, max_iter: int = 60, tol: float = 1e-12):
    """Invert distort_normalized by fixed-point / Newton iteration."""
    xd = float(xd)
    yd = float(yd)
    if model == BROWN_CONRADY:
        k1, k2, p1, p2, k3 = dist
        x, y = xd, yd
        for _ in range(max_iter):
            r2 = x * x + y * y
            radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))
            dx = 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x)
            dy = p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y
            x_new = (xd - dx) / radial
            y_new = (yd - dy) / radial
            if abs(x_new - x) < tol and abs(y_new - y) < tol:
                return x_new, y_new
            x, y = x_new, y_new
        # Accept if the forward map already reproduces the input closely.
        bx, by = distort_normalized(x, y, model, dist)
        if abs(bx - xd) < 1e-9 and abs(by - yd) < 1e-9:
            return x, y
        raise UndistortError("brown_conrady inversion did not converge")
    if model == FISHEYE_EQUIDISTANT:
        k1, k2, k3, k4 = dist
        theta_d = float(np.hypot(xd, yd))
        if theta_d < 1e-12:
            return 0.0, 0.0
        theta = theta_d
        converged = False
        for _ in range(max_iter):
            t2 = theta * theta
            poly = 1.0 + t2 * (k1 + t2 * (k2 + t2 * (k3 + t2 * k4)))
            dpoly = 1.0 + t2 * (3.0 * k1 + t2 * (5.0 * k2 + t2 * (7.0 * k3 + 9.0 * t2 * k4)))
            f = theta * poly - theta_d
            if abs(dpoly) < 1e-12:
                break
            step = f / dpoly
            theta -= step
            if abs(step) < tol:
                converged = True
                break
        if not converged and abs(theta * (1.0 + theta**2 * (k1 + theta**2 * (k2 + theta**2 * (k3 + theta**2 * k4)))) - theta_d) > 1e-9:
            raise UndistortError("fisheye theta inversion did not converge")
        r = float(np.tan(theta))
        scale = r / theta_d
        return xd * scale, yd * scale
    raise CameraError(f"unknown distortion model '{model}'")


def project(p_world: np.ndarray, cam: CameraProfile) -> np.ndarray:
    """World point -> pixel. Raises BehindCameraError when z_cam <= 0."""
    p_cam = cam.world_to_camera(p_world)[0]
    if p_cam[2] <= 0:
        raise BehindCameraError(f"point has non-positive camera depth z={p_cam[2]:.4f}")
    x, y = p_cam[0] / p_cam[2], p_cam[1] / p_cam[2]
    xd, yd = distort_normalized(x, y, cam.model, cam.dist)
    return np.array([cam.fx * float(xd) + cam.cx, cam.fy * float(yd) + cam.cy])


def project_points(points: np.ndarray, cam: CameraProfile) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection; returns (pixels Nx2, valid mask for z_cam > 0)."""
    p_cam = cam.world_to_camera(points)
    z = p_cam[:, 2]
    valid = z > 0
    zsafe = np.where(valid, z, 1.0)
    x = p_cam[:, 0] / zsafe
    y = p_cam[:, 1] / zsafe
    xd, yd = distort_normalized(x, y, cam.model, cam.dist)
    pixels = np.column_stack([cam.fx * xd + cam.cx, cam.fy * yd + cam.cy])
    return pixels, valid


def undistort(pixel, cam: CameraProfile) -> np.ndarray:
    """Pixel -> unit ray direction in the camera frame."""
    u, v = float(pixel[0]), float(pixel[1])
    if not (np.isfinite(u) and np.isfinite(v)):
        raise CameraError("pixel must be finite")
    xd = (u - cam.cx) / cam.fx
    yd = (v - cam.cy) / cam.fy
    x, y = undistort_normalized(xd, yd, cam.model, cam.dist)
    ray = np.array([x, y, 1.0])
    return ray / np.linalg.norm(ray)


def cast_ray_to_plane(pixel, cam: CameraProfile, plane) -> np.ndarray:
    """Intersect the back-projected pixel ray with a world plane."""
    dir_cam = undistort(pixel, cam)
    dir_world = cam.R.T @ dir_cam
    origin = cam.center
    n = plane.normal
    denom = float(n @ dir_world)
    if abs(denom) / plane.norm <= 1e-9:
        raise NoIntersectionError("ray is parallel to the plane")
    s = -(float(n @ origin) + plane.d) / denom
    if s <= 0:
        raise BehindCameraError("plane intersection lies behind the camera")
    return origin + s * dir_world


def transfer_pixel(pixel, cam_from: CameraProfile, cam_to: CameraProfile, plane) -> tuple[np.ndarray, bool]:
    """Cast a pixel onto the table and re-project into another camera.

    Returns the target pixel (never clamped) and an in-bounds flag.
    """
    world = cast_ray_to_plane(pixel, cam_from, plane)
    target = project(world, cam_to)
    return target, cam_to.in_bounds(target)


def reprojection_rms(cam: CameraProfile, correspondences) -> float:
    """Root-mean-square pixel residual over a correspondence set."""
    if not correspondences:
        raise CameraError("need at least one correspondence")
    sq = 0.0
    for c in correspondences:
        pred = project(np.asarray(c.world), cam)
        du = pred[0] - c.pixel[0]
        dv = pred[1] - c.pixel[1]
        sq += du * du + dv * dv
    return float(np.sqrt(sq / len(correspondences)))


def axis_angle_to_matrix(rvec: np.ndarray) -> np.ndarray:
    """Rodrigues rotation: axis-angle 3-vector -> 3x3 matrix."""
    rvec = np.asarray(rvec, dtype=np.float64).reshape(3)
    angle = float(np.linalg.norm(rvec))
    if angle < 1e-12:
        return np.eye(3)
    axis = rvec / angle
    kx, ky, kz = axis
    K = np.array([[0, -kz, ky], [kz, 0, -kx], [-ky, kx, 0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def matrix_to_axis_angle(R: np.ndarray) -> np.ndarray:
    """Inverse Rodrigues; assumes a proper rotation matrix."""
    R = np.asarray(R, dtype=np.float64).reshape(3, 3)
    cos_a = (np.trace(R) - 1.0) / 2.0
    cos_a = min(1.0, max(-1.0, cos_a))
    angle = float(np.arccos(cos_a))
    if angle < 1e-12:
        return np.zeros(3)
    if np.pi - angle < 1e-6:
        # Near pi: extract axis from R + I.
        M = (R + np.eye(3)) / 2.0
        axis = np.sqrt(np.maximum(np.diag(M), 0.0))
        # Fix signs from off-diagonal terms.
        i = int(np.argmax(axis))
        if axis[i] > 0:
            for j in range(3):
                if j != i:
                    axis[j] = M[i, j] / axis[i] if abs(M[i, j]) > abs(M[j, i]) else M[j, i] / axis[i]
        axis = axis / np.linalg.norm(axis)
        return axis * angle
    axis = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    axis = axis / (2.0 * np.sin(angle))
    return axis * angle


def look_at_camera(
    name: str,
    position,
    target,
    fx: float = 600.0,
    fy: float = 600.0,
    cx: Optional[float] = None,
    cy: Optional[float] = None,
    width: int = 640,
    height: int = 480,
    model: str = BROWN_CONRADY,
    dist: Optional[tuple] = None,
    up=(0.0, 0.0, 1.0),
) -> CameraProfile:
    """Build a profile whose optical axis points from position to target."""
    position = np.asarray(position, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    forward = target - position
    fn = np.linalg.norm(forward)
    if fn < 1e-12:
        raise CameraError("camera position and target coincide")
    z_axis = forward / fn
    up = np.asarray(up, dtype=np.float64)
    x_axis = np.cross(z_axis, up)
    if np.linalg.norm(x_axis) < 1e-9:
        up = np.array([0.0, 1.0, 0.0])
        x_axis = np.cross(z_axis, up)
    x_axis = x_axis / np.linalg.norm(x_axis)
    y_axis = np.cross(z_axis, x_axis)
    R = np.stack([x_axis, y_axis, z_axis])  # rows: camera axes in world coords
    t = -R @ position
    if dist is None:
        dist = (0.0,) * _DIST_LEN[model]
    return CameraProfile(
        name=name,
        model=model,
        fx=fx,
        fy=fy,
        cx=width / 2.0 - 0.5 if cx is None else cx,
        cy=height / 2.0 - 0.5 if cy is None else cy,
        dist=dist,
        R=R,
        t=t,
        width=width,
        height=height,
    )
