"""3D substrate: depth de-projection, table plane fitting, clustering, plane math.

All lengths are meters unless a name says otherwise. Depth frames store
millimeters (uint16 convention, 0 = missing) and are converted on
de-projection.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree


class GeometryError(ValueError):
    """Bad input to a geometry operation."""


class PlaneFitError(GeometryError):
    """Plane fitting could not produce a model (too few / degenerate points)."""


@dataclass(frozen=True)
class PointCloud:
    """Nx3 points in meters, tagged with the frame they live in."""

    points: np.ndarray
    frame: str = "camera"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if pts.size and not np.isfinite(pts).all():
            raise GeometryError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class Plane:
    """Plane ax + by + cz + d = 0 over meter coordinates."""

    a: float
    b: float
    c: float
    d: float

    @property
    def normal(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c], dtype=np.float64)

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.a * self.a + self.b * self.b + self.c * self.c))

    def canonicalized(self) -> "Plane":
        """Unit normal, c >= 0 so 'above the table' has a consistent sign."""
        n = self.norm
        if n <= 0.0 or not np.isfinite(n):
            raise GeometryError("plane has zero or invalid normal")
        a, b, c, d = self.a / n, self.b / n, self.c / n, self.d / n
        if c < 0.0 or (c == 0.0 and (b < 0.0 or (b == 0.0 and a < 0.0))):
            a, b, c, d = -a, -b, -c, -d
        return Plane(a, b, c, d)

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return (pts @ self.normal + self.d) / self.norm


@dataclass
class Cluster:
    """A connected off-plane point group; plane_offset is set after fitting."""

    indices: np.ndarray
    centroid: np.ndarray
    plane_offset: Optional[float] = None

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.intp)
        if self.indices.size == 0:
            raise GeometryError("cluster must contain at least one point")
        self.centroid = np.asarray(self.centroid, dtype=np.float64)

    def __len__(self):
        return int(self.indices.size)


@dataclass(frozen=True)
class DepthFrame:
    """Row-major depth grid in millimeters; 0 marks invalid pixels."""

    width: int
    height: int
    depth: np.ndarray = field(repr=False)

    def __post_init__(self):
        grid = np.asarray(self.depth, dtype=np.float64).reshape(self.height, self.width)
        if (grid < 0).any():
            raise GeometryError("depth values must be >= 0")
        object.__setattr__(self, "depth", grid)


def deproject_depth(frame: DepthFrame, cam) -> PointCloud:
    """Back-project every valid depth pixel through the camera intrinsics.

    Returns points in the camera frame (meters). Distortion is ignored here:
    depth sensors deliver rectified grids, and the rig's projective model
    handles distortion on the RGB side.
    """
    if cam.fx <= 0 or cam.fy <= 0:
        raise GeometryError("camera focal lengths must be positive")
    if (frame.width, frame.height) != (cam.width, cam.height):
        raise GeometryError(
            f"depth frame is {frame.width}x{frame.height} but camera "
            f"'{cam.name}' expects {cam.width}x{cam.height}"
        )
    z_m = frame.depth / 1000.0
    valid = frame.depth > 0
    v, u = np.nonzero(valid)
    z = z_m[v, u]
    x = (u - cam.cx) * z / cam.fx
    y = (v - cam.cy) * z / cam.fy
    return PointCloud(np.column_stack([x, y, z]), frame="camera:" + cam.name)


def fit_plane_ransac(
    cloud: PointCloud,
    inlier_threshold: float = 0.005,
    iterations: int = 500,
    seed: int = 0,
) -> tuple[Plane, np.ndarray]:
    """RANSAC plane fit with a final least-squares refit over the consensus set.

    Deterministic for a fixed seed. Returns the canonicalized plane and the
    boolean inlier mask of the refit model.
    """
    pts = cloud.points
    n = pts.shape[0]
    if n < 3:
        raise PlaneFitError(f"need at least 3 points, got {n}")

    rng = np.random.default_rng(seed)
    best_count = -1
    best_plane = None

    for _ in range(iterations):
        idx = rng.choice(n, size=3, replace=False)
        p0, p1, p2 = pts[idx]
        normal = np.cross(p1 - p0, p2 - p0)
        nn = np.linalg.norm(normal)
        if nn < 1e-12:
            continue  # collinear sample
        normal = normal / nn
        d = -float(normal @ p0)
        dist = np.abs(pts @ normal + d)
        count = int((dist <= inlier_threshold).sum())
        if count > best_count:
            best_count = count
            best_plane = Plane(normal[0], normal[1], normal[2], d)

    if best_plane is None:
        raise PlaneFitError("all RANSAC samples were degenerate")

    # Least-squares refit on the consensus inliers, then recompute the mask.
    mask = np.abs(best_plane.signed_distance(pts)) <= inlier_threshold
    if mask.sum() >= 3:
        refined = _lsq_plane(pts[mask])
        if refined is not None:
            best_plane = refined
            mask = np.abs(best_plane.signed_distance(pts)) <= inlier_threshold
    return best_plane.canonicalized(), mask


def _lsq_plane(pts: np.ndarray) -> Optional[Plane]:
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    # Smallest right singular vector = plane normal.
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s[-2] < 1e-12:  # rank < 2: points are collinear
        return None
    normal = vt[-1]
    d = -float(normal @ centroid)
    return Plane(normal[0], normal[1], normal[2], d).canonicalized()


def cluster_points(cloud: PointCloud, eps: float = 0.02, min_points: int = 20) -> list[Cluster]:
    """Euclidean (eps-connectivity) clustering; components smaller than
    min_points are noise.

    Matches density-based clustering as used for tabletop candidate objects:
    two points are connected when their distance is <= eps, clusters are the
    connected components of that graph.
    """
    if eps <= 0:
        raise GeometryError("eps must be positive")
    if min_points < 1:
        raise GeometryError("min_points must be >= 1")
    pts = cloud.points
    n = pts.shape[0]
    if n == 0:
        return []

    tree = cKDTree(pts)
    pairs = tree.query_pairs(r=eps, output_type="ndarray")
    if pairs.size:
        rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
        adj = coo_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(n, n))
        _, labels = connected_components(adj, directed=False)
    else:
        labels = np.arange(n)

    clusters = []
    for label in np.unique(labels):
        members = np.nonzero(labels == label)[0]
        if members.size < min_points:
            continue
        clusters.append(Cluster(indices=members, centroid=pts[members].mean(axis=0)))
    # Stable output order regardless of label assignment.
    clusters.sort(key=lambda c: (c.centroid[0], c.centroid[1], c.centroid[2]))
    return clusters


def cluster_plane_offset(
    cluster: Cluster,
    cloud: PointCloud,
    table: Plane,
    percentile: float = 95.0,
) -> float:
    """Offset d' of the plane parallel to the table through the cluster's top.

    The top surface is taken at the given percentile of point-to-table
    distance (robust against depth speckle spikes).
    """
    if len(cluster) == 0:
        raise GeometryError("empty cluster")
    member_pts = cloud.points[cluster.indices]
    signed = table.signed_distance(member_pts)
    side = 1.0 if float(np.median(signed)) >= 0.0 else -1.0
    height = float(np.percentile(side * signed, percentile))
    height = max(height, 0.0)
    # Plane n.x + d' = 0 through points at signed distance side*height.
    return table.d - side * height * table.norm


def cluster_height(d_prime: float, table: Plane) -> float:
    """Cluster height above the table: |d' - d| / ||(a, b, c)||."""
    n = table.norm
    if n <= 0:
        raise GeometryError("plane normal must be nonzero")
    return abs(d_prime - table.d) / n


def project_point_to_plane(p: np.ndarray, plane: Plane) -> tuple[float, np.ndarray]:
    """Perpendicular signed distance to the plane and the foot point on it.

    d_proj = (ax + by + cz + d) / ||n||, p_proj = p - d_proj * n_hat.
    """
    n = plane.norm
    if n <= 0:
        raise GeometryError("plane normal must be nonzero")
    p = np.asarray(p, dtype=np.float64)
    d_proj = float((plane.normal @ p + plane.d) / n)
    p_proj = p - d_proj * (plane.normal / n)
    return d_proj, p_proj
