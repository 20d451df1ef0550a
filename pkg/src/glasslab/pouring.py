"""Pour target computation from a detected glass box.

The detected box bottom-center lands on the near hull of the glass when cast
onto the table, so a per-class hull offset walks it to the axis, and two
dynamic offsets correct for where the glass stands in the workspace and how
tall it is. Offsets scale linearly: tuned once for the smallest and the
highest glass at the workspace extremes, interpolated everywhere else.
"""

from dataclasses import dataclass, field

import numpy as np

from .camera import CameraProfile, cast_ray_to_plane
from .geometry import Plane, project_point_to_plane


class PouringError(ValueError):
    pass


@dataclass(frozen=True)
class Workspace:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    h_min: float
    h_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min and self.h_max > self.h_min):
            raise PouringError("workspace bounds must have positive extent")


def default_workspace(classes=None) -> Workspace:
    """Default pour workspace: 0.35 m deep (x), 0.55 m wide (|y| span 0.275
    each side of the centerline), heights from the class table."""
    if classes is None:
        from .pipeline import default_glass_classes

        classes = default_glass_classes()
    heights = [c.height for c in classes]
    return Workspace(
        x_min=0.25, x_max=0.25 + 0.35,
        y_min=0.0, y_max=0.55 / 2.0,
        h_min=min(heights), h_max=max(heights),
    )


@dataclass
class PouringConfig:
    p_x_min: float = 0.010
    p_y_min: float = 0.010
    p_x_max: float = 0.020
    p_y_max: float = 0.015
    hull_offsets: dict = field(default_factory=dict)  # class id -> meters

    def hull_offset(self, class_id: int, diameter: float) -> float:
        return float(self.hull_offsets.get(class_id, diameter / 2.0))


@dataclass(frozen=True)
class ScalingFactors:
    epsilon: float
    gamma: float
    tau: float
    within_workspace: bool

    def as_tuple(self):
        return (self.epsilon, self.gamma, self.tau)


@dataclass
class PouringPlan:
    base: np.ndarray     # detected table contact, world meters
    target: np.ndarray   # pour point above the glass opening
    scaling: ScalingFactors
    dynamic_offset: tuple  # (p_x, p_y)
    class_id: int


def glass_base_from_bbox(bbox, cam: CameraProfile, table: Plane) -> np.ndarray:
    """Cast the box's bottom-center pixel onto the table.

    This lands on the camera-facing hull of the glass, approximately the
    nearest point between the camera origin and the glass bottom.
    """
    x, y, w, h = bbox
    return cast_ray_to_plane((x + w / 2.0, y + h), cam, table)


def scaling_factors(x_n: float, y_n: float, h_n: float, ws: Workspace) -> ScalingFactors:
    """Normalized workspace position and height factors.

    The lateral factor uses |y_n|: the workspace is symmetric about the
    centerline. No clamping; out-of-workspace inputs yield factors outside
    [0, 1] with within_workspace=False.
    """
    dx = ws.x_max - ws.x_min
    dy = ws.y_max - ws.y_min
    dh = ws.h_max - ws.h_min
    if dx <= 0 or dy <= 0 or dh <= 0:
        raise PouringError("degenerate workspace")
    eps = (x_n - ws.x_min) / dx
    gamma = (abs(y_n) - ws.y_min) / dy
    tau = (h_n - ws.h_min) / dh
    inside = all(0.0 <= v <= 1.0 for v in (eps, gamma, tau))
    return ScalingFactors(epsilon=eps, gamma=gamma, tau=tau, within_workspace=inside)


def pouring_offsets(epsilon: float, gamma: float, tau: float, cfg: PouringConfig) -> tuple:
    """Dynamic pour offsets:

        p_x = epsilon * p_x_min + (epsilon * tau) * p_x_max
        p_y = gamma   * p_y_min + (gamma   * tau) * p_y_max
    """
    p_x = epsilon * cfg.p_x_min + (epsilon * tau) * cfg.p_x_max
    p_y = gamma * cfg.p_y_min + (gamma * tau) * cfg.p_y_max
    return p_x, p_y


def build_pouring_plan(bbox, glass, cam: CameraProfile, table: Plane,
                       ws: Workspace, cfg: PouringConfig) -> PouringPlan:
    """Full chain: bbox -> table base -> hull offset -> scaled pour target."""
    base = glass_base_from_bbox(bbox, cam, table)

    # Walk from the camera-facing hull toward the glass axis, along the table.
    _, cam_foot = project_point_to_plane(cam.center, table)
    direction = base - cam_foot
    norm = float(np.linalg.norm(direction))
    offset = cfg.hull_offset(glass.id, glass.diameter)
    base_off = base + (direction / norm) * offset if norm > 1e-9 else base.copy()

    sf = scaling_factors(base_off[0], base_off[1], glass.height, ws)
    p_x, p_y = pouring_offsets(sf.epsilon, sf.gamma, sf.tau, cfg)

    n_hat = table.normal / table.norm
    target = base_off + np.array([p_x, p_y, 0.0]) + glass.height * n_hat
    return PouringPlan(base=base, target=target, scaling=sf,
                       dynamic_offset=(p_x, p_y), class_id=glass.id)
