import math

import numpy as np
import pytest

from glasslab.camera import look_at_camera
from glasslab.pipeline import default_glass_classes
from glasslab.synth import CylinderGlass


@pytest.fixture
def classes():
    return default_glass_classes()


@pytest.fixture
def head_camera():
    """The acceptance-scene camera: 1.2 m above the table, 30 deg off nadir."""
    pitch = math.radians(30.0)
    position = np.array([0.0, -0.69, 1.2])
    target = (0.0, position[1] + 1.2 * math.tan(pitch), 0.0)
    return look_at_camera("head_rgbd", position=position, target=target)


@pytest.fixture
def four_glasses(classes):
    by_name = {c.name: c for c in classes}
    return [
        CylinderGlass(by_name["water glass"], 0.00, 0.05),
        CylinderGlass(by_name["shot glass"], -0.25, -0.10),
        CylinderGlass(by_name["high beer glass"], 0.25, 0.00),
        CylinderGlass(by_name["whiskey glass"], -0.05, -0.30),
    ]


def make_stereo_rig(dist_a=(-0.2, 0.05, 0.001, -0.0005, 0.01),
                    dist_b=(-0.12, 0.02, -0.0008, 0.0006, 0.0)):
    """Two converging cameras over the table, with distortion."""
    cam_a = look_at_camera("rig_a", position=(-0.45, -0.85, 1.15), target=(0.05, 0.1, 0.0), dist=dist_a)
    cam_b = look_at_camera("rig_b", position=(0.55, -0.80, 1.05), target=(0.0, 0.15, 0.0), dist=dist_b)
    return cam_a, cam_b
