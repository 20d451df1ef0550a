"""Scene ingestion: the three-pass, five-camera capture layout.

Layout (see docs/formats.md):

    scene_<id>/
      rig.json
      <pass>/<camera>/<pose>.png          8-bit RGB color
      <pass>/<camera>/<pose>.depth.png    16-bit grayscale depth, millimeters

Head cameras record 25 poses (000..024), static cameras one (000), so a
complete pass holds 77 frame slots.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .geometry import DepthFrame

PASSES = ("clean", "capped", "chalk")
HEAD_CAMERAS = ("head_rgbd", "left_eye", "right_eye")
STATIC_CAMERAS = ("static_left", "static_right")
DEPTH_CAMERAS = ("head_rgbd", "static_left", "static_right")
HEAD_POSES = 25

_DEPTH_MODES = {"I", "I;16", "I;16B", "I;16L"}


class SceneError(ValueError):
    pass


def expected_slots() -> list:
    """All (camera, pose) slots of a complete pass: 25*3 head + 2 static = 77."""
    slots = []
    for cam in HEAD_CAMERAS:
        for pose in range(HEAD_POSES):
            slots.append((cam, f"{pose:03d}"))
    for cam in STATIC_CAMERAS:
        slots.append((cam, "000"))
    return slots


@dataclass
class FrameFiles:
    color_path: Path
    depth_path: Path | None = None


@dataclass
class SceneReport:
    found: dict = field(default_factory=dict)    # pass -> slot count
    missing: dict = field(default_factory=dict)  # pass -> [slot ids]; only non-empty passes listed
    absent_passes: list = field(default_factory=list)
    file_errors: list = field(default_factory=list)  # (path, message)

    @property
    def complete(self) -> bool:
        return not self.missing and not self.absent_passes and not self.file_errors


@dataclass
class SceneCapture:
    scene_id: str
    root: Path
    passes: dict = field(default_factory=dict)  # pass -> camera -> pose -> FrameFiles
    report: SceneReport = field(default_factory=SceneReport)

    def frame(self, pass_tag: str, camera: str, pose: str) -> FrameFiles | None:
        return self.passes.get(pass_tag, {}).get(camera, {}).get(pose)

    def poses(self, pass_tag: str, camera: str) -> list:
        return sorted(self.passes.get(pass_tag, {}).get(camera, {}))

    def slot_count(self, pass_tag: str) -> int:
        return sum(len(poses) for poses in self.passes.get(pass_tag, {}).values())


def _validate_color(path: Path, errors: list) -> bool:
    try:
        with Image.open(path) as img:
            if img.mode not in ("RGB", "RGBA"):
                errors.append((str(path), f"expected RGB color image, got mode {img.mode}"))
                return False
    except Exception as exc:
        errors.append((str(path), f"unreadable image: {exc}"))
        return False
    return True


def _validate_depth(path: Path, errors: list) -> bool:
    try:
        with Image.open(path) as img:
            if img.mode not in _DEPTH_MODES:
                errors.append((str(path), f"expected 16-bit depth image, got mode {img.mode}"))
                return False
    except Exception as exc:
        errors.append((str(path), f"unreadable image: {exc}"))
        return False
    return True


def load_scene(scene_dir) -> SceneCapture:
    """Index a scene directory. Missing files are reported, never fatal."""
    root = Path(scene_dir)
    if not root.is_dir():
        raise SceneError(f"scene directory not found: {root}")
    capture = SceneCapture(scene_id=root.name, root=root)
    report = capture.report

    for pass_tag in PASSES:
        pass_dir = root / pass_tag
        if not pass_dir.is_dir():
            report.absent_passes.append(pass_tag)
            continue
        cams: dict = {}
        missing = []
        for cam, pose in expected_slots():
            color = pass_dir / cam / f"{pose}.png"
            if not color.exists():
                missing.append(f"{cam}/{pose}")
                continue
            if not _validate_color(color, report.file_errors):
                continue
            depth = pass_dir / cam / f"{pose}.depth.png"
            frame = FrameFiles(color_path=color)
            if cam in DEPTH_CAMERAS:
                if depth.exists():
                    if _validate_depth(depth, report.file_errors):
                        frame.depth_path = depth
                else:
                    missing.append(f"{cam}/{pose}.depth")
            cams.setdefault(cam, {})[pose] = frame
        capture.passes[pass_tag] = cams
        report.found[pass_tag] = capture.slot_count(pass_tag)
        if missing:
            report.missing[pass_tag] = missing
    return capture


def read_depth(path) -> DepthFrame:
    with Image.open(path) as img:
        if img.mode not in _DEPTH_MODES:
            raise SceneError(f"{path}: expected 16-bit depth PNG, got mode {img.mode}")
        arr = np.array(img, dtype=np.float64)
    return DepthFrame(width=arr.shape[1], height=arr.shape[0], depth=arr)


def write_depth(path, depth_mm: np.ndarray) -> None:
    arr = np.asarray(depth_mm)
    if (arr < 0).any() or arr.max(initial=0) > 65535:
        raise SceneError("depth values must fit uint16 millimeters")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(arr.astype(np.uint16)).save(path)


def read_color(path) -> np.ndarray:
    with Image.open(path) as img:
        return np.array(img.convert("RGB"), dtype=np.uint8)


def write_color(path, rgb: np.ndarray) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(rgb, dtype=np.uint8), mode="RGB").save(path)
