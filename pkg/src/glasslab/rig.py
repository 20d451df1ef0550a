"""Rig and correspondence file I/O.

A rig file is one JSON document describing every calibrated camera; see
docs/formats.md for the exact field names. Correspondence files are plain
text rows of `u v X Y Z` (whitespace or comma separated, '#' comments).
"""

import json
from pathlib import Path

import numpy as np

from .camera import CameraError, CameraProfile, Correspondence


class RigError(CameraError):
    """Malformed rig or correspondence file."""


def camera_to_dict(cam: CameraProfile) -> dict:
    return {
        "name": cam.name,
        "model": cam.model,
        "fx": cam.fx,
        "fy": cam.fy,
        "cx": cam.cx,
        "cy": cam.cy,
        "dist": list(cam.dist),
        "R": [float(v) for v in cam.R.ravel()],
        "t": [float(v) for v in cam.t],
        "width": cam.width,
        "height": cam.height,
    }


def camera_from_dict(entry: dict) -> CameraProfile:
    try:
        return CameraProfile(
            name=entry["name"],
            model=entry["model"],
            fx=float(entry["fx"]),
            fy=float(entry["fy"]),
            cx=float(entry["cx"]),
            cy=float(entry["cy"]),
            dist=tuple(entry["dist"]),
            R=np.asarray(entry["R"], dtype=np.float64).reshape(3, 3),
            t=np.asarray(entry["t"], dtype=np.float64),
            width=int(entry["width"]),
            height=int(entry["height"]),
        )
    except KeyError as exc:
        raise RigError(f"rig entry missing field {exc}") from exc


class Rig:
    """Named camera profiles, optionally with per-pose overrides.

    Lookup tries '<camera>/<pose>' first and falls back to '<camera>', so a
    rig may carry one entry per moving-head pose or a single static entry.
    """

    def __init__(self, cameras: dict):
        self.cameras = dict(cameras)

    def get(self, name: str, pose: str | None = None) -> CameraProfile:
        if pose is not None and f"{name}/{pose}" in self.cameras:
            return self.cameras[f"{name}/{pose}"]
        if name in self.cameras:
            return self.cameras[name]
        raise RigError(f"rig has no camera '{name}'")

    def __contains__(self, name: str) -> bool:
        return name in self.cameras

    def names(self) -> list:
        return sorted(self.cameras)


def load_rig(path) -> Rig:
    path = Path(path)
    if not path.exists():
        raise RigError(f"rig file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise RigError(f"rig file is not valid JSON: {exc}") from exc
    entries = doc.get("cameras")
    if not isinstance(entries, list):
        raise RigError("rig file must contain a 'cameras' list")
    cameras = {}
    for entry in entries:
        cam = camera_from_dict(entry)
        cameras[cam.name] = cam
    return Rig(cameras)


def save_rig(rig: Rig, path) -> None:
    doc = {"cameras": [camera_to_dict(rig.cameras[name]) for name in sorted(rig.cameras)]}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_correspondences(path) -> list:
    path = Path(path)
    if not path.exists():
        raise RigError(f"correspondence file not found: {path}")
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 5:
            raise RigError(f"{path}:{lineno}: expected 5 values (u v X Y Z), got {len(parts)}")
        try:
            u, v, x, y, z = (float(p) for p in parts)
        except ValueError as exc:
            raise RigError(f"{path}:{lineno}: non-numeric value") from exc
        rows.append(Correspondence(pixel=(u, v), world=(x, y, z)))
    return rows
