"""Port interfaces for the external verification/segmentation stages.

The pipeline only ever talks to a verifier port and a segmenter port; the
built-in mocks below are deterministic geometry, which keeps the cascade
testable without any model weights.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..masks import Mask, fill_convex_hull
from . import protocol


class PluginError(RuntimeError):
    """Plugin process failure, timeout, or wire-protocol violation."""


@dataclass(frozen=True)
class Detection:
    bbox: tuple  # (x, y, w, h) px
    score: float
    label: str


@dataclass
class PortPair:
    """The two plugin channels a labeling run needs."""

    verifier: object
    segmenter: object

    @classmethod
    def mocks(cls, image_size=None, verifier_score: float = 1.0) -> "PortPair":
        return cls(
            verifier=MockVerifier(score=verifier_score),
            segmenter=MockSegmenter(image_size=image_size),
        )

    def close(self):
        seen = []
        for port in (self.verifier, self.segmenter):
            if any(port is p for p in seen):
                continue
            seen.append(port)
            close = getattr(port, "close", None)
            if close:
                close()


class MockVerifier:
    """Echoes the bbox hint back as a single detection.

    fixed_box overrides the echo, which lets tests exercise the IoU reject
    path without a model.
    """

    def __init__(self, score: float = 1.0, label: str = "drink glass", fixed_box=None):
        self.score = float(score)
        self.label = label
        self.fixed_box = tuple(fixed_box) if fixed_box is not None else None

    def verify(self, image_path, points=None, bbox_hint=None, class_names=None):
        box = self.fixed_box if self.fixed_box is not None else bbox_hint
        if box is None:
            return []
        label = class_names[0] if class_names else self.label
        return [Detection(bbox=tuple(float(v) for v in box), score=self.score, label=label)]


class MockSegmenter:
    """Fills the convex hull of the prompt points: deterministic, model-free."""

    def __init__(self, image_size: Optional[tuple] = None):
        self.image_size = image_size  # (width, height); read from the image when None

    def _dims(self, image_path) -> tuple:
        if self.image_size is not None:
            return self.image_size
        from PIL import Image

        with Image.open(image_path) as img:
            return img.size

    def segment(self, image_path, points) -> Mask:
        width, height = self._dims(image_path)
        return fill_convex_hull(np.asarray(points, dtype=np.float64), width, height)


def dispatch_request_line(line: str, verifier, segmenter) -> str:
    """Serve one wire-protocol request line against in-process ports.

    This is the whole server side of the protocol; the stdio mock server and
    the conformance suite both run through it.
    """
    try:
        req = protocol.parse_request(line)
    except protocol.ProtocolError as exc:
        req_id = None
        try:
            import json

            raw = json.loads(line)
            if isinstance(raw, dict):
                req_id = raw.get("id")
        except Exception:
            pass
        return protocol.make_error_response(req_id, exc)
    try:
        if req["op"] == "verify":
            detections = verifier.verify(
                req["image_path"],
                points=req.get("points"),
                bbox_hint=tuple(req["bbox_hint"]) if req.get("bbox_hint") else None,
                class_names=req.get("class_names"),
            )
            return protocol.make_verify_response(req["id"], detections)
        mask = segmenter.segment(req["image_path"], req["points"])
        return protocol.make_segment_response(req["id"], mask.to_rle())
    except Exception as exc:  # any backend failure becomes a protocol error reply
        return protocol.make_error_response(req["id"], exc)
