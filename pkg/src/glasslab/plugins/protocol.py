"""Wire protocol for external verifier/segmenter plugins.

One JSON object per line over the plugin process's stdin/stdout.

Request:  {"id": int, "op": "verify"|"segment", "image_path": str,
           "points": [[u, v], ...] | null, "bbox_hint": [x, y, w, h] | null,
           "class_names": [str, ...] | null}
Response: {"id": <echoed>, "ok": true, "detections": [{"bbox": [x,y,w,h],
           "score": 0..1, "label": str}, ...]}            (verify)
          {"id": <echoed>, "ok": true, "mask_rle":
           {"counts": [int, ...], "size": [h, w]}}        (segment)
          {"id": <echoed when parseable>, "ok": false, "error": str}
"""

import json

OPS = ("verify", "segment")


class ProtocolError(ValueError):
    """Message violates the plugin wire schema."""


def parse_request(line: str) -> dict:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"request is not valid JSON: {exc}") from exc
    if not isinstance(msg, dict):
        raise ProtocolError("request must be a JSON object")
    if "id" not in msg:
        raise ProtocolError("request is missing 'id'")
    op = msg.get("op")
    if op not in OPS:
        raise ProtocolError(f"unknown op {op!r}")
    if not isinstance(msg.get("image_path"), str):
        raise ProtocolError("request is missing 'image_path'")
    points = msg.get("points")
    if points is not None:
        if not isinstance(points, list) or any(
            not isinstance(p, (list, tuple)) or len(p) != 2 for p in points
        ):
            raise ProtocolError("'points' must be a list of [u, v] pairs")
    if op == "segment" and not points:
        raise ProtocolError("'segment' requires at least one sample point")
    hint = msg.get("bbox_hint")
    if hint is not None and (not isinstance(hint, (list, tuple)) or len(hint) != 4):
        raise ProtocolError("'bbox_hint' must be [x, y, w, h] or null")
    names = msg.get("class_names")
    if names is not None and (not isinstance(names, list) or any(not isinstance(n, str) for n in names)):
        raise ProtocolError("'class_names' must be a list of strings")
    return msg


def make_request(req_id, op, image_path, points=None, bbox_hint=None, class_names=None) -> str:
    msg = {
        "id": req_id,
        "op": op,
        "image_path": image_path,
        "points": points,
        "bbox_hint": list(bbox_hint) if bbox_hint is not None else None,
        "class_names": class_names,
    }
    return json.dumps(msg)


def make_verify_response(req_id, detections) -> str:
    return json.dumps({
        "id": req_id,
        "ok": True,
        "detections": [
            {"bbox": [float(v) for v in d.bbox], "score": float(d.score), "label": d.label}
            for d in detections
        ],
    })


def make_segment_response(req_id, mask_rle: dict) -> str:
    return json.dumps({"id": req_id, "ok": True, "mask_rle": mask_rle})


def make_error_response(req_id, message) -> str:
    return json.dumps({"id": req_id, "ok": False, "error": str(message)})


def parse_response(line: str, expect_id=None) -> dict:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"response is not valid JSON: {exc}") from exc
    if not isinstance(msg, dict) or "id" not in msg or "ok" not in msg:
        raise ProtocolError("response must be an object with 'id' and 'ok'")
    if expect_id is not None and msg["id"] != expect_id:
        raise ProtocolError(f"response id {msg['id']!r} does not match request id {expect_id!r}")
    if msg["ok"]:
        if "detections" in msg:
            validate_detections(msg["detections"])
        elif "mask_rle" in msg:
            validate_mask_rle(msg["mask_rle"])
        else:
            raise ProtocolError("ok response carries neither 'detections' nor 'mask_rle'")
    elif not isinstance(msg.get("error"), str):
        raise ProtocolError("error response must carry an 'error' string")
    return msg


def validate_detections(detections) -> None:
    if not isinstance(detections, list):
        raise ProtocolError("'detections' must be a list")
    for det in detections:
        if not isinstance(det, dict):
            raise ProtocolError("detection must be an object")
        bbox = det.get("bbox")
        if not isinstance(bbox, (list, tuple)) or len(bbox) != 4:
            raise ProtocolError("detection bbox must be [x, y, w, h]")
        score = det.get("score")
        if not isinstance(score, (int, float)) or not 0.0 <= float(score) <= 1.0:
            raise ProtocolError("detection score must lie in [0, 1]")
        if not isinstance(det.get("label"), str):
            raise ProtocolError("detection label must be a string")


def validate_mask_rle(rle) -> None:
    if not isinstance(rle, dict):
        raise ProtocolError("'mask_rle' must be an object")
    size = rle.get("size")
    counts = rle.get("counts")
    if not isinstance(size, (list, tuple)) or len(size) != 2:
        raise ProtocolError("mask_rle size must be [height, width]")
    if not isinstance(counts, list) or any(not isinstance(c, int) or c < 0 for c in counts):
        raise ProtocolError("mask_rle counts must be non-negative integers")
    if sum(counts) != int(size[0]) * int(size[1]):
        raise ProtocolError("mask_rle counts do not cover height*width pixels")
