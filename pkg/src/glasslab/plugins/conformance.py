"""Protocol conformance checks, transport-agnostic.

A transport is any callable taking one raw request line and returning one
raw response line. The same fixtures run against the in-process mocks and
against any external plugin process, so a plugin that passes here is safe
to drop into the pipeline.
"""

import json
from dataclasses import dataclass

from ..masks import Mask
from . import protocol


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _check(name, fn) -> CheckResult:
    try:
        fn()
        return CheckResult(name, True)
    except AssertionError as exc:
        return CheckResult(name, False, str(exc))
    except Exception as exc:  # transport/protocol blowups count as failures
        return CheckResult(name, False, f"{type(exc).__name__}: {exc}")


def run_suite(transport, image_path: str, image_size: tuple) -> list:
    """Run every conformance fixture; returns one CheckResult per fixture."""
    width, height = image_size
    results = []

    def verify_req(req_id, hint=(10, 10, 40, 60)):
        return protocol.make_request(
            req_id, "verify", image_path,
            points=[[20.0, 30.0], [25.0, 40.0]],
            bbox_hint=hint,
            class_names=["water glass", "drink glass"],
        )

    def segment_req(req_id, pts):
        return protocol.make_request(req_id, "segment", image_path, points=pts)

    def check_verify_schema():
        msg = protocol.parse_response(transport(verify_req(101)), expect_id=101)
        assert msg["ok"] is True, f"verify returned ok={msg['ok']}"
        assert "detections" in msg, "verify response lacks detections"

    results.append(_check("verify_schema_and_id_echo", check_verify_schema))

    def check_scores_in_range():
        msg = protocol.parse_response(transport(verify_req(102)), expect_id=102)
        for det in msg["detections"]:
            assert 0.0 <= det["score"] <= 1.0, f"score {det['score']} out of range"

    results.append(_check("verify_scores_in_range", check_scores_in_range))

    def check_segment_decodes():
        pts = [[5.0, 5.0], [30.0, 8.0], [18.0, 25.0]]
        msg = protocol.parse_response(transport(segment_req(103, pts)), expect_id=103)
        assert msg["ok"] is True, "segment returned ok=false"
        rle = msg["mask_rle"]
        assert rle["size"] == [height, width], f"mask size {rle['size']} != [{height}, {width}]"
        mask = Mask.from_rle(rle)
        assert mask.to_rle() == rle, "RLE does not round-trip through decode/encode"

    results.append(_check("segment_mask_rle_decodes", check_segment_decodes))

    def check_stateless():
        pts = [[5.0, 5.0], [30.0, 8.0], [18.0, 25.0]]
        first = transport(segment_req(104, pts))
        again = transport(segment_req(105, pts))
        a = json.loads(first)
        b = json.loads(again)
        a.pop("id")
        b.pop("id")
        assert a == b, "identical requests produced different responses"

    results.append(_check("responses_independent_of_order", check_stateless))

    def check_malformed_op():
        line = json.dumps({"id": 106, "op": "florble", "image_path": image_path})
        msg = protocol.parse_response(transport(line), expect_id=106)
        assert msg["ok"] is False, "malformed op was accepted"
        assert isinstance(msg.get("error"), str), "error response lacks message"

    results.append(_check("malformed_request_rejected_id_echoed", check_malformed_op))

    def check_unparseable():
        msg = protocol.parse_response(transport("{not json"))
        assert msg["ok"] is False, "unparseable request was accepted"

    results.append(_check("unparseable_request_rejected", check_unparseable))

    return results


def in_process_transport(verifier, segmenter):
    """Wrap in-process ports as a conformance transport."""
    from .ports import dispatch_request_line

    return lambda line: dispatch_request_line(line, verifier, segmenter)


def process_transport(port) -> callable:
    """Wrap a PluginProcessPort's raw channel as a conformance transport."""
    return port._roundtrip
