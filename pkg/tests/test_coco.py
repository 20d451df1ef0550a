import copy
import json

import numpy as np
import pytest

from glasslab.coco import (
    CocoExportError,
    CocoParseError,
    ImageEntry,
    annotations_from_doc,
    canonical_json,
    export_coco,
    load_coco,
    save_coco,
    validate_coco,
)
from glasslab.masks import Mask
from glasslab.pipeline import Annotation, default_glass_classes, keypoint_category_id


def small_mask(w=16, h=12):
    bitmap = np.zeros((h, w), bool)
    bitmap[3:9, 4:11] = True
    return Mask(w, h, bitmap)


def build_pairs(classes):
    mask = small_mask()
    anns = [
        Annotation(class_id=4, bbox=(4, 3, 7, 6), mask=mask, score=1.0, camera="head_rgbd"),
        Annotation(class_id=6, bbox=(1, 1, 3, 4), mask=None, score=0.75, camera="head_rgbd"),
        Annotation(class_id=keypoint_category_id(classes), bbox=(5, 6, 12, 12), mask=None,
                   score=1.0, camera="head_rgbd", clipped=True),
        Annotation(class_id=1, bbox=(2, 2, 4, 9), mask=None, score=0.5, camera="static_left"),
    ]
    images = [ImageEntry(1, "clean/head_rgbd/000.png", 16, 12),
              ImageEntry(2, "clean/static_left/000.png", 16, 12)]
    pairs = [(1, anns[0]), (1, anns[1]), (1, anns[2]), (2, anns[3])]
    return pairs, images


class TestExport:
    def test_counts_and_categories(self, classes):
        pairs, images = build_pairs(classes)
        doc = export_coco(pairs, images, classes)
        assert len(doc["images"]) == 2
        assert len(doc["annotations"]) == 4
        assert len(doc["categories"]) == 7  # six glasses + keypoint class
        kp = [c for c in doc["categories"] if c["id"] == keypoint_category_id(classes)]
        assert kp and kp[0]["name"] == "base_keypoint"

    def test_ids_deterministic(self, classes):
        pairs, images = build_pairs(classes)
        a = export_coco(pairs, images, classes)
        b = export_coco(pairs, images, classes)
        assert canonical_json(a) == canonical_json(b)
        assert [ann["id"] for ann in a["annotations"]] == [1, 2, 3, 4]

    def test_dangling_reference_rejected_with_offenders(self, classes):
        pairs, images = build_pairs(classes)
        pairs.append((99, pairs[0][1]))
        with pytest.raises(CocoExportError) as err:
            export_coco(pairs, images, classes)
        assert err.value.offenders

    def test_round_trip_byte_identical(self, classes, tmp_path):
        pairs, images = build_pairs(classes)
        doc = export_coco(pairs, images, classes)
        path = tmp_path / "labels.json"
        save_coco(doc, path)
        first = path.read_bytes()
        reparsed = load_coco(path)
        save_coco(reparsed, path)
        assert path.read_bytes() == first

    def test_clipped_flag_serialized_only_when_set(self, classes):
        pairs, images = build_pairs(classes)
        doc = export_coco(pairs, images, classes)
        flags = [("clipped" in ann) for ann in doc["annotations"]]
        assert flags.count(True) == 1

    def test_mask_area_used_for_area_field(self, classes):
        pairs, images = build_pairs(classes)
        doc = export_coco(pairs, images, classes)
        with_mask = doc["annotations"][0]
        assert with_mask["area"] == small_mask().area


class TestValidate:
    @pytest.fixture
    def valid_doc(self, classes):
        pairs, images = build_pairs(classes)
        return export_coco(pairs, images, classes)

    def test_exported_doc_passes(self, valid_doc):
        report = validate_coco(valid_doc)
        assert report.passed, report.violations

    def test_dangling_image(self, valid_doc):
        doc = copy.deepcopy(valid_doc)
        doc["annotations"][0]["image_id"] = 999
        report = validate_coco(doc)
        assert not report.passed and "dangling_image" in report.codes()

    def test_dangling_category(self, valid_doc):
        doc = copy.deepcopy(valid_doc)
        doc["annotations"][0]["category_id"] = 999
        report = validate_coco(doc)
        assert "dangling_category" in report.codes()

    def test_nonpositive_bbox_names_annotation(self, valid_doc):
        doc = copy.deepcopy(valid_doc)
        doc["annotations"][1]["bbox"] = [1, 1, 0, 4]
        report = validate_coco(doc)
        assert "nonpositive_bbox" in report.codes()
        violation = next(v for v in report.violations if v.code == "nonpositive_bbox")
        assert violation.ref == doc["annotations"][1]["id"]

    def test_mask_size_mismatch(self, valid_doc):
        doc = copy.deepcopy(valid_doc)
        doc["annotations"][0]["segmentation"]["size"] = [99, 16]
        doc["annotations"][0]["segmentation"]["counts"] = [99 * 16]
        report = validate_coco(doc)
        assert "mask_size_mismatch" in report.codes()

    def test_duplicate_annotation_id(self, valid_doc):
        doc = copy.deepcopy(valid_doc)
        doc["annotations"][1]["id"] = doc["annotations"][0]["id"]
        report = validate_coco(doc)
        assert "duplicate_annotation_id" in report.codes()

    def test_bad_rle_counts(self, valid_doc):
        doc = copy.deepcopy(valid_doc)
        doc["annotations"][0]["segmentation"]["counts"][0] += 5
        report = validate_coco(doc)
        assert "bad_rle" in report.codes()

    def test_duplicate_image_id(self, valid_doc):
        doc = copy.deepcopy(valid_doc)
        doc["images"].append(dict(doc["images"][0]))
        report = validate_coco(doc)
        assert "duplicate_image_id" in report.codes()

    def test_duplicate_category_id(self, valid_doc):
        doc = copy.deepcopy(valid_doc)
        doc["categories"].append(dict(doc["categories"][0]))
        report = validate_coco(doc)
        assert "duplicate_category_id" in report.codes()

    def test_malformed_bbox_shape(self, valid_doc):
        doc = copy.deepcopy(valid_doc)
        doc["annotations"][1]["bbox"] = [1, 2, 3]
        report = validate_coco(doc)
        assert "bad_bbox" in report.codes()

    def test_missing_section(self):
        report = validate_coco({"images": [], "annotations": []})
        assert "missing_section" in report.codes()

    def test_parse_failure_distinct_class(self, tmp_path):
        bad = tmp_path / "broken.json"
        bad.write_text("{not json")
        with pytest.raises(CocoParseError):
            validate_coco(str(bad))


class TestRebuild:
    def test_annotations_round_trip(self, classes):
        pairs, images = build_pairs(classes)
        doc = export_coco(pairs, images, classes)
        rebuilt = annotations_from_doc(doc)
        assert len(rebuilt) == 4
        img_id, first = rebuilt[0]
        assert img_id == 1
        assert first.mask is not None
        assert (first.mask.bitmap == small_mask().bitmap).all()


def test_canonical_json_rounds_floats():
    doc = {"x": 0.123456789, "nested": [{"y": 1.0000004}]}
    text = canonical_json(doc)
    assert "0.123457" in text
    assert "1.0" in text
