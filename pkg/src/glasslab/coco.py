"""COCO-style export with deterministic, byte-stable serialization.

Floats are rounded to 6 decimals at build time and keys are sorted on dump,
so export -> parse -> re-export reproduces the file byte for byte.
"""

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .masks import Mask
from .pipeline import Annotation, keypoint_category_id

KEYPOINT_CATEGORY_NAME = "base_keypoint"


class CocoParseError(ValueError):
    """File did not parse as a JSON document."""


class CocoExportError(ValueError):
    def __init__(self, message, offenders=None):
        super().__init__(message)
        self.offenders = offenders or []


@dataclass(frozen=True)
class ImageEntry:
    id: int
    file_name: str
    width: int
    height: int


@dataclass
class Violation:
    code: str
    message: str
    ref: object = None


@dataclass
class CocoValidationReport:
    passed: bool
    violations: list = field(default_factory=list)

    def codes(self) -> list:
        return [v.code for v in self.violations]


def _round6(value):
    if isinstance(value, float):
        return round(value, 6)
    if isinstance(value, dict):
        return {k: _round6(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round6(v) for v in value]
    return value


def canonical_json(doc: dict) -> str:
    return json.dumps(_round6(doc), indent=2, sort_keys=True) + "\n"


def build_categories(classes) -> list:
    cats = [{"id": c.id, "name": c.name, "supercategory": "drinkware"} for c in classes]
    cats.append({
        "id": keypoint_category_id(classes),
        "name": KEYPOINT_CATEGORY_NAME,
        "supercategory": "keypoint",
    })
    return cats


def export_coco(annotations, images, classes) -> dict:
    """Build a document from (image_id, Annotation) pairs.

    Ordering and ids are deterministic: images by id, annotations by
    (image id, input order), annotation ids counting from 1.
    """
    image_ids = {img.id for img in images}
    if len(image_ids) != len(images):
        raise CocoExportError("duplicate image ids in index")
    category_ids = {c.id for c in classes} | {keypoint_category_id(classes)}

    offenders = []
    for image_id, ann in annotations:
        if image_id not in image_ids:
            offenders.append(("image", image_id, ann.class_id))
        if ann.class_id not in category_ids:
            offenders.append(("category", ann.class_id, image_id))
    if offenders:
        raise CocoExportError(f"{len(offenders)} annotation(s) reference unknown ids", offenders)

    ordered = sorted(enumerate(annotations), key=lambda item: (item[1][0], item[0]))
    ann_entries = []
    for new_id, (_, (image_id, ann)) in enumerate(ordered, start=1):
        x, y, w, h = ann.bbox
        entry = {
            "id": new_id,
            "image_id": image_id,
            "category_id": ann.class_id,
            "bbox": [x, y, w, h],
            "area": float(ann.mask.area) if ann.mask is not None else float(w * h),
            "iscrowd": 0,
            "score": ann.score,
            "segmentation": ann.mask.to_rle() if ann.mask is not None else [],
        }
        if ann.clipped:
            entry["clipped"] = True
        ann_entries.append(entry)

    return {
        "info": {"description": "glasslab auto-labeled tabletop glasses", "version": "1"},
        "licenses": [{"id": 1, "name": "unspecified", "url": ""}],
        "images": [
            {"id": img.id, "file_name": img.file_name, "width": img.width,
             "height": img.height, "license": 1}
            for img in sorted(images, key=lambda im: im.id)
        ],
        "annotations": ann_entries,
        "categories": build_categories(classes),
    }


def save_coco(doc: dict, path) -> None:
    """Write via a temp file + rename so concurrent exporters never interleave."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(canonical_json(doc))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_coco(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CocoParseError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CocoParseError(f"{path} is not valid JSON: {exc}") from exc


def validate_coco(doc_or_path) -> CocoValidationReport:
    """Referential integrity, bbox positivity, mask-size consistency."""
    doc = load_coco(doc_or_path) if not isinstance(doc_or_path, dict) else doc_or_path
    violations = []

    for section in ("images", "annotations", "categories"):
        if not isinstance(doc.get(section), list):
            violations.append(Violation("missing_section", f"document lacks '{section}' list", section))
    if violations:
        return CocoValidationReport(passed=False, violations=violations)

    image_dims = {}
    for img in doc["images"]:
        img_id = img.get("id")
        if img_id in image_dims:
            violations.append(Violation("duplicate_image_id", f"image id {img_id} declared twice", img_id))
        image_dims[img_id] = (img.get("width"), img.get("height"))

    category_ids = set()
    for cat in doc["categories"]:
        cat_id = cat.get("id")
        if cat_id in category_ids:
            violations.append(Violation("duplicate_category_id", f"category id {cat_id} declared twice", cat_id))
        category_ids.add(cat_id)

    seen_ann = set()
    for ann in doc["annotations"]:
        ann_id = ann.get("id")
        if ann_id in seen_ann:
            violations.append(Violation("duplicate_annotation_id", f"annotation id {ann_id} appears twice", ann_id))
        seen_ann.add(ann_id)

        if ann.get("image_id") not in image_dims:
            violations.append(Violation(
                "dangling_image", f"annotation {ann_id} references unknown image {ann.get('image_id')}", ann_id))
        if ann.get("category_id") not in category_ids:
            violations.append(Violation(
                "dangling_category", f"annotation {ann_id} references unknown category {ann.get('category_id')}", ann_id))

        bbox = ann.get("bbox")
        if not isinstance(bbox, list) or len(bbox) != 4:
            violations.append(Violation("bad_bbox", f"annotation {ann_id} bbox must be [x, y, w, h]", ann_id))
        elif bbox[2] <= 0 or bbox[3] <= 0:
            violations.append(Violation(
                "nonpositive_bbox", f"annotation {ann_id} has non-positive bbox size {bbox[2]}x{bbox[3]}", ann_id))

        seg = ann.get("segmentation")
        if isinstance(seg, dict):
            size = seg.get("size")
            counts = seg.get("counts")
            if (not isinstance(size, list) or len(size) != 2
                    or not isinstance(counts, list)
                    or any(not isinstance(c, int) or c < 0 for c in counts)
                    or sum(counts) != int(size[0]) * int(size[1])):
                violations.append(Violation("bad_rle", f"annotation {ann_id} RLE is inconsistent", ann_id))
            elif ann.get("image_id") in image_dims:
                w, h = image_dims[ann["image_id"]]
                if [size[0], size[1]] != [h, w]:
                    violations.append(Violation(
                        "mask_size_mismatch",
                        f"annotation {ann_id} mask is {size[1]}x{size[0]} but image is {w}x{h}",
                        ann_id))

    return CocoValidationReport(passed=not violations, violations=violations)


def annotations_from_doc(doc: dict) -> list:
    """Rebuild (image_id, Annotation) pairs from a parsed document."""
    out = []
    for ann in doc.get("annotations", []):
        seg = ann.get("segmentation")
        mask = Mask.from_rle(seg) if isinstance(seg, dict) else None
        out.append((ann["image_id"], Annotation(
            class_id=ann["category_id"],
            bbox=tuple(ann["bbox"]),
            mask=mask,
            score=float(ann.get("score", 1.0)),
            camera="",
            clipped=bool(ann.get("clipped", False)),
        )))
    return out
