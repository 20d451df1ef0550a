"""Request/response schemas for the labeling service."""

from typing import Optional

from pydantic import BaseModel, Field


class LabelRequest(BaseModel):
    scene_dir: str
    output_coco: Optional[str] = None
    config_path: Optional[str] = None
    seed: Optional[int] = None
    strict: bool = False
    verifier_cmd: Optional[str] = None
    segmenter_cmd: Optional[str] = None
    cameras: Optional[list[str]] = None


class LabelResponse(BaseModel):
    annotations: int
    coco_path: Optional[str] = None
    plugin_failure: bool = False
    report: dict
    document: Optional[dict] = None  # inlined when no output path was given


class ProjectRequest(BaseModel):
    coco_path: str
    rig_path: str
    from_camera: str
    to_camera: str
    table: Optional[list[float]] = Field(default=None, description="plane a b c d; default z=0")
    output_coco: Optional[str] = None
    config_path: Optional[str] = None


class ProjectResponse(BaseModel):
    projected: int
    dropped: int
    coco_path: Optional[str] = None
    document: Optional[dict] = None


class HeatmapProposal(BaseModel):
    x: float
    y: float
    score: float = Field(ge=0.0, le=1.0)


class HeatmapRequest(BaseModel):
    proposals: list[HeatmapProposal]
    width: int = Field(gt=0)
    height: int = Field(gt=0)
    kernel_size: int = 15
    sigma: Optional[float] = None
    output_container: Optional[str] = None
    output_png: Optional[str] = None


class HeatmapResponse(BaseModel):
    peak: float
    container_path: Optional[str] = None
    png_path: Optional[str] = None


class PourPlanRequest(BaseModel):
    coco_path: str
    annotation_id: int
    rig_path: str
    camera: str
    table: Optional[list[float]] = None
    config_path: Optional[str] = None


class PourPlanResponse(BaseModel):
    class_id: int
    base: list[float]
    target: list[float]
    scaling: dict
    dynamic_offset: list[float]
    within_workspace: bool


class CalibrateRequest(BaseModel):
    correspondences_path: str
    init_rig_path: str
    camera: str
    fix_intrinsics: bool = False
    output_rig_path: Optional[str] = None


class CalibrateResponse(BaseModel):
    camera: dict
    rms: float
    iterations: int
    converged: bool
    output_rig_path: Optional[str] = None


class ValidateRequest(BaseModel):
    coco_path: str


class ValidateResponse(BaseModel):
    passed: bool
    violations: list[dict]


class OverlayRequest(BaseModel):
    image_path: str
    coco_path: str
    output_path: str
    image_id: Optional[int] = None
    file_name: Optional[str] = None
    heatmap_path: Optional[str] = None
    config_path: Optional[str] = None


class OverlayResponse(BaseModel):
    output_path: str
    boxes_drawn: int


class SynthSceneRequest(BaseModel):
    scene_dir: str
    glasses: Optional[list[dict]] = None  # [{class, x, y}]; default: a 4-glass demo
    config_path: Optional[str] = None


class SynthSceneResponse(BaseModel):
    scene_dir: str
    cameras: list[str]
    glasses: int
