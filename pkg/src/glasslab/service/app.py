"""FastAPI service exposing the labeling toolchain.

Paths in requests are resolved on the server's filesystem; the bundled CLI
talks to an in-process instance by default, so paths behave like local CLI
arguments there.
"""

from pathlib import Path

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..basepoints import KeypointProposal, heatmap_to_png, load_heatmap, render_heatmap, save_heatmap
from ..calibration import NonConvergenceError, RankError, calibrate
from ..camera import CameraError
from ..coco import CocoParseError, annotations_from_doc, export_coco, load_coco, save_coco, validate_coco
from ..config import ConfigError, load_config
from ..geometry import GeometryError, Plane
from ..overlay import render_overlay
from ..pipeline import project_annotations
from ..plugins import PluginError
from ..pouring import PouringError, build_pouring_plan
from ..rig import RigError, load_correspondences, load_rig, save_rig, Rig, camera_to_dict
from ..runner import run_label_job
from ..scene import SceneError
from . import models


def _input_error(message) -> HTTPException:
    return HTTPException(status_code=400, detail={"error_class": "input_error", "message": str(message)})


def _plugin_error(message) -> HTTPException:
    return HTTPException(status_code=502, detail={"error_class": "plugin_error", "message": str(message)})


def _load_cfg(config_path, seed=None, strict=None, cameras=None):
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        raise _input_error(exc)
    if seed is not None:
        cfg.pipeline.seed = int(seed)
    if strict is not None:
        cfg.pipeline.strict = bool(strict)
    if cameras:
        cfg.cameras_to_label = list(cameras)
    return cfg


def _parse_table(values) -> Plane:
    if values is None:
        return Plane(0.0, 0.0, 1.0, 0.0)
    if len(values) != 4:
        raise _input_error("table plane needs exactly 4 coefficients (a b c d)")
    try:
        return Plane(*[float(v) for v in values]).canonicalized()
    except GeometryError as exc:
        raise _input_error(exc)


def create_app() -> FastAPI:
    app = FastAPI(title="glasslab", version=__version__)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/label", response_model=models.LabelResponse)
    def label(req: models.LabelRequest):
        cfg = _load_cfg(req.config_path, seed=req.seed, strict=req.strict, cameras=req.cameras)
        try:
            result = run_label_job(
                req.scene_dir, cfg,
                verifier_cmd=req.verifier_cmd,
                segmenter_cmd=req.segmenter_cmd,
                output_coco=req.output_coco,
            )
        except (SceneError, RigError) as exc:
            raise _input_error(exc)
        except PluginError as exc:
            raise _plugin_error(exc)
        return models.LabelResponse(
            annotations=result.report["annotations"],
            coco_path=result.coco_path,
            plugin_failure=result.plugin_failure,
            report=result.report,
            document=None if req.output_coco else result.doc,
        )

    @app.post("/project", response_model=models.ProjectResponse)
    def project_view(req: models.ProjectRequest):
        cfg = _load_cfg(req.config_path)
        table = _parse_table(req.table)
        try:
            doc = load_coco(req.coco_path)
            rig = load_rig(req.rig_path)
            cam_from = rig.get(req.from_camera)
            cam_to = rig.get(req.to_camera)
        except (CocoParseError, RigError) as exc:
            raise _input_error(exc)

        pairs = annotations_from_doc(doc)
        annotations = [ann for _, ann in pairs]
        projected, dropped = project_annotations(
            annotations, cam_from, cam_to, table, cfg.classes,
            keypoint_box_size=cfg.pipeline.keypoint_box_size)

        from ..coco import ImageEntry

        images = [
            ImageEntry(id=i["id"],
                       file_name=i["file_name"].replace(f"/{req.from_camera}/", f"/{req.to_camera}/"),
                       width=cam_to.width, height=cam_to.height)
            for i in doc.get("images", [])
        ]
        # All source annotations were re-expressed against the same images.
        ann_image = {idx: pairs[idx][0] for idx in range(len(pairs))}
        out_pairs = []
        kept = [i for i in range(len(annotations)) if i not in {d[0] for d in dropped}]
        for new_ann, src_idx in zip(projected, kept):
            out_pairs.append((ann_image[src_idx], new_ann))
        new_doc = export_coco(out_pairs, images, cfg.classes)
        coco_path = None
        if req.output_coco:
            save_coco(new_doc, req.output_coco)
            coco_path = req.output_coco
        return models.ProjectResponse(
            projected=len(projected), dropped=len(dropped),
            coco_path=coco_path, document=None if coco_path else new_doc,
        )

    @app.post("/heatmap", response_model=models.HeatmapResponse)
    def heatmap(req: models.HeatmapRequest):
        try:
            proposals = [KeypointProposal((p.x, p.y), p.score) for p in req.proposals]
            hm = render_heatmap(proposals, req.width, req.height,
                                k=req.kernel_size, sigma=req.sigma)
        except ValueError as exc:
            raise _input_error(exc)
        if req.output_container:
            Path(req.output_container).parent.mkdir(parents=True, exist_ok=True)
            save_heatmap(hm, req.output_container)
        if req.output_png:
            Path(req.output_png).parent.mkdir(parents=True, exist_ok=True)
            heatmap_to_png(hm, req.output_png)
        return models.HeatmapResponse(
            peak=float(hm.values.max()),
            container_path=req.output_container,
            png_path=req.output_png,
        )

    @app.post("/pour-plan", response_model=models.PourPlanResponse)
    def pour_plan(req: models.PourPlanRequest):
        cfg = _load_cfg(req.config_path)
        table = _parse_table(req.table)
        try:
            doc = load_coco(req.coco_path)
            rig = load_rig(req.rig_path)
            cam = rig.get(req.camera)
        except (CocoParseError, RigError) as exc:
            raise _input_error(exc)
        entry = next((a for a in doc.get("annotations", []) if a.get("id") == req.annotation_id), None)
        if entry is None:
            raise _input_error(f"annotation id {req.annotation_id} not found in {req.coco_path}")
        glass = next((c for c in cfg.classes if c.id == entry.get("category_id")), None)
        if glass is None:
            raise _input_error(f"annotation category {entry.get('category_id')} is not a known glass class")
        try:
            plan = build_pouring_plan(tuple(entry["bbox"]), glass, cam, table, cfg.workspace, cfg.pouring)
        except (CameraError, PouringError) as exc:
            raise _input_error(exc)
        return models.PourPlanResponse(
            class_id=plan.class_id,
            base=[float(v) for v in plan.base],
            target=[float(v) for v in plan.target],
            scaling={"epsilon": plan.scaling.epsilon, "gamma": plan.scaling.gamma, "tau": plan.scaling.tau},
            dynamic_offset=[float(plan.dynamic_offset[0]), float(plan.dynamic_offset[1])],
            within_workspace=plan.scaling.within_workspace,
        )

    @app.post("/calibrate", response_model=models.CalibrateResponse)
    def calibrate_camera(req: models.CalibrateRequest):
        try:
            correspondences = load_correspondences(req.correspondences_path)
            rig = load_rig(req.init_rig_path)
            init = rig.get(req.camera)
        except RigError as exc:
            raise _input_error(exc)
        try:
            result = calibrate(correspondences, init, fix_intrinsics=req.fix_intrinsics)
        except RankError as exc:
            raise _input_error(exc)
        except NonConvergenceError as exc:
            result = exc.result
        out_path = None
        if req.output_rig_path:
            rig.cameras[req.camera] = result.profile
            save_rig(Rig(rig.cameras), req.output_rig_path)
            out_path = req.output_rig_path
        return models.CalibrateResponse(
            camera=camera_to_dict(result.profile),
            rms=result.rms,
            iterations=result.iterations,
            converged=result.converged,
            output_rig_path=out_path,
        )

    @app.post("/validate", response_model=models.ValidateResponse)
    def validate(req: models.ValidateRequest):
        try:
            report = validate_coco(req.coco_path)
        except CocoParseError as exc:
            raise _input_error(exc)
        return models.ValidateResponse(
            passed=report.passed,
            violations=[{"code": v.code, "message": v.message} for v in report.violations],
        )

    @app.post("/synth-scene", response_model=models.SynthSceneResponse)
    def synth_scene(req: models.SynthSceneRequest):
        import math

        from ..synth import CylinderGlass, write_synthetic_scene
        from ..camera import look_at_camera

        cfg = _load_cfg(req.config_path)
        by_name = {c.name: c for c in cfg.classes}
        if req.glasses is None:
            picks = [("water glass", 0.0, 0.05), ("shot glass", -0.25, -0.10),
                     ("high beer glass", 0.25, 0.0), ("whiskey glass", -0.05, -0.30)]
        else:
            picks = [(g["class"], float(g["x"]), float(g["y"])) for g in req.glasses]
        try:
            glasses = [CylinderGlass(by_name[name], x, y) for name, x, y in picks]
        except KeyError as exc:
            raise _input_error(f"unknown glass class {exc}")
        position = (0.0, -0.69, 1.2)
        target = (0.0, position[1] + 1.2 * math.tan(math.radians(30.0)), 0.0)
        cam = look_at_camera("head_rgbd", position=position, target=target)
        write_synthetic_scene(req.scene_dir, cam, glasses)
        return models.SynthSceneResponse(scene_dir=req.scene_dir, cameras=[cam.name],
                                         glasses=len(glasses))

    @app.post("/overlay", response_model=models.OverlayResponse)
    def overlay(req: models.OverlayRequest):
        cfg = _load_cfg(req.config_path)
        try:
            doc = load_coco(req.coco_path)
        except CocoParseError as exc:
            raise _input_error(exc)
        if not Path(req.image_path).exists():
            raise _input_error(f"image not found: {req.image_path}")

        image_id = req.image_id
        if image_id is None:
            name = req.file_name or Path(req.image_path).name
            match = [i for i in doc.get("images", []) if i["file_name"].endswith(name)]
            image_id = match[0]["id"] if match else None
        anns = [ann for img_id, ann in annotations_from_doc(doc) if img_id == image_id]

        hm = None
        if req.heatmap_path:
            try:
                hm = load_heatmap(req.heatmap_path)
            except (OSError, ValueError) as exc:
                raise _input_error(exc)
        names = {c.id: c.name for c in cfg.classes}
        Path(req.output_path).parent.mkdir(parents=True, exist_ok=True)
        render_overlay(req.image_path, anns, heatmap=hm, class_names=names, out_path=req.output_path)
        return models.OverlayResponse(output_path=req.output_path, boxes_drawn=len(anns))

    return app
