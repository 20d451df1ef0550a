"""Scene-level orchestration: directory in, COCO document + run report out."""

from dataclasses import dataclass, field
from pathlib import Path

from .coco import ImageEntry, export_coco, save_coco
from .config import AppConfig
from .pipeline import FrameInput, label_frame
from .plugins import PluginError, PluginProcessPort, PortPair
from .rig import load_rig
from .scene import DEPTH_CAMERAS, load_scene, read_color, read_depth


@dataclass
class LabelRunResult:
    doc: dict
    report: dict
    coco_path: str | None = None
    plugin_failure: bool = False


@dataclass
class _RunPorts:
    pair: PortPair
    owned: list = field(default_factory=list)

    def close(self):
        for port in self.owned:
            port.close()


def _build_ports(verifier_cmd, segmenter_cmd, timeout) -> _RunPorts:
    pair = PortPair.mocks()
    owned = []
    if verifier_cmd:
        port = PluginProcessPort(verifier_cmd, timeout=timeout)
        pair.verifier = port
        owned.append(port)
    if segmenter_cmd:
        port = PluginProcessPort(segmenter_cmd, timeout=timeout)
        pair.segmenter = port
        owned.append(port)
    return _RunPorts(pair=pair, owned=owned)


def run_label_job(
    scene_dir,
    cfg: AppConfig,
    verifier_cmd=None,
    segmenter_cmd=None,
    ports: PortPair | None = None,
    output_coco=None,
) -> LabelRunResult:
    """Label every depth-bearing frame of a scene and export the result.

    Candidates come from the capped pass; annotations attach to the
    pixel-aligned clean pass images. Per-frame failures are reported, not
    fatal; a plugin/protocol breakdown sets plugin_failure.
    """
    scene_dir = Path(scene_dir)
    capture = load_scene(scene_dir)
    rig = load_rig(scene_dir / "rig.json")

    run_ports = None
    if ports is None:
        run_ports = _build_ports(verifier_cmd, segmenter_cmd, cfg.plugin_timeout)
        ports = run_ports.pair

    images = []
    pairs = []
    frame_reports = []
    plugin_failure = False
    next_image_id = 1

    try:
        for cam_name in sorted(set(cfg.cameras_to_label) & set(DEPTH_CAMERAS)):
            capped = capture.passes.get("capped", {}).get(cam_name, {})
            for pose in sorted(capped):
                files = capped[pose]
                if files.depth_path is None:
                    continue
                profile = rig.get(cam_name, pose)
                clean = capture.frame("clean", cam_name, pose)
                clean_path = str(clean.color_path) if clean else str(files.color_path)
                frame = FrameInput(
                    camera=profile,
                    depth=read_depth(files.depth_path),
                    capped_color=read_color(files.color_path),
                    clean_image_path=clean_path,
                    scene_id=capture.scene_id,
                    frame_id=f"{cam_name}/{pose}",
                )
                try:
                    annotations, report = label_frame(frame, None, cfg.classes, cfg.pipeline, ports)
                except PluginError as exc:
                    plugin_failure = True
                    frame_reports.append({
                        "frame": frame.frame_id, "error": f"plugin failure: {exc}",
                    })
                    continue
                image_id = next_image_id
                next_image_id += 1
                rel = Path(clean_path)
                try:
                    rel = rel.relative_to(scene_dir)
                except ValueError:
                    pass
                images.append(ImageEntry(
                    id=image_id, file_name=str(rel),
                    width=profile.width, height=profile.height,
                ))
                pairs.extend((image_id, ann) for ann in annotations)
                if any("plugin" in msg.lower() or "protocol" in msg.lower()
                       for _, _, msg in report.errors):
                    plugin_failure = True
                frame_reports.append({
                    "frame": frame.frame_id,
                    "counts": {
                        "candidates": report.counts.candidates,
                        "height_classified": report.counts.height_classified,
                        "color_passed": report.counts.color_passed,
                        "verifier_passed": report.counts.verifier_passed,
                        "segmented": report.counts.segmented,
                        "accepted": report.counts.accepted,
                    },
                    "dropped": [{"candidate": i, "stage": s} for i, s in report.dropped],
                    "errors": [{"candidate": i, "stage": s, "message": m} for i, s, m in report.errors],
                })
    finally:
        if run_ports is not None:
            run_ports.close()

    doc = export_coco(pairs, images, cfg.classes)
    coco_path = None
    if output_coco:
        save_coco(doc, output_coco)
        coco_path = str(output_coco)

    report = {
        "scene": capture.scene_id,
        "frames": frame_reports,
        "annotations": len(pairs),
        "completeness": {
            "found": capture.report.found,
            "missing": capture.report.missing,
            "absent_passes": capture.report.absent_passes,
            "file_errors": [{"path": p, "message": m} for p, m in capture.report.file_errors],
        },
    }
    return LabelRunResult(doc=doc, report=report, coco_path=coco_path, plugin_failure=plugin_failure)
