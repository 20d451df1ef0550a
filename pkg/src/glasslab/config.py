"""Artifact configuration: one JSON file overriding sane defaults."""

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .pipeline import ColorGate, GlassClassSpec, PipelineConfig, default_glass_classes
from .pouring import PouringConfig, Workspace, default_workspace


class ConfigError(ValueError):
    pass


@dataclass
class AppConfig:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    classes: list = field(default_factory=default_glass_classes)
    workspace: Workspace = None
    pouring: PouringConfig = field(default_factory=PouringConfig)
    cameras_to_label: list = field(default_factory=lambda: ["head_rgbd"])
    plugin_timeout: float = 30.0

    def __post_init__(self):
        if self.workspace is None:
            self.workspace = default_workspace(self.classes)


def load_config(path=None) -> AppConfig:
    """Defaults when path is None; otherwise defaults overridden by the file."""
    cfg = AppConfig()
    if path is None:
        return cfg
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc

    if "classes" in doc:
        try:
            cfg.classes = [
                GlassClassSpec(int(c["id"]), str(c["name"]), float(c["height"]), float(c["diameter"]))
                for c in doc["classes"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad 'classes' entry: {exc}") from exc
        ids = [c.id for c in cfg.classes]
        if len(set(ids)) != len(ids):
            raise ConfigError("class ids must be unique")

    pipe = doc.get("pipeline", {})
    valid = {f.name for f in fields(PipelineConfig)} - {"gate"}
    unknown = set(pipe) - valid
    if unknown:
        raise ConfigError(f"unknown pipeline option(s): {sorted(unknown)}")
    for key, value in pipe.items():
        if key == "height_tolerance_overrides":
            value = {int(k): float(v) for k, v in value.items()}
        setattr(cfg.pipeline, key, value)

    if "color_gate" in doc:
        g = doc["color_gate"]
        cfg.pipeline.gate = ColorGate(
            L_range=tuple(g.get("L_range", ColorGate.L_range)),
            a_range=tuple(g.get("a_range", ColorGate.a_range)),
            b_range=tuple(g.get("b_range", ColorGate.b_range)),
            min_fraction=float(g.get("min_fraction", ColorGate.min_fraction)),
        )

    if "workspace" in doc:
        w = doc["workspace"]
        base = default_workspace(cfg.classes)
        cfg.workspace = Workspace(
            x_min=float(w.get("x_min", base.x_min)),
            x_max=float(w.get("x_max", base.x_max)),
            y_min=float(w.get("y_min", base.y_min)),
            y_max=float(w.get("y_max", base.y_max)),
            h_min=float(w.get("h_min", base.h_min)),
            h_max=float(w.get("h_max", base.h_max)),
        )
    else:
        cfg.workspace = default_workspace(cfg.classes)

    if "pouring" in doc:
        p = doc["pouring"]
        cfg.pouring = PouringConfig(
            p_x_min=float(p.get("p_x_min", PouringConfig.p_x_min)),
            p_y_min=float(p.get("p_y_min", PouringConfig.p_y_min)),
            p_x_max=float(p.get("p_x_max", PouringConfig.p_x_max)),
            p_y_max=float(p.get("p_y_max", PouringConfig.p_y_max)),
            hull_offsets={int(k): float(v) for k, v in p.get("hull_offsets", {}).items()},
        )

    cfg.cameras_to_label = list(doc.get("cameras_to_label", cfg.cameras_to_label))
    cfg.plugin_timeout = float(doc.get("plugin_timeout", cfg.plugin_timeout))
    return cfg


def default_config_doc() -> dict:
    """The defaults as a JSON-ready dict, for `glasslab config --init`."""
    cfg = AppConfig()
    return {
        "pipeline": {
            "deviation_threshold": cfg.pipeline.deviation_threshold,
            "cluster_eps": cfg.pipeline.cluster_eps,
            "cluster_min_points": cfg.pipeline.cluster_min_points,
            "ransac_threshold": cfg.pipeline.ransac_threshold,
            "ransac_iterations": cfg.pipeline.ransac_iterations,
            "height_tolerance": cfg.pipeline.height_tolerance,
            "top_percentile": cfg.pipeline.top_percentile,
            "cap_band": cfg.pipeline.cap_band,
            "footprint_samples": cfg.pipeline.footprint_samples,
            "verify_iou": cfg.pipeline.verify_iou,
            "mask_width_factor": cfg.pipeline.mask_width_factor,
            "keypoint_boxes": cfg.pipeline.keypoint_boxes,
            "keypoint_box_size": cfg.pipeline.keypoint_box_size,
        },
        "color_gate": {
            "L_range": list(cfg.pipeline.gate.L_range),
            "a_range": list(cfg.pipeline.gate.a_range),
            "b_range": list(cfg.pipeline.gate.b_range),
            "min_fraction": cfg.pipeline.gate.min_fraction,
        },
        "classes": [
            {"id": c.id, "name": c.name, "height": c.height, "diameter": c.diameter}
            for c in cfg.classes
        ],
        "workspace": {
            "x_min": cfg.workspace.x_min, "x_max": cfg.workspace.x_max,
            "y_min": cfg.workspace.y_min, "y_max": cfg.workspace.y_max,
            "h_min": cfg.workspace.h_min, "h_max": cfg.workspace.h_max,
        },
        "pouring": {
            "p_x_min": cfg.pouring.p_x_min, "p_y_min": cfg.pouring.p_y_min,
            "p_x_max": cfg.pouring.p_x_max, "p_y_max": cfg.pouring.p_y_max,
            "hull_offsets": {},
        },
        "cameras_to_label": cfg.cameras_to_label,
        "plugin_timeout": cfg.plugin_timeout,
    }
