import json

import pytest

from glasslab.config import AppConfig, ConfigError, default_config_doc, load_config


def test_defaults_without_file():
    cfg = load_config(None)
    assert len(cfg.classes) == 6
    assert cfg.pipeline.cluster_eps == 0.02
    assert cfg.pipeline.cluster_min_points == 20
    assert cfg.pipeline.height_tolerance == 0.015
    assert cfg.workspace.x_max - cfg.workspace.x_min == pytest.approx(0.35)


def test_overrides_applied(tmp_path):
    doc = {
        "pipeline": {"cluster_eps": 0.03, "seed": 9, "keypoint_boxes": True},
        "color_gate": {"a_range": [-128, -10], "min_fraction": 0.5},
        "classes": [
            {"id": 1, "name": "tall", "height": 0.2, "diameter": 0.07},
            {"id": 2, "name": "short", "height": 0.08, "diameter": 0.06},
        ],
        "workspace": {"x_min": 0.1, "x_max": 0.6},
        "pouring": {"p_x_min": 0.02, "hull_offsets": {"1": 0.05}},
        "cameras_to_label": ["head_rgbd", "static_left"],
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    cfg = load_config(path)
    assert cfg.pipeline.cluster_eps == 0.03
    assert cfg.pipeline.keypoint_boxes is True
    assert cfg.pipeline.gate.a_range == (-128, -10)
    assert [c.name for c in cfg.classes] == ["tall", "short"]
    assert cfg.workspace.x_min == 0.1
    assert cfg.workspace.h_max == 0.2  # derived from the override classes
    assert cfg.pouring.hull_offsets == {1: 0.05}
    assert cfg.pouring.p_x_min == 0.02
    assert cfg.cameras_to_label == ["head_rgbd", "static_left"]


def test_unknown_pipeline_key_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"pipeline": {"florble": 3}}))
    with pytest.raises(ConfigError):
        load_config(path)


def test_duplicate_class_ids_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"classes": [
        {"id": 1, "name": "a", "height": 0.1, "diameter": 0.05},
        {"id": 1, "name": "b", "height": 0.2, "diameter": 0.05},
    ]}))
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")


def test_default_doc_round_trips(tmp_path):
    doc = default_config_doc()
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    cfg = load_config(path)
    base = AppConfig()
    assert cfg.pipeline.cluster_eps == base.pipeline.cluster_eps
    assert [c.id for c in cfg.classes] == [c.id for c in base.classes]
