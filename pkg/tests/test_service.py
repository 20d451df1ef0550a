import json
import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from glasslab.camera import look_at_camera, project
from glasslab.pipeline import default_glass_classes
from glasslab.service import create_app
from glasslab.synth import CylinderGlass, write_synthetic_scene


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def small_cam(name="head_rgbd", position=(0.0, -0.5, 0.9), target=(0.0, 0.1, 0.0)):
    return look_at_camera(name, position=position, target=target,
                          fx=300.0, fy=300.0, width=320, height=240)


@pytest.fixture(scope="module")
def scene(tmp_path_factory):
    root = tmp_path_factory.mktemp("scenes") / "scene_000"
    classes = default_glass_classes()
    by_name = {c.name: c for c in classes}
    glasses = [CylinderGlass(by_name["water glass"], 0.0, 0.05),
               CylinderGlass(by_name["shot glass"], -0.15, -0.05)]
    cams = [small_cam(), small_cam("static_left", position=(0.7, -0.4, 0.8), target=(0.0, 0.05, 0.0))]
    write_synthetic_scene(root, cams, glasses)
    return root


def test_health(client):
    data = client.get("/health").json()
    assert data["status"] == "ok"


class TestLabelEndpoint:
    def test_label_scene(self, client, scene, tmp_path):
        out = tmp_path / "labels.json"
        resp = client.post("/label", json={"scene_dir": str(scene), "output_coco": str(out), "seed": 3,
                                           "cameras": ["head_rgbd", "static_left"]})
        assert resp.status_code == 200, resp.text
        data = resp.json()
        assert data["annotations"] == 4  # two glasses in two depth views
        assert not data["plugin_failure"]
        assert out.exists()
        report = client.post("/validate", json={"coco_path": str(out)}).json()
        assert report["passed"]

    def test_missing_scene_is_input_error(self, client):
        resp = client.post("/label", json={"scene_dir": "/nonexistent/scene"})
        assert resp.status_code == 400
        assert resp.json()["detail"]["error_class"] == "input_error"

    def test_broken_plugin_flagged(self, client, scene, tmp_path):
        import sys

        resp = client.post("/label", json={
            "scene_dir": str(scene),
            "output_coco": str(tmp_path / "x.json"),
            "verifier_cmd": f"{sys.executable} -c \"import sys; [print('garbage', flush=True) for _ in sys.stdin]\"",
        })
        assert resp.status_code == 200
        assert resp.json()["plugin_failure"]


class TestValidateEndpoint:
    def test_corrupt_file_fails_with_violations(self, client, tmp_path):
        doc = {"images": [{"id": 1, "file_name": "a.png", "width": 4, "height": 4}],
               "annotations": [{"id": 1, "image_id": 2, "category_id": 1,
                                "bbox": [0, 0, 1, 1], "segmentation": []}],
               "categories": [{"id": 1, "name": "x"}]}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        data = client.post("/validate", json={"coco_path": str(path)}).json()
        assert not data["passed"]
        assert any(v["code"] == "dangling_image" for v in data["violations"])

    def test_unparseable_is_input_error(self, client, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{")
        resp = client.post("/validate", json={"coco_path": str(path)})
        assert resp.status_code == 400


class TestHeatmapEndpoint:
    def test_render_and_save(self, client, tmp_path):
        resp = client.post("/heatmap", json={
            "proposals": [{"x": 30, "y": 40, "score": 1.0}],
            "width": 64, "height": 64,
            "output_container": str(tmp_path / "h.hmf"),
            "output_png": str(tmp_path / "h.png"),
        })
        data = resp.json()
        assert data["peak"] == pytest.approx(1.0 / (2 * math.pi * 2.5**2), rel=1e-9)
        assert (tmp_path / "h.hmf").exists() and (tmp_path / "h.png").exists()

    def test_even_kernel_rejected(self, client):
        resp = client.post("/heatmap", json={
            "proposals": [], "width": 8, "height": 8, "kernel_size": 4})
        assert resp.status_code == 400


class TestCalibrateEndpoint:
    def test_refine_from_rows(self, client, tmp_path, scene):
        cam = small_cam()
        rng = np.random.default_rng(5)
        rows = []
        n = 0
        while n < 40:
            w = np.array([rng.uniform(-0.3, 0.3), rng.uniform(-0.2, 0.4), rng.uniform(0, 0.15)])
            px = project(w, cam)
            if not (0 <= px[0] < cam.width and 0 <= px[1] < cam.height):
                continue
            rows.append(f"{px[0]:.12f} {px[1]:.12f} {w[0]:.12f} {w[1]:.12f} {w[2]:.12f}")
            n += 1
        corr_path = tmp_path / "markers.txt"
        corr_path.write_text("\n".join(rows) + "\n")
        resp = client.post("/calibrate", json={
            "correspondences_path": str(corr_path),
            "init_rig_path": str(scene / "rig.json"),
            "camera": "head_rgbd",
            "output_rig_path": str(tmp_path / "rig_out.json"),
        })
        data = resp.json()
        assert resp.status_code == 200, resp.text
        assert data["rms"] < 1e-6
        assert (tmp_path / "rig_out.json").exists()


class TestPourPlanEndpoint:
    def test_plan_for_labeled_glass(self, client, scene, tmp_path):
        out = tmp_path / "labels.json"
        client.post("/label", json={"scene_dir": str(scene), "output_coco": str(out), "seed": 3})
        doc = json.loads(out.read_text())
        ann = doc["annotations"][0]
        resp = client.post("/pour-plan", json={
            "coco_path": str(out), "annotation_id": ann["id"],
            "rig_path": str(scene / "rig.json"), "camera": "head_rgbd",
        })
        assert resp.status_code == 200, resp.text
        data = resp.json()
        assert data["class_id"] == ann["category_id"]
        assert len(data["target"]) == 3
        assert data["target"][2] > data["base"][2]

    def test_unknown_annotation_id(self, client, scene, tmp_path):
        out = tmp_path / "labels.json"
        client.post("/label", json={"scene_dir": str(scene), "output_coco": str(out), "seed": 3})
        resp = client.post("/pour-plan", json={
            "coco_path": str(out), "annotation_id": 9999,
            "rig_path": str(scene / "rig.json"), "camera": "head_rgbd",
        })
        assert resp.status_code == 400


class TestProjectEndpoint:
    def test_project_between_rig_cameras(self, client, scene, tmp_path):
        out = tmp_path / "labels.json"
        client.post("/label", json={"scene_dir": str(scene), "output_coco": str(out),
                                    "seed": 3, "cameras": ["head_rgbd"]})
        resp = client.post("/project", json={
            "coco_path": str(out), "rig_path": str(scene / "rig.json"),
            "from_camera": "head_rgbd", "to_camera": "static_left",
        })
        assert resp.status_code == 200, resp.text
        data = resp.json()
        assert data["projected"] >= 1
        assert data["document"]["annotations"]
        for ann in data["document"]["annotations"]:
            assert ann["segmentation"] == []  # masks do not transfer


class TestOverlayEndpoint:
    def test_overlay_written(self, client, scene, tmp_path):
        out = tmp_path / "labels.json"
        client.post("/label", json={"scene_dir": str(scene), "output_coco": str(out), "seed": 3})
        image = scene / "clean" / "head_rgbd" / "000.png"
        resp = client.post("/overlay", json={
            "image_path": str(image), "coco_path": str(out),
            "output_path": str(tmp_path / "overlay.png"), "image_id": 1,
        })
        data = resp.json()
        assert resp.status_code == 200
        assert data["boxes_drawn"] >= 1
        assert (tmp_path / "overlay.png").exists()
