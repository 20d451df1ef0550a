import numpy as np
import pytest
from PIL import Image

from glasslab.geometry import DepthFrame
from glasslab.scene import (
    DEPTH_CAMERAS,
    HEAD_CAMERAS,
    PASSES,
    STATIC_CAMERAS,
    SceneError,
    expected_slots,
    load_scene,
    read_color,
    read_depth,
    write_color,
    write_depth,
)


def write_minimal_scene(root, passes=PASSES, skip=()):
    """Tiny but structurally complete scene: 77 slots per pass."""
    for pass_tag in passes:
        for cam, pose in expected_slots():
            if (pass_tag, cam, pose) in skip:
                continue
            base = root / pass_tag / cam
            write_color(base / f"{pose}.png", np.full((6, 8, 3), 90, np.uint8))
            if cam in DEPTH_CAMERAS:
                write_depth(base / f"{pose}.depth.png", np.full((6, 8), 800, np.uint16))
    (root / "rig.json").write_text('{"cameras": []}')


def test_slot_budget_is_77():
    assert len(expected_slots()) == 25 * len(HEAD_CAMERAS) + len(STATIC_CAMERAS) == 77


def test_complete_scene_loads_without_missing(tmp_path):
    root = tmp_path / "scene_001"
    write_minimal_scene(root)
    capture = load_scene(root)
    for pass_tag in PASSES:
        assert capture.slot_count(pass_tag) == 77
    assert capture.report.missing == {}
    assert capture.report.absent_passes == []
    assert capture.report.file_errors == []
    assert capture.report.complete


def test_missing_chalk_pass_reported_not_fatal(tmp_path):
    root = tmp_path / "scene_002"
    write_minimal_scene(root, passes=("clean", "capped"))
    capture = load_scene(root)
    assert capture.report.absent_passes == ["chalk"]
    assert capture.slot_count("capped") == 77
    assert not capture.report.complete


def test_empty_directory_full_missing_report(tmp_path):
    root = tmp_path / "scene_003"
    root.mkdir()
    capture = load_scene(root)
    assert capture.report.absent_passes == list(PASSES)
    assert all(capture.slot_count(p) == 0 for p in PASSES)


def test_nonexistent_directory_rejected(tmp_path):
    with pytest.raises(SceneError):
        load_scene(tmp_path / "nope")


def test_partial_scene_missing_slots_listed(tmp_path):
    root = tmp_path / "scene_004"
    write_minimal_scene(root, passes=("capped",), skip={("capped", "left_eye", "007")})
    capture = load_scene(root)
    assert "left_eye/007" in capture.report.missing["capped"]


def test_wrong_depth_bitdepth_reported(tmp_path):
    root = tmp_path / "scene_005"
    write_minimal_scene(root, passes=("capped",))
    bad = root / "capped" / "head_rgbd" / "000.depth.png"
    Image.new("RGB", (8, 6), (3, 3, 3)).save(bad)  # 8-bit RGB where 16-bit expected
    capture = load_scene(root)
    assert any("16-bit" in msg for _, msg in capture.report.file_errors)


def test_unreadable_image_reported(tmp_path):
    root = tmp_path / "scene_006"
    write_minimal_scene(root, passes=("clean",))
    (root / "clean" / "head_rgbd" / "000.png").write_bytes(b"this is not a png")
    capture = load_scene(root)
    assert any("unreadable" in msg for _, msg in capture.report.file_errors)


def test_depth_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    grid = rng.integers(0, 4000, size=(12, 16)).astype(np.uint16)
    path = tmp_path / "d.depth.png"
    write_depth(path, grid)
    frame = read_depth(path)
    assert isinstance(frame, DepthFrame)
    assert (frame.depth == grid).all()


def test_color_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, size=(12, 16, 3)).astype(np.uint8)
    path = tmp_path / "c.png"
    write_color(path, img)
    assert (read_color(path) == img).all()


def test_depth_over_uint16_rejected(tmp_path):
    with pytest.raises(SceneError):
        write_depth(tmp_path / "d.png", np.full((2, 2), 70000))


def test_loading_never_mutates_inputs(tmp_path):
    root = tmp_path / "scene_007"
    write_minimal_scene(root)
    before = {p: p.stat().st_mtime_ns for p in sorted(root.rglob("*.png"))}
    load_scene(root)
    after = {p: p.stat().st_mtime_ns for p in sorted(root.rglob("*.png"))}
    assert before == after
