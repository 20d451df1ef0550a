import numpy as np

from glasslab.basepoints import KeypointProposal, render_heatmap
from glasslab.masks import Mask
from glasslab.overlay import render_overlay
from glasslab.pipeline import Annotation


def flat_image(w=64, h=48, value=100):
    return np.full((h, w, 3), value, np.uint8)


def test_zero_annotations_copies_input():
    img = flat_image()
    out = np.array(render_overlay(img, []))
    assert (out == img).all()


def test_zero_heatmap_has_no_visible_blend():
    img = flat_image()
    hm = render_heatmap([], 64, 48)
    out = np.array(render_overlay(img, [], heatmap=hm))
    assert (out == img).all()


def test_single_bbox_draws_exactly_one_rectangle():
    img = flat_image()
    ann = Annotation(class_id=1, bbox=(10, 12, 20, 16), mask=None, score=1.0, camera="c")
    out = np.array(render_overlay(img, [ann]))
    changed = (out != img).any(axis=2)
    # reference rasterization: 2 px outline band around the bbox edges,
    # plus the small text label above the box
    x, y, w, h = 10, 12, 20, 16
    ys, xs = np.nonzero(changed)
    band = np.zeros(changed.shape, bool)
    band[y - 1:y + h + 2, x - 1:x + w + 2] = True
    band[max(y - 14, 0):y, x:x + 64] = True  # label area
    assert changed.any()
    assert band[ys, xs].all(), "pixels changed outside the rectangle/label area"
    # all four edges present
    assert changed[y, x:x + w].any() and changed[y + h, x:x + w].any()
    assert changed[y:y + h, x].any() and changed[y:y + h, x + w].any()
    # interior untouched
    assert not changed[y + 3:y + h - 2, x + 3:x + w - 2].any()


def test_mask_outline_marked():
    img = flat_image()
    bitmap = np.zeros((48, 64), bool)
    bitmap[20:30, 25:40] = True
    ann = Annotation(class_id=2, bbox=(25, 20, 15, 10), mask=Mask(64, 48, bitmap),
                     score=1.0, camera="c")
    out = np.array(render_overlay(img, [ann]))
    changed = (out != img).any(axis=2)
    assert changed[20, 30]          # top edge of the mask
    assert not changed[25, 32]      # mask interior untouched


def test_heatmap_blend_peaks_at_kernel_center():
    img = flat_image()
    hm = render_heatmap([KeypointProposal((30, 25), 1.0)], 64, 48)
    out = np.array(render_overlay(img, [], heatmap=hm)).astype(int)
    diff = np.abs(out - img.astype(int)).sum(axis=2)
    peak = np.unravel_index(np.argmax(diff), diff.shape)
    assert peak == (25, 30)
