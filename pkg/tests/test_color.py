import numpy as np
import pytest

from glasslab.color import srgb_to_cielab, srgb_to_cielab_array


def reference_lab(r, g, b):
    """Independent scalar sRGB -> XYZ(D65) -> Lab chain (oracle)."""
    def lin(c):
        c = c / 255.0
        return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4

    rl, gl, bl = lin(r), lin(g), lin(b)
    X = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl
    Y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl
    Z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl
    Xn = 0.4124564 + 0.3575761 + 0.1804375
    Yn = 0.2126729 + 0.7151522 + 0.0721750
    Zn = 0.0193339 + 0.1191920 + 0.9503041
    d = 6.0 / 29.0

    def f(t):
        return t ** (1.0 / 3.0) if t > d ** 3 else t / (3 * d * d) + 4.0 / 29.0

    fx, fy, fz = f(X / Xn), f(Y / Yn), f(Z / Zn)
    return 116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)


def test_neutral_gray_has_no_chroma():
    L, a, b = srgb_to_cielab(128, 128, 128)
    assert abs(a) < 1e-6 and abs(b) < 1e-6
    assert 50 < L < 60


def test_pure_green_reference_values():
    L, a, b = srgb_to_cielab(0, 255, 0)
    assert L == pytest.approx(87.7347, abs=1e-3)
    assert a == pytest.approx(-86.1827, abs=1e-3)
    assert b == pytest.approx(83.1793, abs=1e-3)


def test_black():
    assert srgb_to_cielab(0, 0, 0) == (0.0, 0.0, 0.0)


def test_white_is_lightness_100():
    L, a, b = srgb_to_cielab(255, 255, 255)
    assert L == pytest.approx(100.0, abs=1e-9)
    assert abs(a) < 1e-9 and abs(b) < 1e-9


@pytest.mark.parametrize("rgb", [
    (0, 255, 0), (255, 0, 0), (0, 0, 255), (12, 200, 98),
    (255, 255, 0), (37, 37, 37), (250, 128, 114),
])
def test_matches_reference_chain(rgb):
    got = srgb_to_cielab(*rgb)
    want = reference_lab(*rgb)
    np.testing.assert_allclose(got, want, atol=1e-9)


def test_vectorized_matches_scalar():
    rng = np.random.default_rng(6)
    rgb = rng.integers(0, 256, size=(40, 3))
    lab = srgb_to_cielab_array(rgb)
    for row, (r, g, b) in zip(lab, rgb):
        np.testing.assert_allclose(row, srgb_to_cielab(r, g, b), atol=1e-12)
