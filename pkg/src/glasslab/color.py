"""sRGB to CIELAB conversion (D65 white point).

The cap gate works in CIELAB because 'green' is a clean interval there:
strongly negative a*, positive b*, mid lightness.
"""

import numpy as np

# sRGB (linear) -> XYZ, D65.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
# White = matrix row sums, so the neutral axis maps to a* = b* = 0 exactly.
_WHITE = _RGB_TO_XYZ.sum(axis=1)
_DELTA = 6.0 / 29.0


def srgb_to_cielab(r: float, g: float, b: float) -> tuple[float, float, float]:
    """Convert one 8-bit sRGB triplet to (L*, a*, b*)."""
    lab = srgb_to_cielab_array(np.array([[r, g, b]], dtype=np.float64))[0]
    return float(lab[0]), float(lab[1]), float(lab[2])


def srgb_to_cielab_array(rgb: np.ndarray) -> np.ndarray:
    """Vectorized conversion of an (..., 3) array of 8-bit sRGB values."""
    c = np.asarray(rgb, dtype=np.float64) / 255.0
    linear = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _RGB_TO_XYZ.T
    ratio = xyz / _WHITE
    f = np.where(ratio > _DELTA**3, np.cbrt(ratio), ratio / (3.0 * _DELTA**2) + 4.0 / 29.0)
    L = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return np.stack([L, a, b], axis=-1)
