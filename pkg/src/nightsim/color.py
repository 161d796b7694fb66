"""sRGB and CIELAB conversions (D65 white point).

The chain is the standard one: sRGB transfer curve <-> linear RGB <-> XYZ
(D65) <-> CIELAB.  Inputs may be 8-bit or already normalized to [0, 1].
"""

import numpy as np

from .grids import GridError, PixelGrid

# sRGB -> XYZ (D65), IEC 61966-2-1
_RGB2XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_XYZ2RGB = np.linalg.inv(_RGB2XYZ)

# D65 reference white
_WHITE = _RGB2XYZ @ np.ones(3)

_LAB_EPS = 216.0 / 24389.0
_LAB_KAPPA = 24389.0 / 27.0


def srgb_decode(v):
    """sRGB transfer curve -> linear, for values in [0, 1]."""
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def srgb_encode(v):
    """Linear -> sRGB transfer curve, for values in [0, 1]."""
    v = np.asarray(v, dtype=np.float64)
    v = np.clip(v, 0.0, 1.0)
    return np.where(v <= 0.0031308, v * 12.92, 1.055 * v ** (1 / 2.4) - 0.055)


def _lab_f(t):
    return np.where(t > _LAB_EPS, np.cbrt(t), (_LAB_KAPPA * t + 16.0) / 116.0)


def _lab_finv(t):
    t3 = t ** 3
    return np.where(t3 > _LAB_EPS, t3, (116.0 * t - 16.0) / _LAB_KAPPA)


def rgb_to_cielab(rgb: PixelGrid) -> PixelGrid:
    """Convert a 3-channel sRGB grid (8-bit or [0,1] float) to CIELAB.

    L lands in [0, 100]; a and b are signed chroma axes.
    """
    if rgb.channels != 3:
        raise GridError(f"rgb_to_cielab needs 3 channels, got {rgb.channels}")
    v = rgb.data.astype(np.float64)
    if rgb.data.dtype == np.uint8:
        v = v / 255.0
    lin = srgb_decode(v)
    xyz = lin @ _RGB2XYZ.T
    f = _lab_f(xyz / _WHITE)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return PixelGrid(lab, copy=False)


def cielab_to_rgb(lab: PixelGrid) -> PixelGrid:
    """Inverse of rgb_to_cielab; returns float sRGB in [0, 1]."""
    if lab.channels != 3:
        raise GridError(f"cielab_to_rgb needs 3 channels, got {lab.channels}")
    v = lab.data
    fy = (v[..., 0] + 16.0) / 116.0
    fx = fy + v[..., 1] / 500.0
    fz = fy - v[..., 2] / 200.0
    xyz = np.stack([_lab_finv(fx), _lab_finv(fy), _lab_finv(fz)], axis=-1) * _WHITE
    lin = xyz @ _XYZ2RGB.T
    return PixelGrid(srgb_encode(lin), copy=False)
