"""Sensor simulation after rendering: heteroscedastic noise and tone mapping.

The noise model is the standard shot + read Gaussian: each linear pixel
value I gets zero-mean noise of variance beta1 * I + beta2, then the result
is clamped to [0, 1] to emulate sensor saturation.  Noise is applied in
linear space before the tone curve.
"""

import numpy as np

from . import rng
from .color import srgb_encode
from .grids import PixelGrid


def add_sensor_noise(i_c: PixelGrid, beta1, beta2, seed) -> PixelGrid:
    """Add per-pixel Gaussian noise of variance beta1 * I + beta2, clamped to [0, 1].

    Deterministic under the seed: each pixel/channel draw is keyed by its
    flat index in the raster.
    """
    if beta1 < 0 or beta2 < 0:
        raise ValueError("noise parameters must be nonnegative")
    img = i_c.data.astype(np.float64)
    if beta1 == 0 and beta2 == 0:
        return PixelGrid(img)
    idx = np.arange(img.size).reshape(img.shape)
    g = rng.normal(seed, idx)
    sigma = np.sqrt(beta1 * img + beta2)
    return PixelGrid(np.clip(img + sigma * g, 0.0, 1.0), copy=False)


def tone_map(i: PixelGrid, exposure=1.0) -> PixelGrid:
    """Exposure-scale, clamp, sRGB-encode and quantize to 8 bit."""
    v = i.data.astype(np.float64) * exposure
    enc = srgb_encode(np.clip(v, 0.0, 1.0))
    return PixelGrid(np.round(enc * 255.0).astype(np.uint8))
