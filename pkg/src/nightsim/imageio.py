"""Raster file I/O: PFM for float grids, PNG for images, labels and masks.

PFM follows the usual convention: header "Pf" (grayscale) or "PF" (color),
whitespace-separated width and height, a scale whose sign encodes
endianness (negative = little-endian, the only one we accept), then
float32 rows stored bottom-up.
"""

import numpy as np
from PIL import Image

from .grids import PixelGrid


class ImageIOError(ValueError):
    pass


def write_pfm(grid: PixelGrid, path):
    a = grid.data.astype(np.float32)
    if grid.channels == 1:
        header = b"Pf"
        data = a[:, :, 0]
    elif grid.channels == 3:
        header = b"PF"
        data = a
    else:
        raise ImageIOError(f"PFM supports 1 or 3 channels, not {grid.channels}")
    with open(path, "wb") as fh:
        fh.write(header + b"\n")
        fh.write(f"{grid.width} {grid.height}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(data[::-1].tobytes())  # bottom-up row order


def read_pfm(path) -> PixelGrid:
    with open(path, "rb") as fh:
        head = fh.readline().strip()
        if head == b"Pf":
            channels = 1
        elif head == b"PF":
            channels = 3
        else:
            raise ImageIOError(f"{path}: not a PFM file (header {head!r})")
        dims = fh.readline().split()
        if len(dims) != 2:
            raise ImageIOError(f"{path}: malformed PFM dimension line")
        width, height = int(dims[0]), int(dims[1])
        scale = float(fh.readline().strip())
        if scale >= 0:
            raise ImageIOError(f"{path}: unsupported endianness (scale {scale} >= 0)")
        count = width * height * channels
        raw = fh.read(count * 4)
        if len(raw) != count * 4:
            raise ImageIOError(f"{path}: truncated PFM payload")
        data = np.frombuffer(raw, dtype="<f4").reshape(
            (height, width) if channels == 1 else (height, width, channels))
    return PixelGrid(np.ascontiguousarray(data[::-1]).astype(np.float64))


def write_png(grid: PixelGrid, path):
    """8-bit PNG; float grids in [0, 1] are quantized, uint8 passes through."""
    a = grid.data
    if a.dtype != np.uint8:
        a = np.round(np.clip(a, 0.0, 1.0) * 255.0).astype(np.uint8)
    if grid.channels == 1:
        Image.fromarray(a[:, :, 0], mode="L").save(path)
    elif grid.channels == 3:
        Image.fromarray(a, mode="RGB").save(path)
    else:
        raise ImageIOError(f"PNG writer supports 1 or 3 channels, not {grid.channels}")


def read_png(path) -> PixelGrid:
    """Read an 8-bit PNG as a uint8 PixelGrid."""
    img = Image.open(path)
    if img.mode not in ("L", "RGB"):
        if img.mode in ("I", "I;16"):
            raise ImageIOError(f"{path}: 16-bit PNG; use read_png16")
        img = img.convert("RGB")
    return PixelGrid(np.asarray(img, dtype=np.uint8))


def write_png16(values, path):
    """16-bit single-channel PNG from an integer array (e.g. instance IDs)."""
    a = np.asarray(values)
    if a.ndim == 3:
        a = a[:, :, 0]
    if a.min() < 0 or a.max() > 0xFFFF:
        raise ImageIOError("16-bit PNG values must lie in [0, 65535]")
    Image.fromarray(a.astype(np.uint16)).save(path)


def read_png16(path) -> PixelGrid:
    """Read a 16-bit single-channel PNG; values preserved as floats."""
    img = Image.open(path)
    if img.mode not in ("I", "I;16"):
        raise ImageIOError(f"{path}: expected 16-bit single-channel PNG, got mode {img.mode}")
    return PixelGrid(np.asarray(img, dtype=np.int64).astype(np.float64))
