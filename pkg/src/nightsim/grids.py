"""Raster containers shared by every stage of the pipeline.

A PixelGrid is a row-major raster of scalars or small per-pixel vectors
(depth, normals, class labels, RGB).  Data is float64 everywhere except at
image I/O boundaries; grids are treated as immutable after construction.
"""

import numpy as np


class GridError(ValueError):
    pass


class PixelGrid:
    """2D raster with 1-4 channels, stored as a (height, width, channels) array.

    Single-channel grids accept and expose (height, width) arrays for
    convenience; internally everything is kept 3-dimensional.
    """

    def __init__(self, data, copy=True):
        arr = np.array(data, copy=copy)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3:
            raise GridError(f"expected 2D or 3D array, got shape {arr.shape}")
        if not 1 <= arr.shape[2] <= 4:
            raise GridError(f"channel count must be 1-4, got {arr.shape[2]}")
        if arr.dtype != np.uint8:
            arr = arr.astype(np.float64)
        arr.setflags(write=False)
        self._data = arr

    @property
    def height(self):
        return self._data.shape[0]

    @property
    def width(self):
        return self._data.shape[1]

    @property
    def channels(self):
        return self._data.shape[2]

    @property
    def data(self):
        """The backing (height, width, channels) array (read-only)."""
        return self._data

    def plane(self, channel=0):
        """One channel as a (height, width) array."""
        return self._data[:, :, channel]

    def get(self, row, col):
        """Value at (row, col): a scalar for 1-channel grids, else a vector."""
        v = self._data[row, col]
        return v[0] if self.channels == 1 else v.copy()

    def __eq__(self, other):
        return isinstance(other, PixelGrid) and np.array_equal(self._data, other._data)

    def __repr__(self):
        return f"PixelGrid({self.width}x{self.height}x{self.channels}, {self._data.dtype})"


def depth_grid(data):
    """Build a depth grid, enforcing positive finite values."""
    g = PixelGrid(data)
    if g.channels != 1:
        raise GridError("depth grid must be single-channel")
    d = g.plane()
    bad = ~(np.isfinite(d) & (d > 0))
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise GridError(f"non-positive or non-finite depth at ({r}, {c})")
    return g


def normal_grid(data, tol=1e-6):
    """Build a normal grid, enforcing unit Euclidean norm per pixel."""
    g = PixelGrid(data)
    if g.channels != 3:
        raise GridError("normal grid must have 3 channels")
    norms = np.linalg.norm(g.data, axis=2)
    bad = np.abs(norms - 1.0) > tol
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise GridError(f"non-unit normal at ({r}, {c}): |n| = {norms[r, c]:.9f}")
    return g


def label_grid(data):
    """Build an integer class-ID grid."""
    g = PixelGrid(data)
    if g.channels != 1:
        raise GridError("label grid must be single-channel")
    vals = g.plane()
    if g.data.dtype != np.uint8 and not np.array_equal(vals, np.round(vals)):
        raise GridError("label grid must be integer-valued")
    return g


def same_shape(*grids):
    """True when all grids share width and height."""
    return len({(g.height, g.width) for g in grids}) == 1
