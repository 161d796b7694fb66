"""Synthetic scenes with analytically known geometry, used as test oracles
and demo inputs.

Three kinds:

* ``plane``: a camera-space plane z = z0 + a*x, whose exact unit normal is
  (-a, 0, 1) / sqrt(1 + a^2) everywhere.
* ``step``: a smooth background with a foreground box at a much smaller
  depth, producing a known discontinuity band for the variance filter.
* ``car-on-road``: road + building backdrop + box car carrying a grouped
  pair of front lights plus one ungrouped building window, exercising the
  whole pipeline including relighting.
"""

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import imageio, lights as lights_mod, refine
from .camera import CameraModel
from .grids import PixelGrid

KINDS = ("plane", "step", "car-on-road")


@dataclass
class SceneBundle:
    rgb: PixelGrid          # uint8 sRGB
    depth: PixelGrid
    normal: PixelGrid
    semantic: PixelGrid
    cam: CameraModel
    lights: list
    instance_map: Optional[PixelGrid]  # 16-bit style instance-ID raster
    true_normal: Optional[np.ndarray] = None  # analytic normal if known


def synth_scene(kind, size=64, seed=0) -> SceneBundle:
    if kind == "plane":
        return _plane(size, seed)
    if kind == "step":
        return _step(size, seed)
    if kind == "car-on-road":
        return _car_on_road(size, seed)
    raise ValueError(f"unknown scene kind {kind!r}; choices: {KINDS}")


def _camera(size):
    return CameraModel.from_fov(np.pi / 2, size, size)


def _gray_rgb(shade, h, w, seed):
    r = np.random.default_rng(seed)
    base = np.full((h, w, 3), shade, dtype=np.float64)
    base += r.normal(0, 4.0, base.shape)
    return PixelGrid(np.clip(base, 0, 255).astype(np.uint8))


def _plane(size, seed, slope=0.5, z0=5.0):
    # depth profile with constant camera-space slope dz/dx = slope under the
    # gradient model dz/dx = (dz/du) * fx / d, i.e. z = z0 * exp(slope * u / fx)
    cam = _camera(size)
    u = np.arange(size) - cam.cx
    z_row = z0 * np.exp(slope * u / cam.fx)
    depth = np.tile(z_row, (size, 1))
    n = np.array([-slope, 0.0, 1.0]) / np.sqrt(1.0 + slope * slope)
    normal = np.broadcast_to(n, (size, size, 3)).copy()
    sem = np.zeros((size, size))  # road
    return SceneBundle(rgb=_gray_rgb(120, size, size, seed),
                       depth=PixelGrid(depth), normal=PixelGrid(normal),
                       semantic=PixelGrid(sem), cam=cam, lights=[],
                       instance_map=None, true_normal=n)


def _step(size, seed):
    cam = _camera(size)
    rows = np.arange(size)
    depth = np.tile(10.0 + 0.02 * rows[:, None], (1, size))
    sem = np.zeros((size, size))
    # foreground box (car) at a quarter of the background depth
    r0, r1 = size // 4, 3 * size // 4
    c0, c1 = size // 3, 2 * size // 3
    depth[r0:r1, c0:c1] = 3.0
    sem[r0:r1, c0:c1] = 13  # car
    normal = refine.normal_from_depth(PixelGrid(depth), cam)
    rgb = _gray_rgb(110, size, size, seed).data.copy()
    rgb[r0:r1, c0:c1, 0] = 200
    return SceneBundle(rgb=PixelGrid(rgb), depth=PixelGrid(depth), normal=normal,
                       semantic=PixelGrid(sem), cam=cam, lights=[],
                       instance_map=None)


def _car_on_road(size, seed):
    cam = _camera(size)
    depth = np.empty((size, size))
    sem = np.zeros((size, size))
    horizon = size // 2
    # building backdrop above the horizon
    depth[:horizon] = 14.0
    sem[:horizon] = 2  # building
    # road sloping toward the camera below
    rows = np.arange(horizon, size)
    depth[horizon:] = (12.0 - 8.0 * (rows[:, None] - horizon) / (size - horizon))
    sem[horizon:] = 0  # road

    # box car
    r0, r1 = int(size * 0.40), int(size * 0.72)
    c0, c1 = int(size * 0.30), int(size * 0.58)
    depth[r0:r1, c0:c1] = 6.0
    sem[r0:r1, c0:c1] = 13  # car

    rgb = _gray_rgb(100, size, size, seed).data.copy()
    rgb[:horizon] = (170, 150, 120)
    rgb[r0:r1, c0:c1] = (180, 40, 40)

    # two grouped front lights at the car's lower corners
    inst = np.zeros((size, size), dtype=np.int64)
    lr0, lr1 = r1 - max(2, size // 16), r1 - 1
    lw = max(2, size // 16)
    inst[lr0:lr1 + 1, c0 + 1:c0 + 1 + lw] = 1
    inst[lr0:lr1 + 1, c1 - 1 - lw:c1 - 1] = 2
    # one building window, ungrouped
    wr0, wc0 = size // 8, size // 8
    inst[wr0:wr0 + max(2, size // 12), wc0:wc0 + max(2, size // 12)] = 3
    rgb[inst == 3] = (90, 90, 110)

    inst_grid = PixelGrid(inst.astype(np.float64))
    masks = lights_mod.masks_from_id_map(inst_grid)
    lamps = [
        lights_mod.LightInstance(1, "parked_front", masks[1], group_id=1,
                                 chromaticity=(1.3, 0.7), strength=0.6,
                                 activation_p=0.7),
        lights_mod.LightInstance(2, "parked_front", masks[2], group_id=1,
                                 chromaticity=(1.3, 0.7), strength=0.6,
                                 activation_p=0.7),
        lights_mod.LightInstance(3, "window_building", masks[3], group_id=None,
                                 chromaticity=(1.1, 0.9), strength=0.4,
                                 activation_p=0.5),
    ]
    normal = refine.normal_from_depth(PixelGrid(depth), cam)
    return SceneBundle(rgb=PixelGrid(np.clip(rgb, 0, 255).astype(np.uint8)),
                       depth=PixelGrid(depth), normal=normal,
                       semantic=PixelGrid(sem), cam=cam, lights=lamps,
                       instance_map=inst_grid)


def save_bundle(bundle: SceneBundle, outdir):
    """Write a bundle as pipeline input files; returns the file path map."""
    os.makedirs(outdir, exist_ok=True)
    paths = {
        "rgb": os.path.join(outdir, "rgb.png"),
        "depth": os.path.join(outdir, "depth.pfm"),
        "normal": os.path.join(outdir, "normal.pfm"),
        "semantic": os.path.join(outdir, "semantic.png"),
    }
    imageio.write_png(bundle.rgb, paths["rgb"])
    imageio.write_pfm(bundle.depth, paths["depth"])
    imageio.write_pfm(bundle.normal, paths["normal"])
    imageio.write_png(PixelGrid(bundle.semantic.plane().astype(np.uint8)),
                      paths["semantic"])
    if bundle.lights:
        paths["light_mask"] = os.path.join(outdir, "lights.png")
        paths["light_sidecar"] = os.path.join(outdir, "lights.txt")
        imageio.write_png16(bundle.instance_map.plane().astype(np.int64),
                            paths["light_mask"])
        lights_mod.write_sidecar(bundle.lights, paths["light_sidecar"])
    return paths
