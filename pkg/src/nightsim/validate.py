"""Input bundle validation: the gate every dataset sample passes before work starts."""

from dataclasses import dataclass

import numpy as np

from .camera import CameraModel
from .grids import PixelGrid
from .semantics import KNOWN_CLASS_IDS


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class InputBundle:
    rgb: PixelGrid
    depth: PixelGrid
    normal: PixelGrid
    semantic: PixelGrid
    cam: CameraModel


def validate_inputs(rgb, depth, normal, semantic, cam,
                    known_classes=KNOWN_CLASS_IDS, normal_tol=1e-4) -> InputBundle:
    """Check co-registration, depth positivity, normal unit length and class IDs.

    Errors name the first offending pixel coordinate (row, col).
    """
    shapes = {
        "rgb": (rgb.height, rgb.width),
        "depth": (depth.height, depth.width),
        "normal": (normal.height, normal.width),
        "semantic": (semantic.height, semantic.width),
    }
    if len(set(shapes.values())) != 1:
        raise ValidationError(f"grid dimension mismatch: {shapes}")
    if (cam.width, cam.height) != (rgb.width, rgb.height):
        raise ValidationError(
            f"camera resolution {cam.width}x{cam.height} does not match "
            f"grids {rgb.width}x{rgb.height}")
    if rgb.channels != 3:
        raise ValidationError("rgb must have 3 channels")

    d = depth.plane().astype(np.float64)
    bad = ~(np.isfinite(d) & (d > 0))
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise ValidationError(f"non-positive depth {d[r, c]} at ({r}, {c})")

    if normal.channels != 3:
        raise ValidationError("normal must have 3 channels")
    norms = np.linalg.norm(normal.data.astype(np.float64), axis=2)
    bad = np.abs(norms - 1.0) > normal_tol
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise ValidationError(f"non-unit normal (|n| = {norms[r, c]:.6f}) at ({r}, {c})")

    labels = semantic.plane().astype(np.int64)
    unknown = ~np.isin(labels, list(known_classes))
    if unknown.any():
        r, c = np.argwhere(unknown)[0]
        raise ValidationError(f"unknown class ID {labels[r, c]} at ({r}, {c})")

    return InputBundle(rgb=rgb, depth=depth, normal=normal, semantic=semantic, cam=cam)
