"""Pinhole camera model linking pixel space and camera space.

Conventions: camera at the origin looking along +z, x right, y down.  A 3D
point (x, y, z) projects to pixel u = fx*x/z + cx, v = fy*y/z + cy.  The
horizontal field of view theta_f and the focal length are two views of the
same quantity: fx = (width/2) / tan(theta_f/2).
"""

import math
from dataclasses import dataclass


class CameraError(ValueError):
    pass


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    theta_f: float  # horizontal field of view, radians
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise CameraError("focal lengths must be positive")
        if not 0 < self.theta_f < math.pi:
            raise CameraError("field of view must lie in (0, pi)")
        expected_fx = (self.width / 2) / math.tan(self.theta_f / 2)
        if abs(self.fx - expected_fx) > 1e-6 * max(1.0, expected_fx):
            raise CameraError(
                f"fx = {self.fx} inconsistent with theta_f = {self.theta_f} "
                f"(expected fx = {expected_fx})")

    @classmethod
    def from_fov(cls, theta_f, width, height, fy=None, cx=None, cy=None):
        """Construct from the horizontal field of view; fx is derived."""
        fx = (width / 2) / math.tan(theta_f / 2)
        return cls(fx=fx, fy=fx if fy is None else fy,
                   cx=width / 2 if cx is None else cx,
                   cy=height / 2 if cy is None else cy,
                   theta_f=theta_f, width=width, height=height)

    @classmethod
    def from_focal(cls, fx, fy, width, height, cx=None, cy=None):
        """Construct from focal lengths; theta_f is derived from fx."""
        theta_f = 2 * math.atan((width / 2) / fx)
        return cls(fx=fx, fy=fy,
                   cx=width / 2 if cx is None else cx,
                   cy=height / 2 if cy is None else cy,
                   theta_f=theta_f, width=width, height=height)
