"""Probabilistic light activation and emissive-surface assignment.

Each light group flips on with an independent Bernoulli draw; all instances
of a group share their group's outcome, and ungrouped instances act as
singleton groups.  Draws come from the counter-based RNG keyed by
(seed, group id), so a given seed always produces the same nightscape.

Active instances then stamp emission onto mesh faces: a face emits iff at
least two of its three vertices re-project inside the instance's mask.
"""

from dataclasses import dataclass

import numpy as np

from . import rng
from .camera import CameraModel
from .mesh import SceneMesh

# key-space tags so group draws and singleton draws never collide
_KEY_GROUP = 1
_KEY_SINGLETON = 2


@dataclass(frozen=True)
class ActivationDraw:
    group_active: dict      # group_id -> bool
    instance_active: dict   # instance_id -> bool
    seed: int


def draw_activations(lights, seed) -> ActivationDraw:
    """One Bernoulli draw per light group; members inherit the group outcome.

    The activation probability of a group is taken from its lowest-id
    member (grouped instances are expected to share p).
    """
    groups = {}
    for li in sorted(lights, key=lambda l: l.instance_id):
        if li.group_id is not None:
            groups.setdefault(li.group_id, li.activation_p)

    group_active = {}
    for gid, p in groups.items():
        u = float(rng.uniform(seed, _KEY_GROUP, gid))
        group_active[gid] = u < p

    instance_active = {}
    for li in lights:
        if li.group_id is not None:
            instance_active[li.instance_id] = group_active[li.group_id]
        else:
            u = float(rng.uniform(seed, _KEY_SINGLETON, li.instance_id))
            instance_active[li.instance_id] = u < li.activation_p
    return ActivationDraw(group_active=group_active,
                          instance_active=instance_active, seed=seed)


def assign_emitters(scene: SceneMesh, lights, draw: ActivationDraw,
                    cam: CameraModel) -> SceneMesh:
    """Stamp per-face emission from active instances' masks.

    A face becomes an emitter iff >= 2 of its 3 vertices re-project into an
    active instance's mask; emitted radiance is s * (r/g, 1, b/g).
    """
    emission = np.zeros((len(scene.faces), 3))
    if not len(scene.faces):
        return _with_emission(scene, emission)

    v = scene.vertices
    z = v[:, 2]
    px = np.round(cam.fx * v[:, 0] / z + cam.cx).astype(np.int64)
    py = np.round(cam.fy * v[:, 1] / z + cam.cy).astype(np.int64)
    inside_img = (px >= 0) & (px < cam.width) & (py >= 0) & (py < cam.height)

    for li in lights:
        if li.mask is None or not draw.instance_active.get(li.instance_id, False):
            continue
        m = li.mask.plane() != 0
        if m.shape != (cam.height, cam.width):
            raise ValueError(
                f"mask resolution {m.shape[::-1]} does not match camera "
                f"{cam.width}x{cam.height} for instance {li.instance_id}")
        vert_in = np.zeros(len(v), dtype=bool)
        vert_in[inside_img] = m[py[inside_img], px[inside_img]]
        hits = vert_in[scene.faces].sum(axis=1)
        emission[hits >= 2] = li.radiance()
    return _with_emission(scene, emission)


def _with_emission(scene: SceneMesh, emission) -> SceneMesh:
    return SceneMesh(vertices=scene.vertices, faces=scene.faces,
                     vertex_color=scene.vertex_color, albedo=scene.albedo,
                     roughness=scene.roughness, grid_index=scene.grid_index,
                     emission=emission)
