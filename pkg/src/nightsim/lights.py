"""Inactive light sources: taxonomy, instances, and the sidecar file format.

A light instance is a daytime-annotated element (window, vehicle lamp,
street light, ...) that may switch on at night.  Its emitted color is a
chromaticity pair (r/g, b/g) plus a scalar strength s; its footprint is a
binary pixel mask.  Group classes bind instances that activate together
(e.g. all windows on one floor) and carry no mask of their own.

Sidecar format (UTF-8, line oriented, documented in docs/light_sidecar.md):
one record per instance, records separated by blank lines::

    instance 3
    class parked_front
    group 1
    p 0.7
    chromaticity 1.5 0.25
    strength 0.2

``group none`` marks an ungrouped instance.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grids import PixelGrid

#: Light-source classes, id -> (name, category).
LIGHT_CLASSES = {
    1: ("window_building", "building"),
    2: ("window_parked", "vehicle"),
    3: ("parked_front", "vehicle"),
    4: ("parked_rear", "vehicle"),
    5: ("moving_front", "vehicle"),
    6: ("moving_rear", "vehicle"),
    7: ("window_transport", "vehicle"),
    8: ("street_light_HT", "object"),
    9: ("street_light_LT", "object"),
    10: ("advertisement", "object"),
    11: ("clock", "object"),
    12: ("inferred", "object"),
    13: ("windows_group", "group"),
    14: ("car_group", "group"),
    15: ("truck_group", "group"),
    16: ("bus_group", "group"),
    17: ("bicycle_group", "group"),
    18: ("motorcycle_group", "group"),
    19: ("train_group", "group"),
    20: ("traffic_light_group", "group"),
    21: ("traffic_sign_group", "group"),
}

LIGHT_CLASS_IDS = {name: cid for cid, (name, _) in LIGHT_CLASSES.items()}
GROUP_CLASS_IDS = frozenset(cid for cid, (_, cat) in LIGHT_CLASSES.items() if cat == "group")


class LightError(ValueError):
    pass


@dataclass
class LightInstance:
    instance_id: int
    class_name: str
    mask: Optional[PixelGrid]  # binary footprint; group classes carry none
    group_id: Optional[int]
    chromaticity: tuple  # (r/g, b/g)
    strength: float
    activation_p: float

    def __post_init__(self):
        if self.class_name not in LIGHT_CLASS_IDS:
            raise LightError(f"unknown light class {self.class_name!r}")
        if not 0.0 <= self.activation_p <= 1.0:
            raise LightError(f"activation_p must lie in [0, 1], got {self.activation_p}")
        if self.chromaticity[0] <= 0 or self.chromaticity[1] <= 0:
            raise LightError("chromaticity components must be positive")
        if self.strength < 0:
            raise LightError("strength must be nonnegative")
        if self.class_id in GROUP_CLASS_IDS and self.mask is not None:
            raise LightError(f"group class {self.class_name!r} must not carry a mask")

    @property
    def class_id(self):
        return LIGHT_CLASS_IDS[self.class_name]

    def radiance(self):
        """Emitted linear RGB: strength times (r/g, 1, b/g)."""
        rg, bg = self.chromaticity
        return np.array([self.strength * rg, self.strength, self.strength * bg])


def extract_light_sample(gray_card_pixels):
    """Chromaticity and strength of a light from gray-card pixel samples.

    Takes a nonempty sequence of linear RGB triples, averages per channel and
    normalizes by green: chromaticity = (r/g, b/g), strength = mean green.
    """
    px = np.asarray(gray_card_pixels, dtype=np.float64)
    if px.size == 0:
        raise LightError("gray-card sample is empty")
    px = px.reshape(-1, 3)
    r, g, b = px.mean(axis=0)
    if g <= 0:
        raise LightError("degenerate gray-card sample: mean green is zero")
    return (r / g, b / g), g


def masks_from_id_map(id_map: PixelGrid):
    """Split a 16-bit instance-ID raster into per-instance binary masks.

    Pixel value = instance_id, 0 = none.  Returns {instance_id: PixelGrid}.
    """
    ids = id_map.plane().astype(np.int64)
    return {int(i): PixelGrid((ids == i).astype(np.float64))
            for i in np.unique(ids) if i != 0}


def write_sidecar(lights, path_or_file):
    """Write light instances in the line-oriented sidecar format."""
    records = []
    for li in lights:
        rg, bg = li.chromaticity
        records.append("\n".join([
            f"instance {li.instance_id}",
            f"class {li.class_name}",
            f"group {li.group_id if li.group_id is not None else 'none'}",
            f"p {li.activation_p!r}",
            f"chromaticity {rg!r} {bg!r}",
            f"strength {li.strength!r}",
        ]))
    text = "\n\n".join(records) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", encoding="utf-8") as fh:
            fh.write(text)


def read_sidecar(path_or_file, masks=None):
    """Parse a sidecar file; attaches masks from {instance_id: PixelGrid} if given."""
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        with open(path_or_file, "r", encoding="utf-8") as fh:
            text = fh.read()
    masks = masks or {}
    lights = []
    for block in text.split("\n\n"):
        lines = [ln.strip() for ln in block.splitlines() if ln.strip()]
        if not lines:
            continue
        rec = {}
        for ln in lines:
            key, _, rest = ln.partition(" ")
            rec[key] = rest.strip()
        try:
            iid = int(rec["instance"])
            chrom = tuple(float(t) for t in rec["chromaticity"].split())
            lights.append(LightInstance(
                instance_id=iid,
                class_name=rec["class"],
                mask=masks.get(iid),
                group_id=None if rec["group"] == "none" else int(rec["group"]),
                chromaticity=chrom,
                strength=float(rec["strength"]),
                activation_p=float(rec["p"]),
            ))
        except KeyError as exc:
            raise LightError(f"sidecar record missing field {exc} in block:\n{block}") from exc
    return lights
