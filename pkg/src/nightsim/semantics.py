"""Semantic class table (Cityscapes train-ID convention).

The foreground set gates uncertainty detection and mesh completion: thin or
movable objects whose depth edges produce spurious mesh faces.
"""

TRAIN_ID_NAMES = {
    0: "road",
    1: "sidewalk",
    2: "building",
    3: "wall",
    4: "fence",
    5: "pole",
    6: "traffic_light",
    7: "traffic_sign",
    8: "vegetation",
    9: "terrain",
    10: "sky",
    11: "person",
    12: "rider",
    13: "car",
    14: "truck",
    15: "bus",
    16: "train",
    17: "motorcycle",
    18: "bicycle",
}

NAME_TO_TRAIN_ID = {v: k for k, v in TRAIN_ID_NAMES.items()}

# vehicles, persons, poles, traffic lights and traffic signs
DEFAULT_FOREGROUND_CLASSES = frozenset({5, 6, 7, 11, 12, 13, 14, 15, 16, 17, 18})

KNOWN_CLASS_IDS = frozenset(TRAIN_ID_NAMES) | {255}  # 255 = ignore/void
