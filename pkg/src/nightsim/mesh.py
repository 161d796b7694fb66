"""Grid-sheet mesh reconstruction and repair.

A lattice of vertices is warped onto the scene: slot (i, j) holds

    V = (d * (x + dx) * tan(fov/2),  d * (y + dy) * tan(fov/2),  d)

with x, y equally spaced in [-1, 1] over the lattice and d the depth
sampled at the slot's source pixel.  Each lattice cell splits into two
triangles along the fixed top-left -> bottom-right diagonal.

Repair happens in three passes: faces touching uncertain vertices are
deleted (the vertices stay behind as points); uncertain regions are
expanded with their adjacent foreground segments and split into background
and foreground completion regions; background holes are refilled row by row
with linearly interpolated vertices, foreground holes by breadth-first
propagation of mean neighbor depth, after which the affected cells are
re-triangulated to restore a watertight sheet.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from .camera import CameraModel
from .config import PipelineConfig
from .grids import GridError, PixelGrid

log = logging.getLogger(__name__)

# slot states
PRESENT = 1
DELETED = 2
INSERTED = 3

_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass
class MeshSheet:
    """Lattice mesh: per-slot vertex data plus per-cell triangle flags.

    Vertex (i, j) has flat index i * cols + j.  Cell (i, j) spans slots
    (i, j), (i, j+1), (i+1, j), (i+1, j+1); tri_a = (v00, v10, v11) and
    tri_b = (v00, v11, v01) along the fixed diagonal.
    """
    rows: int
    cols: int
    positions: np.ndarray       # (rows, cols, 3)
    colors: np.ndarray          # (rows, cols, 3) linear RGB
    roughness: np.ndarray       # (rows, cols)
    state: np.ndarray           # (rows, cols) uint8
    tri_a: np.ndarray           # (rows-1, cols-1) bool
    tri_b: np.ndarray           # (rows-1, cols-1) bool
    source_row: np.ndarray      # (rows, cols) source pixel row
    source_col: np.ndarray      # (rows, cols) source pixel col
    xhat: np.ndarray            # (cols,) lattice x in [-1, 1]
    yhat: np.ndarray            # (rows,) lattice y in [-1, 1]
    tan_half_fov: float
    detached_points: list = field(default_factory=list)  # (i, j) of deleted slots

    def copy(self):
        return MeshSheet(
            rows=self.rows, cols=self.cols,
            positions=self.positions.copy(), colors=self.colors.copy(),
            roughness=self.roughness.copy(), state=self.state.copy(),
            tri_a=self.tri_a.copy(), tri_b=self.tri_b.copy(),
            source_row=self.source_row.copy(), source_col=self.source_col.copy(),
            xhat=self.xhat.copy(), yhat=self.yhat.copy(),
            tan_half_fov=self.tan_half_fov,
            detached_points=list(self.detached_points))

    def faces(self):
        """All active triangles as an (n, 3) array of flat vertex indices."""
        out = []
        idx = np.arange(self.rows * self.cols).reshape(self.rows, self.cols)
        v00 = idx[:-1, :-1]
        v01 = idx[:-1, 1:]
        v10 = idx[1:, :-1]
        v11 = idx[1:, 1:]
        a = np.stack([v00[self.tri_a], v10[self.tri_a], v11[self.tri_a]], axis=1)
        b = np.stack([v00[self.tri_b], v11[self.tri_b], v01[self.tri_b]], axis=1)
        out = np.concatenate([a, b], axis=0) if a.size + b.size else np.zeros((0, 3), int)
        return out

    def face_count(self):
        return int(self.tri_a.sum() + self.tri_b.sum())


@dataclass(frozen=True)
class CompletionRegion:
    """A connected pixel mask that needs mesh completion."""
    mask: PixelGrid  # binary, image resolution
    kind: str        # "background" | "foreground"
    class_id: Optional[int] = None  # foreground class for kind="foreground"

    def __post_init__(self):
        if self.kind not in ("background", "foreground"):
            raise ValueError(f"bad region kind {self.kind!r}")
        if not self.mask.plane().any():
            raise ValueError("completion region mask is empty")


@dataclass
class SceneMesh:
    """Compacted triangle mesh handed to the renderer and exporters."""
    vertices: np.ndarray        # (n, 3) camera space
    faces: np.ndarray           # (m, 3) vertex indices
    vertex_color: np.ndarray    # (n, 3) linear RGB
    albedo: np.ndarray          # (n, 3)
    roughness: np.ndarray       # (n,)
    grid_index: list            # per vertex: ("grid", i, j) or ("inserted", i, j)
    emission: Optional[np.ndarray] = None  # (m, 3) per-face radiance or None

    def __post_init__(self):
        f = self.faces
        if f.size and f.max() >= len(self.vertices):
            raise GridError("face index out of range")
        if f.size:
            degen = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
            if degen.any():
                raise GridError("degenerate face (repeated vertex index)")


def build_mesh(depth: PixelGrid, cam: CameraModel, cfg: PipelineConfig,
               rgb: Optional[PixelGrid] = None,
               offsets=None) -> MeshSheet:
    """Warp a grid sheet onto the scene from sampled depth.

    The lattice is the image resolution divided by cfg.grid_downsample;
    depth (and color) are sampled at cell-center source pixels.  offsets,
    when given, is a pair of (rows, cols) grids added to the normalized
    lattice coordinates before scaling.
    """
    ds = cfg.grid_downsample
    h, w = depth.height, depth.width
    rows, cols = h // ds, w // ds
    if rows < 2 or cols < 2:
        raise GridError(f"lattice {cols}x{rows} too small (need at least 2x2)")

    src_r = np.minimum(np.arange(rows) * ds + ds // 2, h - 1)
    src_c = np.minimum(np.arange(cols) * ds + ds // 2, w - 1)
    d = depth.plane()[np.ix_(src_r, src_c)].astype(np.float64)

    xhat = -1.0 + 2.0 * np.arange(cols) / (cols - 1)
    yhat = -1.0 + 2.0 * np.arange(rows) / (rows - 1)
    dx = np.zeros((rows, cols))
    dy = np.zeros((rows, cols))
    if offsets is not None:
        dx = np.asarray(offsets[0], dtype=np.float64)
        dy = np.asarray(offsets[1], dtype=np.float64)
        if dx.shape != (rows, cols) or dy.shape != (rows, cols):
            raise GridError("offset grids must match the lattice resolution")

    t = np.tan(cam.theta_f / 2.0)
    pos = np.empty((rows, cols, 3))
    pos[..., 0] = d * (xhat[None, :] + dx) * t
    pos[..., 1] = d * (yhat[:, None] + dy) * t
    pos[..., 2] = d

    colors = np.full((rows, cols, 3), 0.5)
    if rgb is not None:
        colors = _bilinear_sample(rgb, src_r, src_c)

    sheet = MeshSheet(
        rows=rows, cols=cols, positions=pos, colors=colors,
        roughness=np.full((rows, cols), 1.0),
        state=np.full((rows, cols), PRESENT, dtype=np.uint8),
        tri_a=np.ones((rows - 1, cols - 1), dtype=bool),
        tri_b=np.ones((rows - 1, cols - 1), dtype=bool),
        source_row=np.broadcast_to(src_r[:, None], (rows, cols)).copy(),
        source_col=np.broadcast_to(src_c[None, :], (rows, cols)).copy(),
        xhat=xhat, yhat=yhat, tan_half_fov=t)
    return sheet


def _bilinear_sample(rgb: PixelGrid, src_r, src_c):
    v = rgb.data.astype(np.float64)
    if rgb.data.dtype == np.uint8:
        v = v / 255.0
    # integer source pixels: bilinear degenerates to a lookup
    return v[np.ix_(src_r, src_c)]


def lattice_mask(sheet: MeshSheet, pixel_mask: PixelGrid):
    """Sample a binary pixel mask at slot source pixels -> (rows, cols) bool."""
    m = pixel_mask.plane() != 0
    return m[sheet.source_row, sheet.source_col]


def delete_uncertain_faces(sheet: MeshSheet, u: PixelGrid) -> MeshSheet:
    """Remove every face with at least one uncertain vertex.

    A vertex is uncertain iff its source pixel is marked in the uncertainty
    map.  Uncertain slots become DELETED but their positions are kept as a
    detached point cloud.
    """
    out = sheet.copy()
    unc = lattice_mask(out, u)
    c00 = unc[:-1, :-1]
    c01 = unc[:-1, 1:]
    c10 = unc[1:, :-1]
    c11 = unc[1:, 1:]
    out.tri_a &= ~(c00 | c10 | c11)
    out.tri_b &= ~(c00 | c11 | c01)
    newly = unc & (out.state == PRESENT)
    out.state[newly] = DELETED
    out.detached_points.extend((int(i), int(j)) for i, j in np.argwhere(newly))
    return out


def expand_uncertain_region(u: PixelGrid, semantic: PixelGrid,
                            cfg: PipelineConfig):
    """Grow the uncertain map with adjacent foreground segments and split it.

    Foreground connected components (4-connectivity, per class) that touch a
    marked pixel join the region.  The expanded region minus foreground
    pixels yields background completion masks; its intersection with each
    foreground class yields foreground completion masks.  Every connected
    component becomes its own CompletionRegion.
    """
    um = u.plane() != 0
    sem = semantic.plane().astype(np.int64)
    if not um.any():
        return []

    grown = ndimage.binary_dilation(um, structure=_FOUR_CONN)
    fg_any = np.isin(sem, list(cfg.foreground_classes))
    expanded = um.copy()
    fg_components = []  # (class_id, component mask) adjacent to uncertainty
    for cid in sorted(cfg.foreground_classes):
        cls = sem == cid
        if not cls.any():
            continue
        labels, n = ndimage.label(cls, structure=_FOUR_CONN)
        touched = np.unique(labels[grown & cls])
        for lab in touched:
            if lab == 0:
                continue
            comp = labels == lab
            expanded |= comp
            fg_components.append((cid, comp))

    regions = []
    bg = expanded & ~fg_any
    labels, n = ndimage.label(bg, structure=_FOUR_CONN)
    for lab in range(1, n + 1):
        regions.append(CompletionRegion(
            mask=PixelGrid((labels == lab).astype(np.float64)), kind="background"))

    fg_part = expanded & fg_any
    for cid in sorted(cfg.foreground_classes):
        cls = fg_part & (sem == cid)
        if not cls.any():
            continue
        labels, n = ndimage.label(cls, structure=_FOUR_CONN)
        for lab in range(1, n + 1):
            regions.append(CompletionRegion(
                mask=PixelGrid((labels == lab).astype(np.float64)),
                kind="foreground", class_id=cid))
    return regions


def _restitch(sheet: MeshSheet, touched):
    """Re-add cell triangles where all four corners exist and a corner was filled."""
    ok = sheet.state != DELETED
    corner_ok = ok[:-1, :-1] & ok[:-1, 1:] & ok[1:, :-1] & ok[1:, 1:]
    cell_touched = (touched[:-1, :-1] | touched[:-1, 1:]
                    | touched[1:, :-1] | touched[1:, 1:])
    add = corner_ok & cell_touched
    sheet.tri_a |= add
    sheet.tri_b |= add


def complete_background(sheet: MeshSheet, regions) -> MeshSheet:
    """Fill background holes row by row with linearly interpolated vertices.

    For each run of missing slots [j_l, j_r] in a lattice row, with existing
    boundary vertices G_l at j_l - 1 and G_r at j_r + 1, slot j receives

        (G_l * (j_r - j + 1) + G_r * (j - j_l + 1)) / (j_r - j_l + 2)

    A run missing one boundary (region touching the image border) replicates
    the available side; a run missing both is skipped with a warning.
    Affected cells are then re-triangulated to restore watertightness.
    """
    out = sheet.copy()
    filled = np.zeros((out.rows, out.cols), dtype=bool)
    for region in regions:
        if region.kind != "background":
            continue
        lm = lattice_mask(out, region.mask)
        target = lm & (out.state == DELETED)
        for i in range(out.rows):
            row = target[i]
            j = 0
            while j < out.cols:
                if not row[j]:
                    j += 1
                    continue
                j_l = j
                while j + 1 < out.cols and row[j + 1]:
                    j += 1
                j_r = j
                j += 1
                left_ok = j_l - 1 >= 0 and out.state[i, j_l - 1] != DELETED
                right_ok = j_r + 1 < out.cols and out.state[i, j_r + 1] != DELETED
                if not left_ok and not right_ok:
                    log.warning("background completion: row %d run [%d, %d] has "
                                "no boundary vertices, skipped", i, j_l, j_r)
                    continue
                gl_pos = out.positions[i, j_l - 1] if left_ok else out.positions[i, j_r + 1]
                gr_pos = out.positions[i, j_r + 1] if right_ok else out.positions[i, j_l - 1]
                gl_col = out.colors[i, j_l - 1] if left_ok else out.colors[i, j_r + 1]
                gr_col = out.colors[i, j_r + 1] if right_ok else out.colors[i, j_l - 1]
                if not (left_ok and right_ok):
                    log.info("background completion: row %d run [%d, %d] "
                             "replicates one boundary side", i, j_l, j_r)
                denom = float(j_r - j_l + 2)
                for jj in range(j_l, j_r + 1):
                    wl = float(j_r - jj + 1)
                    wr = float(jj - j_l + 1)
                    out.positions[i, jj] = (gl_pos * wl + gr_pos * wr) / denom
                    out.colors[i, jj] = (gl_col * wl + gr_col * wr) / denom
                    out.state[i, jj] = INSERTED
                    filled[i, jj] = True
    _restitch(out, filled)
    return out


def complete_foreground(sheet: MeshSheet, region: CompletionRegion,
                        semantic: PixelGrid) -> MeshSheet:
    """Fill a foreground hole by breadth-first mean-depth propagation.

    Seeds are missing slots 4-adjacent to persisting mesh slots of the same
    class.  Each visited slot takes the mean depth of its already-present
    4-neighbors; its x/y follow the grid-sheet warp at the slot's lattice
    coordinates.  The frontier is processed in row-major order so results
    are deterministic.  A region with no seed is skipped with a warning.
    """
    if region.kind != "foreground":
        raise ValueError("complete_foreground needs a foreground region")
    out = sheet.copy()
    sem = semantic.plane().astype(np.int64)
    slot_class = sem[out.source_row, out.source_col]
    lm = lattice_mask(out, region.mask)
    target = lm & (out.state == DELETED) & (slot_class == region.class_id)
    if not target.any():
        return out

    persistent = (out.state == PRESENT) & (slot_class == region.class_id)

    def neighbors(i, j):
        for ni, nj in ((i - 1, j), (i, j - 1), (i, j + 1), (i + 1, j)):
            if 0 <= ni < out.rows and 0 <= nj < out.cols:
                yield ni, nj

    seeds = []
    for i, j in np.argwhere(target):
        if any(persistent[ni, nj] for ni, nj in neighbors(i, j)):
            seeds.append((int(i), int(j)))
    if not seeds:
        log.warning("foreground completion: region (class %s) has no seed "
                    "adjacent to persisting mesh, skipped", region.class_id)
        return out

    filled = np.zeros((out.rows, out.cols), dtype=bool)
    queued = np.zeros((out.rows, out.cols), dtype=bool)
    queue = sorted(seeds)
    for i, j in queue:
        queued[i, j] = True
    head = 0
    stalled = 0
    while head < len(queue):
        i, j = queue[head]
        head += 1
        ds, cols_acc = [], []
        for ni, nj in neighbors(i, j):
            if out.state[ni, nj] in (PRESENT, INSERTED):
                ds.append(out.positions[ni, nj, 2])
                cols_acc.append(out.colors[ni, nj])
        if not ds:
            # no filled neighbor yet; re-queue behind the current frontier
            stalled += 1
            if stalled > len(queue) - head + 1:
                log.warning("foreground completion: %d unreachable slots left",
                            len(queue) - head + 1)
                break
            queue.append((i, j))
            continue
        stalled = 0
        d = float(np.mean(ds))
        out.positions[i, j] = (d * out.xhat[j] * out.tan_half_fov,
                               d * out.yhat[i] * out.tan_half_fov, d)
        out.colors[i, j] = np.mean(cols_acc, axis=0)
        out.state[i, j] = INSERTED
        filled[i, j] = True
        for ni, nj in neighbors(i, j):
            if target[ni, nj] and not queued[ni, nj] and out.state[ni, nj] == DELETED:
                queue.append((ni, nj))
                queued[ni, nj] = True
    _restitch(out, filled)
    return out


def watertight_audit(sheet: MeshSheet, mask=None):
    """Count interior edges not shared by exactly two faces.

    mask, when given, is a (rows, cols) bool lattice mask restricting the
    audit to edges whose both endpoints lie inside it.  Edges on the lattice
    border are exempt (the sheet is open there by construction).
    """
    faces = sheet.faces()
    counts = {}
    for f in faces:
        for a, b in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
            key = (min(a, b), max(a, b))
            counts[key] = counts.get(key, 0) + 1
    cols = sheet.cols
    bad = 0
    for (a, b), n in counts.items():
        ra, ca = divmod(int(a), cols)
        rb, cb = divmod(int(b), cols)
        on_border = (
            (ra == 0 and rb == 0) or (ra == sheet.rows - 1 and rb == sheet.rows - 1)
            or (ca == 0 and cb == 0) or (ca == cols - 1 and cb == cols - 1))
        if on_border:
            continue
        if mask is not None and not (mask[ra, ca] and mask[rb, cb]):
            continue
        if n != 2:
            bad += 1
    return bad


def to_scene_mesh(sheet: MeshSheet, include_points=False) -> SceneMesh:
    """Compact the sheet into a SceneMesh of active vertices and faces.

    include_points also appends the detached point-cloud vertices (no faces
    reference them).
    """
    keep = sheet.state != DELETED
    flat_keep = keep.ravel()
    remap = -np.ones(sheet.rows * sheet.cols, dtype=np.int64)
    remap[flat_keep] = np.arange(flat_keep.sum())
    faces = sheet.faces()
    faces = remap[faces]
    if (faces < 0).any():
        raise GridError("face references a deleted slot")

    verts = sheet.positions.reshape(-1, 3)[flat_keep]
    colors = sheet.colors.reshape(-1, 3)[flat_keep]
    rough = sheet.roughness.ravel()[flat_keep]
    states = sheet.state.ravel()[flat_keep]
    gi = []
    for k, flat in enumerate(np.flatnonzero(flat_keep)):
        i, j = divmod(int(flat), sheet.cols)
        gi.append(("inserted" if states[k] == INSERTED else "grid", i, j))

    if include_points and sheet.detached_points:
        extra = np.array([sheet.positions[i, j] for i, j in sheet.detached_points])
        extra_col = np.array([sheet.colors[i, j] for i, j in sheet.detached_points])
        verts = np.concatenate([verts, extra])
        colors = np.concatenate([colors, extra_col])
        rough = np.concatenate([rough, np.ones(len(extra))])
        gi.extend(("point", i, j) for i, j in sheet.detached_points)

    return SceneMesh(vertices=verts, faces=faces, vertex_color=colors,
                     albedo=colors.copy(), roughness=rough, grid_index=gi)
