"""Deterministic Lambertian path tracer with next-event estimation.

Unidirectional path tracing over the scene triangle mesh: albedo/pi BRDF
with vertex-interpolated albedo, emissive faces sampled by area at every
path vertex (NEE), cosine-weighted bounce directions, and a constant
ambient term credited when a ray escapes the scene.  Emission is added
only when a camera ray hits an emitter directly; thereafter emitters
contribute through NEE alone.  Emitters are double-sided.

Every random number is a counter-based hash of (seed, pixel, sample,
counter), so the image is a pure function of (scene, settings) regardless
of traversal order or thread count.  The kernel is JIT-compiled with numba
and runs pixels sequentially.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit

from .camera import CameraModel
from .grids import PixelGrid
from .mesh import SceneMesh


class RenderError(RuntimeError):
    pass


@dataclass(frozen=True)
class RenderSettings:
    samples_per_pixel: int = 16
    max_bounces: int = 2
    ambient_radiance: tuple = (1e-3, 1e-3, 1e-3)
    exposure: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.samples_per_pixel < 1:
            raise ValueError("samples_per_pixel must be >= 1")
        if self.max_bounces < 0:
            raise ValueError("max_bounces must be >= 0")
        if self.exposure <= 0:
            raise ValueError("exposure must be positive")
        if any(a < 0 for a in self.ambient_radiance):
            raise ValueError("ambient_radiance must be nonnegative")


_EPS = 1e-7


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _rand(seed, pix, samp, ctr):
    golden = np.uint64(0x9E3779B97F4A7C15)
    h = _mix64(np.uint64(seed) ^ golden)
    h = _mix64(h ^ (np.uint64(pix) + golden))
    h = _mix64(h ^ (np.uint64(samp) + golden))
    h = _mix64(h ^ (np.uint64(ctr) + golden))
    return float(h >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _intersect(verts, tris, ox, oy, oz, dx, dy, dz, t_max, skip):
    """Closest Moller-Trumbore hit; returns (face, t, u, v)."""
    best = -1
    bt = t_max
    bu = 0.0
    bv = 0.0
    for f in range(tris.shape[0]):
        if f == skip:
            continue
        i0, i1, i2 = tris[f, 0], tris[f, 1], tris[f, 2]
        e1x = verts[i1, 0] - verts[i0, 0]
        e1y = verts[i1, 1] - verts[i0, 1]
        e1z = verts[i1, 2] - verts[i0, 2]
        e2x = verts[i2, 0] - verts[i0, 0]
        e2y = verts[i2, 1] - verts[i0, 1]
        e2z = verts[i2, 2] - verts[i0, 2]
        px = dy * e2z - dz * e2y
        py = dz * e2x - dx * e2z
        pz = dx * e2y - dy * e2x
        det = e1x * px + e1y * py + e1z * pz
        if -1e-12 < det < 1e-12:
            continue
        inv = 1.0 / det
        tx = ox - verts[i0, 0]
        ty = oy - verts[i0, 1]
        tz = oz - verts[i0, 2]
        u = (tx * px + ty * py + tz * pz) * inv
        if u < -1e-12 or u > 1.0 + 1e-12:
            continue
        qx = ty * e1z - tz * e1y
        qy = tz * e1x - tx * e1z
        qz = tx * e1y - ty * e1x
        v = (dx * qx + dy * qy + dz * qz) * inv
        if v < -1e-12 or u + v > 1.0 + 1e-12:
            continue
        t = (e2x * qx + e2y * qy + e2z * qz) * inv
        if _EPS < t < bt:
            best = f
            bt = t
            bu = u
            bv = v
    return best, bt, bu, bv


@njit(cache=True)
def _render_kernel(verts, tris, valbedo, emission, em_faces, em_cum, em_total,
                   fx, fy, cx, cy, width, height,
                   spp, max_bounces, amb0, amb1, amb2, seed, out, err):
    big = 1e30
    for pyi in range(height):
        for pxi in range(width):
            pix = pyi * width + pxi
            a0 = 0.0
            a1 = 0.0
            a2 = 0.0
            for s in range(spp):
                ctr = 0
                ju = _rand(seed, pix, s, ctr); ctr += 1
                jv = _rand(seed, pix, s, ctr); ctr += 1
                dx = (pxi + ju - cx) / fx
                dy = (pyi + jv - cy) / fy
                dz = 1.0
                inv = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
                dx *= inv; dy *= inv; dz *= inv
                ox = 0.0; oy = 0.0; oz = 0.0
                th0 = 1.0; th1 = 1.0; th2 = 1.0
                r0 = 0.0; r1 = 0.0; r2 = 0.0
                prev_face = -1
                for bounce in range(max_bounces + 1):
                    face, t, bu, bv = _intersect(verts, tris, ox, oy, oz,
                                                 dx, dy, dz, big, prev_face)
                    if face < 0:
                        r0 += th0 * amb0
                        r1 += th1 * amb1
                        r2 += th2 * amb2
                        break
                    hx = ox + t * dx
                    hy = oy + t * dy
                    hz = oz + t * dz
                    i0, i1, i2 = tris[face, 0], tris[face, 1], tris[face, 2]
                    if bounce == 0:
                        r0 += th0 * emission[face, 0]
                        r1 += th1 * emission[face, 1]
                        r2 += th2 * emission[face, 2]
                    # geometric normal, flipped toward the incoming ray
                    e1x = verts[i1, 0] - verts[i0, 0]
                    e1y = verts[i1, 1] - verts[i0, 1]
                    e1z = verts[i1, 2] - verts[i0, 2]
                    e2x = verts[i2, 0] - verts[i0, 0]
                    e2y = verts[i2, 1] - verts[i0, 1]
                    e2z = verts[i2, 2] - verts[i0, 2]
                    nx = e1y * e2z - e1z * e2y
                    ny = e1z * e2x - e1x * e2z
                    nz = e1x * e2y - e1y * e2x
                    nlen = np.sqrt(nx * nx + ny * ny + nz * nz)
                    if nlen == 0.0:
                        break
                    nx /= nlen; ny /= nlen; nz /= nlen
                    if nx * dx + ny * dy + nz * dz > 0.0:
                        nx = -nx; ny = -ny; nz = -nz
                    w0 = 1.0 - bu - bv
                    al0 = w0 * valbedo[i0, 0] + bu * valbedo[i1, 0] + bv * valbedo[i2, 0]
                    al1 = w0 * valbedo[i0, 1] + bu * valbedo[i1, 1] + bv * valbedo[i2, 1]
                    al2 = w0 * valbedo[i0, 2] + bu * valbedo[i1, 2] + bv * valbedo[i2, 2]

                    if em_faces.shape[0] > 0:
                        # next-event estimation: area-sample one emissive face
                        ue = _rand(seed, pix, s, ctr); ctr += 1
                        target = ue * em_total
                        lo = 0
                        hi = em_faces.shape[0] - 1
                        while lo < hi:
                            mid = (lo + hi) // 2
                            if em_cum[mid] < target:
                                lo = mid + 1
                            else:
                                hi = mid
                        lf = em_faces[lo]
                        su = _rand(seed, pix, s, ctr); ctr += 1
                        sv = _rand(seed, pix, s, ctr); ctr += 1
                        sq = np.sqrt(su)
                        b0 = 1.0 - sq
                        b1 = sq * (1.0 - sv)
                        b2 = sq * sv
                        l0, l1, l2 = tris[lf, 0], tris[lf, 1], tris[lf, 2]
                        lx = b0 * verts[l0, 0] + b1 * verts[l1, 0] + b2 * verts[l2, 0]
                        ly = b0 * verts[l0, 1] + b1 * verts[l1, 1] + b2 * verts[l2, 1]
                        lz = b0 * verts[l0, 2] + b1 * verts[l1, 2] + b2 * verts[l2, 2]
                        wx = lx - hx
                        wy = ly - hy
                        wz = lz - hz
                        dist2 = wx * wx + wy * wy + wz * wz
                        dist = np.sqrt(dist2)
                        if dist > _EPS:
                            wx /= dist; wy /= dist; wz /= dist
                            cos_s = nx * wx + ny * wy + nz * wz
                            if cos_s > 0.0 and lf != face:
                                f1x = verts[l1, 0] - verts[l0, 0]
                                f1y = verts[l1, 1] - verts[l0, 1]
                                f1z = verts[l1, 2] - verts[l0, 2]
                                f2x = verts[l2, 0] - verts[l0, 0]
                                f2y = verts[l2, 1] - verts[l0, 1]
                                f2z = verts[l2, 2] - verts[l0, 2]
                                lnx = f1y * f2z - f1z * f2y
                                lny = f1z * f2x - f1x * f2z
                                lnz = f1x * f2y - f1y * f2x
                                lnl = np.sqrt(lnx * lnx + lny * lny + lnz * lnz)
                                if lnl > 0.0:
                                    cos_l = abs((lnx * wx + lny * wy + lnz * wz) / lnl)
                                    if cos_l > 0.0:
                                        sface, st, _, _ = _intersect(
                                            verts, tris, hx + nx * 1e-9,
                                            hy + ny * 1e-9, hz + nz * 1e-9,
                                            wx, wy, wz, dist * (1.0 - 1e-6), face)
                                        if sface < 0 or sface == lf:
                                            g = cos_s * cos_l / dist2 * em_total
                                            k = g / np.pi
                                            r0 += th0 * al0 * k * emission[lf, 0]
                                            r1 += th1 * al1 * k * emission[lf, 1]
                                            r2 += th2 * al2 * k * emission[lf, 2]

                    if bounce == max_bounces:
                        break
                    # cosine-weighted bounce
                    bu1 = _rand(seed, pix, s, ctr); ctr += 1
                    bu2 = _rand(seed, pix, s, ctr); ctr += 1
                    rr = np.sqrt(bu1)
                    phi = 2.0 * np.pi * bu2
                    lx_ = rr * np.cos(phi)
                    ly_ = rr * np.sin(phi)
                    lz_ = np.sqrt(max(0.0, 1.0 - bu1))
                    # orthonormal basis around the normal
                    if abs(nx) > 0.9:
                        tx_, ty_, tz_ = 0.0, 1.0, 0.0
                    else:
                        tx_, ty_, tz_ = 1.0, 0.0, 0.0
                    bxx = ny * tz_ - nz * ty_
                    bxy = nz * tx_ - nx * tz_
                    bxz = nx * ty_ - ny * tx_
                    bl = np.sqrt(bxx * bxx + bxy * bxy + bxz * bxz)
                    bxx /= bl; bxy /= bl; bxz /= bl
                    byx = ny * bxz - nz * bxy
                    byy = nz * bxx - nx * bxz
                    byz = nx * bxy - ny * bxx
                    dx = lx_ * bxx + ly_ * byx + lz_ * nx
                    dy = lx_ * bxy + ly_ * byy + lz_ * ny
                    dz = lx_ * bxz + ly_ * byz + lz_ * nz
                    ox = hx + nx * 1e-9
                    oy = hy + ny * 1e-9
                    oz = hz + nz * 1e-9
                    th0 *= al0
                    th1 *= al1
                    th2 *= al2
                    prev_face = face
                if not (np.isfinite(r0) and np.isfinite(r1) and np.isfinite(r2)):
                    err[0] = pyi
                    err[1] = pxi
                    err[2] = s
                    return
                a0 += r0
                a1 += r1
                a2 += r2
            out[pyi, pxi, 0] = a0 / spp
            out[pyi, pxi, 1] = a1 / spp
            out[pyi, pxi, 2] = a2 / spp


def _face_areas(verts, tris):
    a = verts[tris[:, 1]] - verts[tris[:, 0]]
    b = verts[tris[:, 2]] - verts[tris[:, 0]]
    return 0.5 * np.linalg.norm(np.cross(a, b), axis=1)


def render(scene: SceneMesh, cam: CameraModel, settings: RenderSettings) -> PixelGrid:
    """Render the scene into a linear-RGB PixelGrid (before exposure/tone)."""
    if scene.emission is None:
        emission = np.zeros((len(scene.faces), 3))
    else:
        emission = np.asarray(scene.emission, dtype=np.float64)
    verts = np.ascontiguousarray(scene.vertices, dtype=np.float64)
    tris = np.ascontiguousarray(scene.faces, dtype=np.int64)
    albedo = np.ascontiguousarray(scene.albedo, dtype=np.float64)

    em_mask = emission.max(axis=1) > 0
    em_faces = np.flatnonzero(em_mask).astype(np.int64)
    if len(em_faces):
        areas = _face_areas(verts, tris[em_faces])
        em_cum = np.cumsum(areas)
        em_total = float(em_cum[-1])
    else:
        em_cum = np.zeros(0)
        em_total = 0.0

    out = np.zeros((cam.height, cam.width, 3))
    err = np.full(3, -1, dtype=np.int64)
    amb = settings.ambient_radiance
    _render_kernel(verts, tris, albedo, emission, em_faces, em_cum, em_total,
                   cam.fx, cam.fy, cam.cx, cam.cy, cam.width, cam.height,
                   settings.samples_per_pixel, settings.max_bounces,
                   float(amb[0]), float(amb[1]), float(amb[2]),
                   settings.seed, out, err)
    if err[0] >= 0:
        raise RenderError(
            f"non-finite radiance at pixel (row {err[0]}, col {err[1]}), "
            f"sample {err[2]}")
    return PixelGrid(out, copy=False)
