"""Normal-guided depth refinement.

Depth gradients in camera space come from central differences in pixel
space scaled by the pinhole transform: dz/dx = (dz/du) * fx / d, with the
local depth d appearing in the scale.  The derived surface normal is the
normalized (-dz/dx, -dz/dy, 1).

Three losses drive per-pixel depth toward the reference normal map while
staying close to the initial estimate:

* normal loss: mean squared distance between derived and reference normals;
* continuity loss: mean of ((gX . N)^2 + (gY . N)^2) * (1 - U), with
  gX = (1, 0, dz/dx), gY = (0, 1, dz/dy) and U the uncertainty mask, which
  keeps flagged discontinuities out of the smoothing pressure;
* depth loss: mean squared change versus the initial depth estimate.

All three are means over their pixel sets so the weights transfer across
resolutions.  Border pixels use one-sided stencils and are excluded from
the normal and continuity losses; the depth loss covers every pixel.

The gradient is analytic back-propagation through the stencils, the fx/d
scaling (including the d-dependence) and the normalization; a finite
difference harness in the tests keeps it honest.  Optimization is plain
bias-corrected Adam with a positivity clamp on depth.
"""

from dataclasses import dataclass

import numpy as np

from .camera import CameraModel
from .grids import GridError, PixelGrid


@dataclass(frozen=True)
class LossBreakdown:
    normal_loss: float
    continuity_loss: float
    depth_loss: float
    total: float


def _check_same_shape(a, b, what):
    if tuple(a) != tuple(b):
        raise GridError(f"{what}: resolution mismatch {tuple(a)} vs {tuple(b)}")


def _pixel_gradients(d):
    """dz/du and dz/dv: central differences interior, one-sided at borders."""
    dzdu = np.zeros_like(d)
    dzdv = np.zeros_like(d)
    if d.shape[1] >= 2:
        dzdu = np.gradient(d, axis=1)
    if d.shape[0] >= 2:
        dzdv = np.gradient(d, axis=0)
    return dzdu, dzdv


def _pixel_gradients_adjoint(gu, gv, shape):
    """Adjoint of _pixel_gradients: accumulate upstream (gu, gv) onto depth."""
    out = np.zeros(shape)
    rows, cols = shape
    if cols >= 2:
        if cols > 2:
            out[:, 2:] += gu[:, 1:-1] / 2.0
            out[:, :-2] -= gu[:, 1:-1] / 2.0
        out[:, 0] -= gu[:, 0]
        out[:, 1] += gu[:, 0]
        out[:, -1] += gu[:, -1]
        out[:, -2] -= gu[:, -1]
    if rows >= 2:
        if rows > 2:
            out[2:, :] += gv[1:-1, :] / 2.0
            out[:-2, :] -= gv[1:-1, :] / 2.0
        out[0, :] -= gv[0, :]
        out[1, :] += gv[0, :]
        out[-1, :] += gv[-1, :]
        out[-2, :] -= gv[-1, :]
    return out


def depth_gradients(depth: PixelGrid, cam: CameraModel):
    """Camera-space depth gradients (dz/dx, dz/dy) as two PixelGrids."""
    d = depth.plane().astype(np.float64)
    dzdu, dzdv = _pixel_gradients(d)
    return (PixelGrid(dzdu * cam.fx / d, copy=False),
            PixelGrid(dzdv * cam.fy / d, copy=False))


def normal_from_depth(depth: PixelGrid, cam: CameraModel) -> PixelGrid:
    """Unit surface normals derived from depth; z-component always positive."""
    gx, gy = depth_gradients(depth, cam)
    gx, gy = gx.plane(), gy.plane()
    norm = np.sqrt(gx * gx + gy * gy + 1.0)
    n = np.stack([-gx / norm, -gy / norm, 1.0 / norm], axis=-1)
    return PixelGrid(n, copy=False)


def _interior_mask(shape):
    m = np.zeros(shape, dtype=bool)
    if shape[0] > 2 and shape[1] > 2:
        m[1:-1, 1:-1] = True
    return m


def normal_loss(depth: PixelGrid, cam: CameraModel, n_ref: PixelGrid) -> float:
    """Mean squared normal deviation over interior pixels."""
    _check_same_shape(depth.plane().shape, n_ref.data.shape[:2], "normal_loss")
    n = normal_from_depth(depth, cam).data
    interior = _interior_mask(depth.plane().shape)
    if not interior.any():
        return 0.0
    diff = n - n_ref.data
    return float(((diff ** 2).sum(axis=2))[interior].mean())


def continuity_loss(depth: PixelGrid, cam: CameraModel, n_ref: PixelGrid,
                    u: PixelGrid) -> float:
    """Mean masked squared projection of gradient vectors onto reference normals."""
    _check_same_shape(depth.plane().shape, n_ref.data.shape[:2], "continuity_loss")
    _check_same_shape(depth.plane().shape, u.plane().shape, "continuity_loss")
    gx, gy = depth_gradients(depth, cam)
    gx, gy = gx.plane(), gy.plane()
    n = n_ref.data
    tx = n[..., 0] + n[..., 2] * gx
    ty = n[..., 1] + n[..., 2] * gy
    interior = _interior_mask(gx.shape)
    if not interior.any():
        return 0.0
    keep = 1.0 - u.plane()
    return float(((tx * tx + ty * ty) * keep)[interior].mean())


def depth_loss(depth: PixelGrid, depth_est: PixelGrid) -> float:
    """Mean squared deviation from the initial depth estimate, all pixels."""
    d, de = depth.plane(), depth_est.plane()
    _check_same_shape(d.shape, de.shape, "depth_loss")
    return float(((d - de) ** 2).mean())


def total_loss(depth, cam, n_ref, depth_est, u, cfg) -> LossBreakdown:
    """Weighted combination of the three losses."""
    ln = normal_loss(depth, cam, n_ref)
    lc = continuity_loss(depth, cam, n_ref, u)
    ld = depth_loss(depth, depth_est)
    return LossBreakdown(
        normal_loss=ln, continuity_loss=lc, depth_loss=ld,
        total=cfg.lambda1 * ln + cfg.lambda2 * lc + cfg.lambda3 * ld)


def loss_gradient(depth, cam, n_ref, depth_est, u, cfg) -> PixelGrid:
    """Exact gradient of the combined loss with respect to per-pixel depth."""
    d = depth.plane().astype(np.float64)
    rows, cols = d.shape
    n_total = d.size
    nref = n_ref.data.astype(np.float64)
    keep = 1.0 - u.plane()
    interior = _interior_mask(d.shape)
    m = interior.sum()

    grad = 2.0 * cfg.lambda3 * (d - depth_est.plane()) / n_total

    if m > 0 and (cfg.lambda1 != 0 or cfg.lambda2 != 0):
        dzdu, dzdv = _pixel_gradients(d)
        gx = dzdu * cam.fx / d
        gy = dzdv * cam.fy / d

        # dL/dgx, dL/dgy accumulated over both normal-based losses
        dgx = np.zeros_like(d)
        dgy = np.zeros_like(d)

        if cfg.lambda1 != 0:
            norm = np.sqrt(gx * gx + gy * gy + 1.0)
            nhat = np.stack([-gx, -gy, np.ones_like(gx)], axis=-1) / norm[..., None]
            up = 2.0 * (nhat - nref) / m
            up[~interior] = 0.0
            # through normalization: gw = (up - (up . nhat) nhat) / |w|
            dot = (up * nhat).sum(axis=2)
            gw = (up - dot[..., None] * nhat) / norm[..., None]
            dgx += cfg.lambda1 * (-gw[..., 0])
            dgy += cfg.lambda1 * (-gw[..., 1])

        if cfg.lambda2 != 0:
            tx = nref[..., 0] + nref[..., 2] * gx
            ty = nref[..., 1] + nref[..., 2] * gy
            w = np.where(interior, keep, 0.0) * 2.0 / m
            dgx += cfg.lambda2 * w * tx * nref[..., 2]
            dgy += cfg.lambda2 * w * ty * nref[..., 2]

        # gx = dzdu * fx / d: split into the stencil path and the local 1/d path
        gu = dgx * cam.fx / d
        gv = dgy * cam.fy / d
        grad += -(dgx * gx + dgy * gy) / d
        grad += _pixel_gradients_adjoint(gu, gv, d.shape)

    return PixelGrid(grad, copy=False)


def refine_depth(depth_init, cam, n_ref, depth_est, u, cfg):
    """Optimize per-pixel depth with Adam; returns (depth, loss trace).

    The trace holds one LossBreakdown per step, evaluated before each
    update, plus the final state.  Depth is clamped to cfg.depth_floor
    after every step.  A non-finite loss aborts with the step index.
    """
    d = depth_init.plane().astype(np.float64).copy()
    m = np.zeros_like(d)
    v = np.zeros_like(d)
    b1, b2, eps, lr = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.learning_rate
    trace = []
    for t in range(1, cfg.opt_steps + 1):
        cur = PixelGrid(d)
        losses = total_loss(cur, cam, n_ref, depth_est, u, cfg)
        if not np.isfinite(losses.total):
            raise RuntimeError(f"non-finite loss at optimization step {t - 1}")
        trace.append(losses)
        g = loss_gradient(cur, cam, n_ref, depth_est, u, cfg).plane()
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        d = d - lr * m_hat / (np.sqrt(v_hat) + eps)
        d = np.maximum(d, cfg.depth_floor)
    final = PixelGrid(d)
    trace.append(total_loss(final, cam, n_ref, depth_est, u, cfg))
    return final, trace


def write_loss_trace(trace, path_or_file):
    """Emit the loss trace as text: step, normal, continuity, depth, total."""
    lines = ["step normal continuity depth total"]
    for i, lb in enumerate(trace):
        lines.append(f"{i} {lb.normal_loss!r} {lb.continuity_loss!r} "
                     f"{lb.depth_loss!r} {lb.total!r}")
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", encoding="utf-8") as fh:
            fh.write(text)
