"""Depth pre-filters: edge-aware smoothing and uncertainty detection.

Two pure functions run before depth optimization:

* ``cross_bilateral_filter``: smooths depth guided by two references, the
  semantic labels (same-class pixels contribute via a Kronecker delta) and
  the CIELAB image (color similarity weighted by a Gaussian scaled by mu).
* ``flag_uncertain_regions``: slides an l x l window (anchor at the top-left
  corner) and marks the whole window wherever depth variance exceeds a
  threshold AND the window mixes classes with at least one foreground class.
  Flagged pixels sit on likely depth discontinuities, where the single-sheet
  mesh would otherwise grow spurious faces.

Output pixels are independent; both filters are deterministic and
thread-count agnostic.
"""

import numpy as np

from .config import ConfigError, PipelineConfig
from .grids import PixelGrid


def _gauss(t2, sigma):
    """Unnormalized Gaussian exp(-t^2 / (2 sigma^2)) given squared distance."""
    if sigma == 0:
        return (t2 == 0).astype(np.float64)
    return np.exp(-t2 / (2.0 * sigma * sigma))


def cross_bilateral_filter(depth_in: PixelGrid, lab: PixelGrid, semantic: PixelGrid,
                           cfg: PipelineConfig) -> PixelGrid:
    """Dual-reference cross-bilateral filter of a depth grid.

    For each pixel p, a weighted average of depth over the window N(p) of
    radius cfg.bilateral_radius (clipped at image borders)::

        w(q) = G_sigma_s(|q - p|) * [ delta(h(q) == h(p))
                                      + mu * G_sigma_c(|J(q) - J(p)|) ]

    Weights are nonnegative and the q = p term contributes 1 + mu > 0, so
    the output is a convex combination of window depths.
    """
    d = depth_in.plane().astype(np.float64)
    h = semantic.plane().astype(np.int64)
    jj = lab.data.astype(np.float64)
    rows, cols = d.shape
    r = cfg.bilateral_radius
    sigma_s, sigma_c, mu = cfg.sigma_s, cfg.sigma_c, cfg.mu_bilateral

    num = np.zeros_like(d)
    den = np.zeros_like(d)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            gs = _gauss(float(dy * dy + dx * dx), sigma_s)
            # overlap of the image with itself shifted by (dy, dx)
            ys0, ys1 = max(0, dy), min(rows, rows + dy)
            xs0, xs1 = max(0, dx), min(cols, cols + dx)
            if ys0 >= ys1 or xs0 >= xs1:
                continue
            p = np.s_[ys0:ys1, xs0:xs1]
            q = np.s_[ys0 - dy:ys1 - dy, xs0 - dx:xs1 - dx]
            sem_w = (h[q] == h[p]).astype(np.float64)
            if mu != 0:
                dj2 = ((jj[q] - jj[p]) ** 2).sum(axis=2)
                w = gs * (sem_w + mu * _gauss(dj2, sigma_c))
            else:
                w = gs * sem_w
            num[p] += w * d[q]
            den[p] += w
    return PixelGrid(num / den, copy=False)


def flag_uncertain_regions(depth: PixelGrid, semantic: PixelGrid,
                           cfg: PipelineConfig) -> PixelGrid:
    """Binary uncertainty map from the dual-reference variance filter.

    Depth is normalized by its scene maximum first, so the variance
    threshold cfg.mu_var is scale-free.  A window is alerted iff the
    population variance of normalized depth exceeds mu_var and the window
    holds at least two distinct classes, one of them foreground.  Every
    pixel of an alerted window is marked.
    """
    d = depth.plane().astype(np.float64)
    h = semantic.plane().astype(np.int64)
    rows, cols = d.shape
    l = cfg.var_window
    if l > min(rows, cols):
        raise ConfigError(
            f"variance window {l} exceeds grid size {cols}x{rows}")

    dn = d / d.max()

    # window sums via integral images; population variance
    s1 = _window_sum(dn, l)
    s2 = _window_sum(dn * dn, l)
    n = float(l * l)
    var = s2 / n - (s1 / n) ** 2
    var = np.maximum(var, 0.0)

    fg = np.isin(h, list(cfg.foreground_classes))
    win_max = _window_reduce(h, l, np.maximum)
    win_min = _window_reduce(h, l, np.minimum)
    has_fg = _window_reduce(fg.astype(np.int64), l, np.maximum) > 0
    heterogeneous = win_max > win_min

    alerted = (var > cfg.mu_var) & heterogeneous & has_fg

    out = np.zeros_like(d)
    for i, j in np.argwhere(alerted):
        out[i:i + l, j:j + l] = 1.0
    return PixelGrid(out, copy=False)


def _window_sum(a, l):
    """Sum over l x l windows anchored top-left, valid anchors only."""
    c = np.cumsum(np.cumsum(a, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    return (c[l:, l:] - c[l:, :-l] - c[:-l, l:] + c[:-l, :-l])


def _window_reduce(a, l, op):
    """op-reduction over l x l windows anchored top-left (separable)."""
    rowred = a[:, :a.shape[1] - l + 1].copy()
    for k in range(1, l):
        rowred = op(rowred, a[:, k:a.shape[1] - l + 1 + k])
    out = rowred[:a.shape[0] - l + 1].copy()
    for k in range(1, l):
        out = op(out, rowred[k:a.shape[0] - l + 1 + k])
    return out
