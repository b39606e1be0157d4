"""Pure NumPy rasterization kernels.

Fallback used when the compiled extension is unavailable (or disabled via
EYESEG_EVAL_PURE=1). Must stay bit-identical to the compiled kernels: both
evaluate the same expressions in the same order on float64 values.
"""

from __future__ import annotations

import math

import numpy as np

BOUNDARY_EPS = 1e-9

IMPL_NAME = "numpy"


def ellipse_mask(
    cx: float,
    cy: float,
    a: float,
    b: float,
    theta: float,
    width: int,
    height: int,
) -> np.ndarray:
    """Boolean (height, width) mask of pixels whose center lies in the ellipse."""
    mask = np.zeros((height, width), dtype=bool)
    c = math.cos(theta)
    s = math.sin(theta)
    # axis-aligned extent of the rotated ellipse, padded one pixel
    ex = math.sqrt((a * c) ** 2 + (b * s) ** 2)
    ey = math.sqrt((a * s) ** 2 + (b * c) ** 2)
    x0 = max(0, int(math.floor(cx - ex)) - 1)
    x1 = min(width, int(math.ceil(cx + ex)) + 1)
    y0 = max(0, int(math.floor(cy - ey)) - 1)
    y1 = min(height, int(math.ceil(cy + ey)) + 1)
    if x0 >= x1 or y0 >= y1:
        return mask
    px = np.arange(x0, x1, dtype=np.float64) + 0.5
    py = np.arange(y0, y1, dtype=np.float64) + 0.5
    dx = px[None, :] - cx
    dy = py[:, None] - cy
    u = (dx * c + dy * s) / a
    v = (dy * c - dx * s) / b
    mask[y0:y1, x0:x1] = u * u + v * v <= 1.0
    return mask


def polygon_mask(xs: np.ndarray, ys: np.ndarray, width: int, height: int) -> np.ndarray:
    """Boolean (height, width) mask of pixels whose center lies in the polygon.

    Even-odd rule; pixel centers within BOUNDARY_EPS of an edge count inside.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    n = xs.shape[0]
    mask = np.zeros((height, width), dtype=bool)
    x0 = max(0, int(math.floor(xs.min())) - 1)
    x1 = min(width, int(math.ceil(xs.max())) + 1)
    y0 = max(0, int(math.floor(ys.min())) - 1)
    y1 = min(height, int(math.ceil(ys.max())) + 1)
    if x0 >= x1 or y0 >= y1:
        return mask
    px = np.arange(x0, x1, dtype=np.float64)[None, :] + 0.5
    py = np.arange(y0, y1, dtype=np.float64)[:, None] + 0.5

    inside = np.zeros((y1 - y0, x1 - x0), dtype=bool)
    mind2 = np.full((y1 - y0, x1 - x0), np.inf)
    eps2 = BOUNDARY_EPS * BOUNDARY_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        j = n - 1
        for i in range(n):
            xi, yi = xs[i], ys[i]
            xj, yj = xs[j], ys[j]
            crosses = (yi > py) != (yj > py)
            xint = (xj - xi) * (py - yi) / (yj - yi) + xi
            inside ^= crosses & (px < xint)
            # squared distance to edge j->i
            ex = xi - xj
            ey = yi - yj
            t = ((px - xj) * ex + (py - yj) * ey) / (ex * ex + ey * ey)
            t = np.clip(t, 0.0, 1.0)
            ddx = px - (xj + t * ex)
            ddy = py - (yj + t * ey)
            d2 = ddx * ddx + ddy * ddy
            np.minimum(mind2, d2, out=mind2)
            j = i
    mask[y0:y1, x0:x1] = inside | (mind2 <= eps2)
    return mask
