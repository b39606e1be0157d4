# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled rasterization kernels.

Bit-compatible with the NumPy fallback in _core_py: identical expressions,
identical operation order, float64 throughout.
"""

from libc.math cimport ceil, cos, floor, sin, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF BOUNDARY_EPS = 1e-9

IMPL_NAME = "compiled"


def ellipse_mask(double cx, double cy, double a, double b, double theta,
                 int width, int height):
    """Boolean (height, width) mask of pixels whose center lies in the ellipse."""
    mask = np.zeros((height, width), dtype=bool)
    cdef cnp.uint8_t[:, ::1] m = mask.view(np.uint8)
    cdef double c = cos(theta)
    cdef double s = sin(theta)
    cdef double ex = sqrt((a * c) * (a * c) + (b * s) * (b * s))
    cdef double ey = sqrt((a * s) * (a * s) + (b * c) * (b * c))
    cdef Py_ssize_t x0 = max(0, <Py_ssize_t>floor(cx - ex) - 1)
    cdef Py_ssize_t x1 = min(width, <Py_ssize_t>ceil(cx + ex) + 1)
    cdef Py_ssize_t y0 = max(0, <Py_ssize_t>floor(cy - ey) - 1)
    cdef Py_ssize_t y1 = min(height, <Py_ssize_t>ceil(cy + ey) + 1)
    cdef Py_ssize_t x, y
    cdef double dx, dy, u, v
    if x0 >= x1 or y0 >= y1:
        return mask
    for y in range(y0, y1):
        dy = (<double>y + 0.5) - cy
        for x in range(x0, x1):
            dx = (<double>x + 0.5) - cx
            u = (dx * c + dy * s) / a
            v = (dy * c - dx * s) / b
            if u * u + v * v <= 1.0:
                m[y, x] = 1
    return mask


def polygon_mask(object xs_obj, object ys_obj, int width, int height):
    """Boolean (height, width) mask of pixels whose center lies in the polygon.

    Even-odd rule; pixel centers within BOUNDARY_EPS of an edge count inside.
    """
    xs_arr = np.ascontiguousarray(xs_obj, dtype=np.float64)
    ys_arr = np.ascontiguousarray(ys_obj, dtype=np.float64)
    cdef const double[::1] xs = xs_arr
    cdef const double[::1] ys = ys_arr
    cdef Py_ssize_t n = xs.shape[0]
    mask = np.zeros((height, width), dtype=bool)
    cdef cnp.uint8_t[:, ::1] m = mask.view(np.uint8)
    cdef double xmin = xs[0], xmax = xs[0], ymin = ys[0], ymax = ys[0]
    cdef Py_ssize_t i, j, x, y
    for i in range(1, n):
        if xs[i] < xmin: xmin = xs[i]
        if xs[i] > xmax: xmax = xs[i]
        if ys[i] < ymin: ymin = ys[i]
        if ys[i] > ymax: ymax = ys[i]
    cdef Py_ssize_t x0 = max(0, <Py_ssize_t>floor(xmin) - 1)
    cdef Py_ssize_t x1 = min(width, <Py_ssize_t>ceil(xmax) + 1)
    cdef Py_ssize_t y0 = max(0, <Py_ssize_t>floor(ymin) - 1)
    cdef Py_ssize_t y1 = min(height, <Py_ssize_t>ceil(ymax) + 1)
    if x0 >= x1 or y0 >= y1:
        return mask
    cdef double eps2 = BOUNDARY_EPS * BOUNDARY_EPS
    cdef double px, py, xi, yi, xj, yj, xint, ex, ey, t, ddx, ddy, d2, mind2
    cdef bint inside
    for y in range(y0, y1):
        py = <double>y + 0.5
        for x in range(x0, x1):
            px = <double>x + 0.5
            inside = 0
            mind2 = 1e300
            j = n - 1
            for i in range(n):
                xi = xs[i]; yi = ys[i]
                xj = xs[j]; yj = ys[j]
                if (yi > py) != (yj > py):
                    xint = (xj - xi) * (py - yi) / (yj - yi) + xi
                    if px < xint:
                        inside = not inside
                ex = xi - xj
                ey = yi - yj
                t = ((px - xj) * ex + (py - yj) * ey) / (ex * ex + ey * ey)
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                ddx = px - (xj + t * ex)
                ddy = py - (yj + t * ey)
                d2 = ddx * ddx + ddy * ddy
                if d2 < mind2:
                    mind2 = d2
                j = i
            if inside or mind2 <= eps2:
                m[y, x] = 1
    return mask
