# cython: boundscheck=False, wraparound=False, cdivision=True, nonecheck=False
"""Compiled raster kernels. Keep arithmetic in sync with _python.py."""

from libc.math cimport cos, sin, floor, NAN

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _bilinear_at(const double[:, ::1] src, double ys, double xs,
                                Py_ssize_t h, Py_ssize_t w) noexcept nogil:
    cdef Py_ssize_t y0 = <Py_ssize_t>floor(ys)
    cdef Py_ssize_t x0 = <Py_ssize_t>floor(xs)
    cdef double fy = ys - y0
    cdef double fx = xs - x0
    if y0 < 0:
        y0 = 0
    elif y0 > h - 1:
        y0 = h - 1
    if x0 < 0:
        x0 = 0
    elif x0 > w - 1:
        x0 = w - 1
    cdef Py_ssize_t y1 = y0 + 1
    cdef Py_ssize_t x1 = x0 + 1
    if y1 > h - 1:
        y1 = h - 1
    if x1 > w - 1:
        x1 = w - 1
    cdef double top = (1.0 - fx) * src[y0, x0] + fx * src[y0, x1]
    cdef double bot = (1.0 - fx) * src[y1, x0] + fx * src[y1, x1]
    return (1.0 - fy) * top + fy * bot


def shift_image(const double[:, ::1] src, double dx, double dy, double fill=NAN):
    """Bilinear shift of the image content by (+dx, +dy); uncovered pixels get `fill`."""
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t r, c
    cdef double ys, xs
    with nogil:
        for r in range(h):
            ys = r - dy
            if ys < 0.0 or ys > h - 1.0:
                for c in range(w):
                    out[r, c] = fill
                continue
            for c in range(w):
                xs = c - dx
                if xs < 0.0 or xs > w - 1.0:
                    out[r, c] = fill
                else:
                    out[r, c] = _bilinear_at(src, ys, xs, h, w)
    return out_arr


def shift_accumulate(const double[:, ::1] src, double dx, double dy,
                     double[:, ::1] out_sum, double[:, ::1] out_cnt):
    """Accumulate the shifted image into `out_sum` and its validity into `out_cnt` (in place)."""
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    if out_sum.shape[0] != h or out_sum.shape[1] != w:
        raise ValueError("accumulator shape mismatch")
    if out_cnt.shape[0] != h or out_cnt.shape[1] != w:
        raise ValueError("accumulator shape mismatch")
    cdef Py_ssize_t r, c
    cdef double ys, xs
    with nogil:
        for r in range(h):
            ys = r - dy
            if ys < 0.0 or ys > h - 1.0:
                continue
            for c in range(w):
                xs = c - dx
                if xs < 0.0 or xs > w - 1.0:
                    continue
                out_sum[r, c] += _bilinear_at(src, ys, xs, h, w)
                out_cnt[r, c] += 1.0
    return None


def radon_project(const double[:, ::1] image, const double[::1] angles_rad, Py_ssize_t det_count,
                  Py_ssize_t supersample=1):
    """Pixel-driven projection: each pixel splats its value onto the two nearest detector bins.

    supersample=k splits each pixel into k*k centered point masses, which
    approximates the square pixel footprint; total mass is unchanged.
    """
    cdef Py_ssize_t h = image.shape[0]
    cdef Py_ssize_t w = image.shape[1]
    cdef Py_ssize_t n_angles = angles_rad.shape[0]
    cdef Py_ssize_t k = supersample
    if k < 1:
        raise ValueError("supersample must be >= 1")
    out_arr = np.zeros((n_angles, det_count), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double cy = (h - 1) / 2.0
    cdef double cx = (w - 1) / 2.0
    cdef double tc = (det_count - 1) / 2.0
    cdef double inv_k2 = 1.0 / (k * k)
    cdef Py_ssize_t a, r, c, i0, iy, ix
    cdef double cphi, sphi, t, f, v, ybase, oy, ox
    with nogil:
        for a in range(n_angles):
            cphi = cos(angles_rad[a])
            sphi = sin(angles_rad[a])
            for iy in range(k):
                oy = (iy - (k - 1) / 2.0) / k
                for ix in range(k):
                    ox = (ix - (k - 1) / 2.0) / k
                    for r in range(h):
                        ybase = -((r - cy) + oy) * sphi + tc
                        for c in range(w):
                            v = image[r, c] * inv_k2
                            t = ((c - cx) + ox) * cphi + ybase
                            i0 = <Py_ssize_t>floor(t)
                            f = t - i0
                            if 0 <= i0 <= det_count - 1:
                                out[a, i0] += v * (1.0 - f)
                            if 0 <= i0 + 1 <= det_count - 1:
                                out[a, i0 + 1] += v * f
    return out_arr


def backproject(const double[:, ::1] rows, const double[::1] angles_rad,
                Py_ssize_t height, Py_ssize_t width):
    """Smear each projection row back across the image with linear interpolation."""
    cdef Py_ssize_t det_count = rows.shape[1]
    cdef Py_ssize_t n_angles = angles_rad.shape[0]
    out_arr = np.zeros((height, width), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double cy = (height - 1) / 2.0
    cdef double cx = (width - 1) / 2.0
    cdef double tc = (det_count - 1) / 2.0
    cdef Py_ssize_t a, r, c, i0
    cdef double cphi, sphi, t, f, v0, v1, ybase
    with nogil:
        for a in range(n_angles):
            cphi = cos(angles_rad[a])
            sphi = sin(angles_rad[a])
            for r in range(height):
                ybase = -(r - cy) * sphi + tc
                for c in range(width):
                    t = (c - cx) * cphi + ybase
                    i0 = <Py_ssize_t>floor(t)
                    f = t - i0
                    v0 = rows[a, i0] if 0 <= i0 <= det_count - 1 else 0.0
                    v1 = rows[a, i0 + 1] if 0 <= i0 + 1 <= det_count - 1 else 0.0
                    out[r, c] += (1.0 - f) * v0 + f * v1
    return out_arr
