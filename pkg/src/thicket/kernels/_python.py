"""NumPy fallback for the hot raster kernels.

Mirrors the arithmetic of the compiled extension exactly (same sample
positions, same clamping, same interpolation grouping) so that both
backends agree to float rounding. Keep the two implementations in sync.
"""

import numpy as np


def _sample_grid(height, width, dx, dy):
    # Source coordinates for an output shifted by (+dx, +dy): out(r, c) = src(r-dy, c-dx).
    ys = np.arange(height, dtype=np.float64)[:, None] - dy
    xs = np.arange(width, dtype=np.float64)[None, :] - dx
    ys, xs = np.broadcast_arrays(ys, xs)
    return ys, xs


def _bilinear(src, ys, xs):
    h, w = src.shape
    valid = (ys >= 0.0) & (ys <= h - 1.0) & (xs >= 0.0) & (xs <= w - 1.0)
    y0 = np.floor(ys)
    x0 = np.floor(xs)
    fy = ys - y0
    fx = xs - x0
    y0 = np.clip(y0.astype(np.intp), 0, h - 1)
    x0 = np.clip(x0.astype(np.intp), 0, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    top = (1.0 - fx) * src[y0, x0] + fx * src[y0, x1]
    bot = (1.0 - fx) * src[y1, x0] + fx * src[y1, x1]
    return (1.0 - fy) * top + fy * bot, valid


def shift_image(src, dx, dy, fill=np.nan):
    """Bilinear shift of the image content by (+dx, +dy); uncovered pixels get `fill`."""
    ys, xs = _sample_grid(src.shape[0], src.shape[1], dx, dy)
    values, valid = _bilinear(src, ys, xs)
    return np.where(valid, values, fill)


def shift_accumulate(src, dx, dy, out_sum, out_cnt):
    """Accumulate the shifted image into `out_sum` and its validity into `out_cnt` (in place)."""
    ys, xs = _sample_grid(src.shape[0], src.shape[1], dx, dy)
    values, valid = _bilinear(src, ys, xs)
    out_sum += np.where(valid, values, 0.0)
    out_cnt += valid


def radon_project(image, angles_rad, det_count, supersample=1):
    """Pixel-driven projection: each pixel splats its value onto the two nearest detector bins.

    For projection angle phi the detector offset of pixel (x, y) is
    t = (x - cx) * cos(phi) - (y - cy) * sin(phi), so a straight feature
    running along direction (sin(phi), cos(phi)) lands in a single bin.
    With supersample=k each pixel is split into k*k point masses on a
    centered subgrid, which approximates the square pixel footprint and
    suppresses splat aliasing; mass conservation stays exact.
    """
    h, w = image.shape
    cy = (h - 1) / 2.0
    cx = (w - 1) / 2.0
    tc = (det_count - 1) / 2.0
    k = int(supersample)
    if k < 1:
        raise ValueError("supersample must be >= 1")
    offs = (np.arange(k, dtype=np.float64) - (k - 1) / 2.0) / k
    y = np.arange(h, dtype=np.float64)[:, None] - cy
    x = np.arange(w, dtype=np.float64)[None, :] - cx
    flat = image.ravel() / (k * k)
    out = np.zeros((len(angles_rad), det_count), dtype=np.float64)
    for a, phi in enumerate(angles_rad):
        cphi = np.cos(phi)
        sphi = np.sin(phi)
        row = np.zeros(det_count)
        for oy in offs:
            for ox in offs:
                # Grouping matches the compiled kernel: per-row base term first.
                t = ((x + ox) * cphi + (-(y + oy) * sphi + tc)).ravel()
                i0 = np.floor(t).astype(np.intp)
                f = t - i0
                w0 = flat * (1.0 - f)
                w1 = flat * f
                ok0 = (i0 >= 0) & (i0 <= det_count - 1)
                ok1 = (i0 + 1 >= 0) & (i0 + 1 <= det_count - 1)
                row += np.bincount(i0[ok0], weights=w0[ok0], minlength=det_count)
                row += np.bincount(i0[ok1] + 1, weights=w1[ok1], minlength=det_count)
        out[a] = row
    return out


def backproject(rows, angles_rad, height, width):
    """Smear each projection row back across the image with linear interpolation.

    The caller applies any normalization; this is the adjoint-style sum
    over angles using the same detector parameterization as radon_project.
    """
    det_count = rows.shape[1]
    cy = (height - 1) / 2.0
    cx = (width - 1) / 2.0
    tc = (det_count - 1) / 2.0
    y = np.arange(height, dtype=np.float64)[:, None] - cy
    x = np.arange(width, dtype=np.float64)[None, :] - cx
    out = np.zeros((height, width), dtype=np.float64)
    for a, phi in enumerate(angles_rad):
        t = x * np.cos(phi) + (-y * np.sin(phi) + tc)
        i0 = np.floor(t).astype(np.intp)
        f = t - i0
        v0 = np.where((i0 >= 0) & (i0 <= det_count - 1), rows[a][np.clip(i0, 0, det_count - 1)], 0.0)
        i1 = i0 + 1
        v1 = np.where((i1 >= 0) & (i1 <= det_count - 1), rows[a][np.clip(i1, 0, det_count - 1)], 0.0)
        out += (1.0 - f) * v0 + f * v1
    return out
