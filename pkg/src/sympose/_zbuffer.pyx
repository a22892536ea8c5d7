# Compiled z-buffer kernels. Mirrors _zbuffer_py expression for expression
# (and is built with -ffp-contract=off) so both backends produce bit-identical
# buffers; see that module for the shared semantics.

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, floor

cnp.import_array()

COMPILED = True


def fill_zbuffer(double[:, :, ::1] tri_xy, double[:, ::1] tri_invz,
                 int[::1] tri_id, double[:, ::1] depth, int[:, ::1] ids):
    cdef Py_ssize_t height = depth.shape[0]
    cdef Py_ssize_t width = depth.shape[1]
    cdef Py_ssize_t m, x, y, x0, x1, y0, y1
    cdef double ax, ay, bx, by, cx, cy, area
    cdef double minx, maxx, miny, maxy
    cdef double px, py, w0, w1, w2, invz, z, iz0, iz1, iz2
    cdef int inst
    for m in range(tri_xy.shape[0]):
        ax = tri_xy[m, 0, 0]; ay = tri_xy[m, 0, 1]
        bx = tri_xy[m, 1, 0]; by = tri_xy[m, 1, 1]
        cx = tri_xy[m, 2, 0]; cy = tri_xy[m, 2, 1]
        area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area == 0.0:
            continue
        minx = min(ax, min(bx, cx)); maxx = max(ax, max(bx, cx))
        miny = min(ay, min(by, cy)); maxy = max(ay, max(by, cy))
        x0 = max(0, <Py_ssize_t>ceil(minx - 0.5))
        x1 = min(width - 1, <Py_ssize_t>floor(maxx - 0.5))
        y0 = max(0, <Py_ssize_t>ceil(miny - 0.5))
        y1 = min(height - 1, <Py_ssize_t>floor(maxy - 0.5))
        if x0 > x1 or y0 > y1:
            continue
        iz0 = tri_invz[m, 0]; iz1 = tri_invz[m, 1]; iz2 = tri_invz[m, 2]
        inst = tri_id[m]
        for y in range(y0, y1 + 1):
            py = <double>y + 0.5
            for x in range(x0, x1 + 1):
                px = <double>x + 0.5
                w0 = (cx - bx) * (py - by) - (cy - by) * (px - bx)
                w1 = (ax - cx) * (py - cy) - (ay - cy) * (px - cx)
                w2 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
                if not ((w0 >= 0.0 and w1 >= 0.0 and w2 >= 0.0) or
                        (w0 <= 0.0 and w1 <= 0.0 and w2 <= 0.0)):
                    continue
                invz = (w0 * iz0 + w1 * iz1 + w2 * iz2) / area
                if invz <= 0.0:
                    continue
                z = 1.0 / invz
                if z < depth[y, x]:
                    depth[y, x] = z
                    ids[y, x] = inst


def coverage_mask(double[:, :, ::1] tri_xy, unsigned char[:, ::1] mask):
    cdef Py_ssize_t height = mask.shape[0]
    cdef Py_ssize_t width = mask.shape[1]
    cdef Py_ssize_t m, x, y, x0, x1, y0, y1
    cdef double ax, ay, bx, by, cx, cy, area
    cdef double minx, maxx, miny, maxy
    cdef double px, py, w0, w1, w2
    for m in range(tri_xy.shape[0]):
        ax = tri_xy[m, 0, 0]; ay = tri_xy[m, 0, 1]
        bx = tri_xy[m, 1, 0]; by = tri_xy[m, 1, 1]
        cx = tri_xy[m, 2, 0]; cy = tri_xy[m, 2, 1]
        area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area == 0.0:
            continue
        minx = min(ax, min(bx, cx)); maxx = max(ax, max(bx, cx))
        miny = min(ay, min(by, cy)); maxy = max(ay, max(by, cy))
        x0 = max(0, <Py_ssize_t>ceil(minx - 0.5))
        x1 = min(width - 1, <Py_ssize_t>floor(maxx - 0.5))
        y0 = max(0, <Py_ssize_t>ceil(miny - 0.5))
        y1 = min(height - 1, <Py_ssize_t>floor(maxy - 0.5))
        if x0 > x1 or y0 > y1:
            continue
        for y in range(y0, y1 + 1):
            py = <double>y + 0.5
            for x in range(x0, x1 + 1):
                px = <double>x + 0.5
                w0 = (cx - bx) * (py - by) - (cy - by) * (px - bx)
                w1 = (ax - cx) * (py - cy) - (ay - cy) * (px - cx)
                w2 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
                if ((w0 >= 0.0 and w1 >= 0.0 and w2 >= 0.0) or
                        (w0 <= 0.0 and w1 <= 0.0 and w2 <= 0.0)):
                    mask[y, x] = 1
