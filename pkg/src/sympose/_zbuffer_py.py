"""Pure-numpy z-buffer kernels: the fallback backend.

Semantics (shared with the compiled twin in _zbuffer.pyx, which keeps the
exact same arithmetic expression order so both backends produce bit-identical
buffers):

- pixel centers sit at (x + 0.5, y + 0.5);
- a pixel is covered when its three edge functions share a sign (either
  winding: back-face culling is off);
- depth is perspective-correct (screen-space barycentric interpolation of
  1/z), and a strictly smaller depth wins the z-test, so on exact ties the
  earlier triangle in input order keeps the pixel;
- zero-signed-area triangles are skipped.
"""

import numpy as np

COMPILED = False


def fill_zbuffer(tri_xy, tri_invz, tri_id, depth, ids):
    """Rasterize triangles into the depth and id buffers (in place).

    tri_xy: (M, 3, 2) float64 screen coordinates.
    tri_invz: (M, 3) float64 inverse camera depth per corner (must be > 0).
    tri_id: (M,) int32 instance id per triangle.
    depth: (H, W) float64, initialized to +inf.
    ids: (H, W) int32, initialized to -1.
    """
    height, width = depth.shape
    for m in range(len(tri_xy)):
        ax, ay = tri_xy[m, 0, 0], tri_xy[m, 0, 1]
        bx, by = tri_xy[m, 1, 0], tri_xy[m, 1, 1]
        cx, cy = tri_xy[m, 2, 0], tri_xy[m, 2, 1]
        area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area == 0.0:
            continue
        x0 = max(0, int(np.ceil(min(ax, bx, cx) - 0.5)))
        x1 = min(width - 1, int(np.floor(max(ax, bx, cx) - 0.5)))
        y0 = max(0, int(np.ceil(min(ay, by, cy) - 0.5)))
        y1 = min(height - 1, int(np.floor(max(ay, by, cy) - 0.5)))
        if x0 > x1 or y0 > y1:
            continue
        px = np.arange(x0, x1 + 1, dtype=np.float64) + 0.5
        py = np.arange(y0, y1 + 1, dtype=np.float64) + 0.5
        px = px[None, :]
        py = py[:, None]
        w0 = (cx - bx) * (py - by) - (cy - by) * (px - bx)
        w1 = (ax - cx) * (py - cy) - (ay - cy) * (px - cx)
        w2 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        inside = ((w0 >= 0.0) & (w1 >= 0.0) & (w2 >= 0.0)) | \
                 ((w0 <= 0.0) & (w1 <= 0.0) & (w2 <= 0.0))
        if not inside.any():
            continue
        iz0, iz1, iz2 = tri_invz[m, 0], tri_invz[m, 1], tri_invz[m, 2]
        invz = (w0 * iz0 + w1 * iz1 + w2 * iz2) / area
        with np.errstate(divide="ignore"):
            z = 1.0 / invz
        window_d = depth[y0:y1 + 1, x0:x1 + 1]
        window_i = ids[y0:y1 + 1, x0:x1 + 1]
        win = inside & (invz > 0.0) & (z < window_d)
        window_d[win] = z[win]
        window_i[win] = tri_id[m]


def coverage_mask(tri_xy, mask):
    """Mark every pixel covered by any triangle (in place; mask is (H, W) uint8)."""
    height, width = mask.shape
    for m in range(len(tri_xy)):
        ax, ay = tri_xy[m, 0, 0], tri_xy[m, 0, 1]
        bx, by = tri_xy[m, 1, 0], tri_xy[m, 1, 1]
        cx, cy = tri_xy[m, 2, 0], tri_xy[m, 2, 1]
        area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if area == 0.0:
            continue
        x0 = max(0, int(np.ceil(min(ax, bx, cx) - 0.5)))
        x1 = min(width - 1, int(np.floor(max(ax, bx, cx) - 0.5)))
        y0 = max(0, int(np.ceil(min(ay, by, cy) - 0.5)))
        y1 = min(height - 1, int(np.floor(max(ay, by, cy) - 0.5)))
        if x0 > x1 or y0 > y1:
            continue
        px = np.arange(x0, x1 + 1, dtype=np.float64)[None, :] + 0.5
        py = np.arange(y0, y1 + 1, dtype=np.float64)[:, None] + 0.5
        w0 = (cx - bx) * (py - by) - (cy - by) * (px - bx)
        w1 = (ax - cx) * (py - cy) - (ay - cy) * (px - cx)
        w2 = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        inside = ((w0 >= 0.0) & (w1 >= 0.0) & (w2 >= 0.0)) | \
                 ((w0 <= 0.0) & (w1 <= 0.0) & (w2 <= 0.0))
        window = mask[y0:y1 + 1, x0:x1 + 1]
        window[inside] = 1
