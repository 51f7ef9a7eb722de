"""Independent reference implementations used as test oracles.

These deliberately avoid the code paths they check: the distance oracle
is the quadratic all-pairs scan, triangle intersection is a separating
axis test, and the profile-rolling oracle is dense grayscale morphology
with a half-disc structuring function.
"""

import numpy as np


def brute_edt_d2(occ: np.ndarray) -> np.ndarray:
    """O(n^2) nearest-feature squared distances.

    Uses |v - f|^2 = |v|^2 + |f|^2 - 2 v.f with exact float64 arithmetic
    (coordinates are small integers, so every term is exact).
    """
    dims = occ.shape
    sentinel = (dims[0] - 1) ** 2 + (dims[1] - 1) ** 2 + (dims[2] - 1) ** 2 + 1
    feats = np.argwhere(occ).astype(np.float64)
    if len(feats) == 0:
        return np.full(dims, sentinel, dtype=np.int64)
    pts = np.argwhere(np.ones(dims, dtype=bool)).astype(np.float64)
    d2 = (np.sum(pts ** 2, axis=1)[:, None] + np.sum(feats ** 2, axis=1)[None, :]
          - 2.0 * (pts @ feats.T))
    return np.rint(d2.min(axis=1)).astype(np.int64).reshape(dims)


def brute_nearest_flat_lexmin(occ: np.ndarray) -> np.ndarray:
    """For every voxel: the smallest flattened index (x fastest) among all
    nearest features; -1 where there is none. Pure-python, tiny grids only."""
    nx, ny, nz = occ.shape
    feats = [(x, y, z) for z in range(nz) for y in range(ny) for x in range(nx)
             if occ[x, y, z]]
    out = np.full(occ.shape, -1, dtype=np.int64)
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                best = None
                best_flat = -1
                for fx, fy, fz in feats:
                    d = (x - fx) ** 2 + (y - fy) ** 2 + (z - fz) ** 2
                    flat = fx + nx * (fy + ny * fz)
                    if best is None or d < best or (d == best
                                                    and flat < best_flat):
                        best = d
                        best_flat = flat
                out[x, y, z] = best_flat
    return out


def _project(tri: np.ndarray, axis: np.ndarray) -> tuple[float, float]:
    d = tri @ axis
    return float(d.min()), float(d.max())


def triangles_intersect(t1: np.ndarray, t2: np.ndarray,
                        eps: float = 1e-12) -> bool:
    """Separating-axis test over the face normals and the 9 edge cross
    products; True when no axis strictly separates the triangles."""
    e1 = [t1[1] - t1[0], t1[2] - t1[1], t1[0] - t1[2]]
    e2 = [t2[1] - t2[0], t2[2] - t2[1], t2[0] - t2[2]]
    axes = [np.cross(e1[0], e1[1]), np.cross(e2[0], e2[1])]
    axes.extend(np.cross(a, b) for a in e1 for b in e2)
    for axis in axes:
        n = np.linalg.norm(axis)
        if n < eps:
            continue
        axis = axis / n
        lo1, hi1 = _project(t1, axis)
        lo2, hi2 = _project(t2, axis)
        if hi1 < lo2 - eps or hi2 < lo1 - eps:
            return False
    return True


def roll_profile(xs: np.ndarray, f: np.ndarray, radius: float,
                 side: str) -> np.ndarray:
    """Dense rolling-ball transform of a 1-D profile.

    side 'above' = closing (ball rolled on top of the graph), 'below' =
    opening. Implemented as grayscale closing/opening with the half-disc
    structuring function b(u) = sqrt(r^2 - u^2), exact on the sample grid
    up to the sampling step.
    """
    step = xs[1] - xs[0]
    m = int(np.floor(radius / step))
    u = step * np.arange(-m, m + 1)
    b = np.sqrt(np.maximum(radius ** 2 - u ** 2, 0.0))
    n = len(f)
    big = float(np.abs(f).max() + 4.0 * radius + 1.0)

    def dilate(v):
        padded = np.full(n + 2 * m, -big)
        padded[m:m + n] = v
        out = np.empty(n)
        for i in range(n):
            out[i] = np.max(padded[i:i + 2 * m + 1] + b)
        return out

    def erode(v):
        padded = np.full(n + 2 * m, big)
        padded[m:m + n] = v
        out = np.empty(n)
        for i in range(n):
            out[i] = np.min(padded[i:i + 2 * m + 1] - b)
        return out

    if side == "above":
        return erode(dilate(f))
    if side == "below":
        return dilate(erode(f))
    raise ValueError("side must be 'above' or 'below'")
