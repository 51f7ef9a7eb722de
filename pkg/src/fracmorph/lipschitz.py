"""Lipschitz characterization of a facet from its normal cloud.

The facet's normals, taken as points on the unit sphere, are bounded by
their exact minimum enclosing sphere (Welzl move-to-front over at most 4
support points). The normalized sphere center is the visibility axis; the
half-angle is recomputed as the exact maximum angle between axis and any
normal rather than converted from the sphere radius, which avoids
chord-vs-arc error. The Lipschitz slope of the aligned heightfield is
tan(half-angle); the free double cone around the axis that stays clear of
the surface has half-angle pi/2 - half-angle, whose cotangent is the same
slope. Both angles are emitted in reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import VisibilityError
from .mesh import TriangleMesh
from .rand import shuffled_indices

_EPS_REL = 1e-12


@dataclass(frozen=True)
class EnclosingSphere:
    center: np.ndarray  # (3,)
    radius: float


@dataclass(frozen=True)
class LipschitzCone:
    axis: np.ndarray  # unit (3,)
    half_angle: float  # radians, < pi/2
    slope: float  # tan(half_angle)

    @property
    def free_half_angle(self) -> float:
        """Half-angle of the empty double cone around the axis."""
        return math.pi / 2.0 - self.half_angle


def _contains(cx, cy, cz, r, px, py, pz) -> bool:
    dx = px - cx
    dy = py - cy
    dz = pz - cz
    return math.sqrt(dx * dx + dy * dy + dz * dz) <= r * (1.0 + _EPS_REL) + 1e-14


def _sphere2(p, q):
    cx = (p[0] + q[0]) / 2.0
    cy = (p[1] + q[1]) / 2.0
    cz = (p[2] + q[2]) / 2.0
    r = math.dist(p, q) / 2.0
    return cx, cy, cz, r


def _sphere3(p, q, r):
    """Smallest sphere with all three points on its boundary (center lies
    in their plane); None for collinear input."""
    ux, uy, uz = q[0] - p[0], q[1] - p[1], q[2] - p[2]
    vx, vy, vz = r[0] - p[0], r[1] - p[1], r[2] - p[2]
    uu = ux * ux + uy * uy + uz * uz
    vv = vx * vx + vy * vy + vz * vz
    uv = ux * vx + uy * vy + uz * vz
    det = uu * vv - uv * uv
    if det <= 0.0 or det < 1e-14 * uu * vv:
        return None
    a = 0.5 * (uu * vv - vv * uv) / det
    b = 0.5 * (uu * vv - uu * uv) / det
    cx = p[0] + a * ux + b * vx
    cy = p[1] + a * uy + b * vy
    cz = p[2] + a * uz + b * vz
    rad = max(math.dist((cx, cy, cz), s) for s in (p, q, r))
    return cx, cy, cz, rad


def _sphere4(p, q, r, s):
    """Circumsphere of four points; None if (near-)coplanar."""
    a = np.array([[q[i] - p[i] for i in range(3)],
                  [r[i] - p[i] for i in range(3)],
                  [s[i] - p[i] for i in range(3)]])
    # rows of `a` are edge vectors; b holds half their squared lengths
    b = 0.5 * np.sum(a * a, axis=1)
    det = np.linalg.det(a)
    scale = np.prod(np.linalg.norm(a, axis=1))
    if scale == 0.0 or abs(det) < 1e-12 * scale:
        return None
    c = np.linalg.solve(a, b)
    cx, cy, cz = p[0] + c[0], p[1] + c[1], p[2] + c[2]
    rad = max(math.dist((cx, cy, cz), t) for t in (p, q, r, s))
    return cx, cy, cz, rad


def min_enclosing_sphere(points) -> EnclosingSphere:
    """Exact minimum enclosing sphere, expected O(n) after a deterministic
    shuffle (Welzl's move-to-front scheme unrolled over support levels)."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise ValueError("need at least one point")
    order = shuffled_indices(len(pts))
    p = [tuple(pts[i]) for i in order]

    def mes3(prefix, q1, q2, q3):
        s = _sphere3(q1, q2, q3)
        if s is None:
            s = max((_sphere2(a, b) for a, b in ((q1, q2), (q1, q3), (q2, q3))),
                    key=lambda t: t[3])
        for i, pi in enumerate(prefix):
            if not _contains(*s, *pi):
                cand = _sphere4(q1, q2, q3, pi)
                if cand is not None:
                    s = cand
        return s

    def mes2(prefix, q1, q2):
        s = _sphere2(q1, q2)
        for i, pi in enumerate(prefix):
            if not _contains(*s, *pi):
                s = mes3(prefix[:i], q1, q2, pi)
        return s

    def mes1(prefix, q1):
        s = (q1[0], q1[1], q1[2], 0.0)
        for i, pi in enumerate(prefix):
            if not _contains(*s, *pi):
                s = mes2(prefix[:i], q1, pi)
        return s

    s = (p[0][0], p[0][1], p[0][2], 0.0)
    for i in range(1, len(p)):
        if not _contains(*s, *p[i]):
            s = mes1(p[:i], p[i])
    return EnclosingSphere(np.array(s[:3]), s[3])


def fit_cone(normals) -> LipschitzCone:
    """Minimum bounding cone of unit normals: axis from the enclosing
    sphere of the tips, half-angle as the exact maximum deviation."""
    n = np.asarray(normals, dtype=np.float64).reshape(-1, 3)
    if len(n) == 0:
        raise ValueError("need at least one normal")
    lens = np.linalg.norm(n, axis=1)
    if np.any(np.abs(lens - 1.0) > 1e-9):
        raise ValueError("normals must be unit vectors (within 1e-9)")
    sphere = min_enclosing_sphere(n)
    cnorm = float(np.linalg.norm(sphere.center))
    if cnorm < 1e-12:
        raise VisibilityError(
            "normal cone spans a half-space; facet is not a heightfield "
            "in any direction and must be re-split upstream")
    axis = sphere.center / cnorm
    dots = n @ axis
    worst = float(dots.min())
    if worst <= 1e-12:
        raise VisibilityError(
            f"normal at {math.degrees(math.acos(max(-1.0, min(1.0, worst)))):.1f} deg "
            "from the fitted axis; half-angle >= 90 deg")
    psi = float(np.arccos(np.clip(dots, -1.0, 1.0)).max())
    return LipschitzCone(axis, psi, math.tan(psi))


def rotation_to_z(axis) -> np.ndarray:
    """Minimal rotation matrix taking `axis` to +z (about axis x z)."""
    a = np.asarray(axis, dtype=np.float64)
    a = a / np.linalg.norm(a)
    z = np.array([0.0, 0.0, 1.0])
    k = np.cross(a, z)
    sin = float(np.linalg.norm(k))
    cos = float(a @ z)
    if sin < 1e-15:
        if cos > 0:
            return np.eye(3)
        # antipodal: any half-turn through a horizontal axis works; pin x
        return np.diag([1.0, -1.0, -1.0])
    k /= sin
    kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + sin * kx + (1.0 - cos) * (kx @ kx)


def align_to_axis(mesh: TriangleMesh, cone: LipschitzCone) -> TriangleMesh:
    """Rigidly rotated copy with the cone axis mapped to +z."""
    rot = rotation_to_z(cone.axis)
    return TriangleMesh(mesh.vertices @ rot.T, mesh.faces, mesh.name)


def verify_lipschitz(mesh: TriangleMesh, slope: float, tol: float = 1e-9,
                     sample_cap: int = 20000):
    """Check |z_i - z_j| <= slope * |xy_i - xy_j| + tol over vertex pairs.

    Exhaustive up to `sample_cap` vertices; above that, a fixed-stride
    subsample of at most `sample_cap` vertices keeps the check
    deterministic. Returns (ok, worst) where worst = (i, j, excess_mm)
    for the pair with the largest violation margin.
    """
    v = mesh.vertices
    n = len(v)
    stride = max(1, -(-n // sample_cap))
    idx = np.arange(0, n, stride)
    z = v[idx, 2]
    xy = v[idx, :2]
    worst = (-math.inf, 0, 0)
    block = 1024
    for s in range(0, len(idx), block):
        e = min(s + block, len(idx))
        dz = np.abs(z[s:e, None] - z[None, :])
        dxy = np.linalg.norm(xy[s:e, None, :] - xy[None, :, :], axis=2)
        margin = dz - slope * dxy
        am = int(np.argmax(margin))
        bi, bj = divmod(am, margin.shape[1])
        if margin[bi, bj] > worst[0]:
            worst = (float(margin[bi, bj]), int(idx[s + bi]), int(idx[bj]))
    ok = worst[0] <= tol
    return ok, (worst[1], worst[2], worst[0])


def cone_report(cone: LipschitzCone) -> dict:
    """JSON-ready summary used by the CLI."""
    return {
        "axis": [float(c) for c in cone.axis],
        "half_angle_rad": cone.half_angle,
        "free_cone_half_angle_rad": cone.free_half_angle,
        "slope": cone.slope,
        "visible": True,
    }
