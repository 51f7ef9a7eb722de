"""Complementarity testing between counterpart fragments, abrasion
modeling, and misalignment scoring.

Two fragments restricted to a mask M are exactly complementary when they
neither intersect nor leave gaps inside M. After simplifying with a
closing on one side and an opening on the other, the same two checks are
guaranteed only inside the doubly eroded mask (erosion by twice the
scale): masking does not commute with morphology, and a band of width
2 rho along the mask boundary can legitimately disagree.

Abrasion is modeled as a small-radius opening. Opening scale spaces at
radii at or above the abrasion size are untouched by it whenever the
digital ball at the larger radius is open with respect to the smaller
one; `ball_absorption` checks that precondition exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .edt import _edt_bool
from .errors import GeometryMismatchError
from .grid import VoxelGrid
from .morphology import (ScaleSpace, ball_offsets, brute_morphology, close,
                         dilate, erode, open_)
from .edt import squared_radius_threshold

Mask = VoxelGrid  # a mask is an ordinary grid co-registered with the fragments


@dataclass(frozen=True)
class ComplementarityReport:
    scale: float
    overlap_count: int
    gap_count: int
    eroded_mask_size: int
    max_penetration_mm: float
    verdict: str  # "exact" | "violations" | "empty_mask"

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "overlap_count": self.overlap_count,
            "gap_count": self.gap_count,
            "eroded_mask_size": self.eroded_mask_size,
            "max_penetration_mm": self.max_penetration_mm,
            "verdict": self.verdict,
        }


def _report(a: VoxelGrid, b: VoxelGrid, mask_occ: np.ndarray,
            scale: float) -> ComplementarityReport:
    size = int(np.count_nonzero(mask_occ))
    if size == 0:
        return ComplementarityReport(scale, 0, 0, 0, 0.0, "empty_mask")
    overlap = a.occupancy & b.occupancy & mask_occ
    n_overlap = int(np.count_nonzero(overlap))
    n_gap = int(np.count_nonzero(mask_occ & ~(a.occupancy | b.occupancy)))
    pen = 0.0
    if n_overlap:
        # depth of intrusion into the counterpart = distance to its complement
        fld, _ = _edt_bool(~b.occupancy, b.origin, b.spacing)
        pen = float(math.sqrt(int(fld.d2[overlap].max())) * b.spacing)
    verdict = "exact" if (n_overlap == 0 and n_gap == 0) else "violations"
    return ComplementarityReport(scale, n_overlap, n_gap, size, pen, verdict)


def check_exact(x: VoxelGrid, y: VoxelGrid, mask: Mask) -> ComplementarityReport:
    """Overlap/gap counts of the raw fragments inside the mask (scale 0)."""
    x.require_same_geometry(y)
    x.require_same_geometry(mask)
    return _report(x, y, mask.occupancy, 0.0)


def check_at_scale(x: VoxelGrid, y: VoxelGrid, mask: Mask, rho: float
                   ) -> tuple[ComplementarityReport, ComplementarityReport]:
    """Complementarity of the simplified fragments within the doubly
    eroded mask: report A tests (close(X), open(Y)), report B the swap."""
    x.require_same_geometry(y)
    x.require_same_geometry(mask)
    m2 = erode(mask, 2.0 * rho).occupancy
    if not m2.any():
        empty = ComplementarityReport(rho, 0, 0, 0, 0.0, "empty_mask")
        return empty, empty
    cx, ox = close(x, rho), open_(x, rho)
    cy, oy = close(y, rho), open_(y, rho)
    return (_report(cx, oy, m2, rho), _report(ox, cy, m2, rho))


def abrade(x: VoxelGrid, alpha: float) -> VoxelGrid:
    """Wear model: morphological opening of radius alpha."""
    return open_(x, alpha)


def abrasion_bound(alpha: float, slope: float) -> tuple[float, float]:
    """Worst-case surface drop caused by an opening of radius alpha on a
    slope-s Lipschitz surface: exact alpha*(sqrt(1+s^2)-1), and the
    small-slope approximation alpha*s^2/2."""
    if alpha < 0 or slope < 0:
        raise ValueError("alpha and slope must be >= 0")
    exact = alpha * (math.sqrt(1.0 + slope * slope) - 1.0)
    return exact, 0.5 * alpha * slope * slope


def ball_absorption(alpha: float, rho: float, g: float) -> bool:
    """True iff the digital ball at rho is open w.r.t. the ball at alpha
    (checked by brute force); the precondition for opening scale spaces
    to ignore abrasion at scales >= alpha."""
    t = squared_radius_threshold(rho, g)
    r = math.isqrt(t)
    ta = squared_radius_threshold(alpha, g)
    ra = math.isqrt(ta)
    n = 2 * (r + ra) + 3
    occ = np.zeros((n, n, n), dtype=bool)
    c = n // 2
    offs = ball_offsets(t)
    occ[offs[:, 0] + c, offs[:, 1] + c, offs[:, 2] + c] = True
    grid = VoxelGrid(np.zeros(3), g, occ)
    opened = brute_morphology(grid, alpha, "open")
    return bool(np.array_equal(opened.occupancy, occ))


@dataclass(frozen=True)
class RigidPose:
    rotation: np.ndarray  # (3, 3)
    translation: np.ndarray  # (3,)

    @classmethod
    def identity(cls) -> "RigidPose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_translation(cls, t) -> "RigidPose":
        return cls(np.eye(3), np.asarray(t, dtype=np.float64))

    def inverse_apply(self, points: np.ndarray) -> np.ndarray:
        return (points - self.translation) @ self.rotation


def resample_grid(src: VoxelGrid, like: VoxelGrid, pose: RigidPose
                  ) -> tuple[VoxelGrid, float]:
    """Nearest-voxel resampling of `src` (posed into `like`'s frame) onto
    `like`'s lattice; returns the resampled grid and the fraction of
    `like` voxels whose pullback lands inside `src`."""
    nx, ny, nz = like.dims
    ix = np.arange(nx)
    iy = np.arange(ny)
    iz = np.arange(nz)
    px, py, pz = np.meshgrid(ix, iy, iz, indexing="ij")
    pts = np.stack([px, py, pz], axis=-1).reshape(-1, 3) * like.spacing + like.origin
    back = pose.inverse_apply(pts)
    idx = np.rint((back - src.origin) / src.spacing).astype(np.int64)
    ok = np.all((idx >= 0) & (idx < np.array(src.dims)), axis=1)
    occ = np.zeros(len(pts), dtype=bool)
    occ[ok] = src.occupancy[idx[ok, 0], idx[ok, 1], idx[ok, 2]]
    coverage = float(np.count_nonzero(ok)) / len(pts)
    return like.with_occupancy(occ.reshape(like.dims)), coverage


def misalignment_score(ss_x: ScaleSpace, ss_y: ScaleSpace, pose: RigidPose,
                       mask: Mask) -> list[dict]:
    """Per-scale complementarity violation rate of X against Y posed into
    X's frame; 0 at the exact pose for exactly complementary pairs."""
    if ss_x.scales != ss_y.scales:
        raise GeometryMismatchError("scale spaces use different ladders")
    if ss_y.opened is None or ss_x.opened is None:
        raise ValueError("misalignment scoring needs openings; build the "
                         "scale spaces with compute_opening=True")
    like = ss_x.source
    like.require_same_geometry(mask)
    out = []
    for i, rho in enumerate(ss_x.scales):
        m2 = erode(mask, 2.0 * rho).occupancy
        size = int(np.count_nonzero(m2))
        if size == 0:
            out.append({"scale": rho, "score": None, "coverage": 0.0,
                        "verdict": "empty_mask"})
            continue
        oy, cov = resample_grid(ss_y.opened[i], like, pose)
        cy, _ = resample_grid(ss_y.closed[i], like, pose)
        ra = _report(ss_x.closed[i], oy, m2, rho)
        rb = _report(ss_x.opened[i], cy, m2, rho)
        bad = ra.overlap_count + ra.gap_count + rb.overlap_count + rb.gap_count
        out.append({"scale": rho, "score": bad / (2.0 * size),
                    "coverage": cov, "verdict": "scored"})
    return out
