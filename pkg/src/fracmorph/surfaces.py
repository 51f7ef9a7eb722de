"""Heightfield extraction from closed extrusion solids.

Because the solid is a heightfield extrusion, every z-column of a valid
(closed) solid holds one contiguous occupied run; the closing surface is
the top of that run and the opening surface is the bottom. Extracted
heights sit half a voxel beyond the last occupied center, the unbiased
estimate of where the true boundary crosses. The opening surface lives in
solid coordinates, i.e. it carries the extrusion-depth offset; callers
compare it to the facet after lifting by the depth (see `separation`).

Column extrema caused by the side wall rather than by either facet copy
are flagged through the distance transform's provenance: a column is
reliable only if its extremal voxel traces back to a seed voxel on the
matching copy of the source solid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .edt import ProvenanceMap
from .errors import GeometryMismatchError
from .grid import VoxelGrid, check_column_convex
from .mesh import TriangleMesh


@dataclass(frozen=True)
class HeightField:
    """Per-column surface height over an xy grid; NaN marks empty columns."""

    origin_xy: np.ndarray  # (2,) mm, center of column (0, 0)
    spacing: float
    z: np.ndarray  # (nx, ny) float64 mm, NaN where the column misses the solid
    kind: str  # "closing" | "opening"
    scale: float  # rho this surface was extracted at

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.z)


def _column_extrema(grid: VoxelGrid):
    occ = grid.occupancy
    nz = occ.shape[2]
    any_col = occ.any(axis=2)
    top = nz - 1 - np.argmax(occ[:, :, ::-1], axis=2)
    bot = np.argmax(occ, axis=2)
    return any_col, top, bot


def extract_surfaces(closed: VoxelGrid, scale: float) -> tuple[HeightField, HeightField]:
    """Split a closed solid into its closing (top) and opening (bottom)
    heightfields. Raises if any column has multiple occupied runs."""
    check_column_convex(closed)
    any_col, top, bot = _column_extrema(closed)
    g = closed.spacing
    z0 = closed.origin[2]
    zt = np.where(any_col, z0 + g * top + 0.5 * g, np.nan)
    zb = np.where(any_col, z0 + g * bot - 0.5 * g, np.nan)
    oxy = closed.origin[:2]
    return (HeightField(oxy, g, zt, "closing", scale),
            HeightField(oxy, g, zb, "opening", scale))


def separation(closing: HeightField, opening: HeightField,
               depth: float) -> tuple[np.ndarray, dict]:
    """Per-column closing-minus-opening gap net of the extrusion depth,
    clamped at zero; plus max/mean summary over defined columns."""
    if (closing.z.shape != opening.z.shape
            or closing.spacing != opening.spacing
            or not np.array_equal(closing.origin_xy, opening.origin_xy)):
        raise GeometryMismatchError("heightfields are on different grids")
    sep = closing.z - opening.z - depth
    sep = np.clip(sep, 0.0, None)
    both = closing.defined & opening.defined
    vals = sep[both]
    stats = {"max": float(vals.max()) if vals.size else 0.0,
             "mean": float(vals.mean()) if vals.size else 0.0,
             "columns": int(vals.size)}
    out = np.where(both, sep, np.nan)
    return out, stats


def to_mesh(hf: HeightField, z_offset: float = 0.0) -> TriangleMesh:
    """Triangulate the defined columns; +z orientation for closing
    surfaces, -z for opening (they carry the reversed copy)."""
    nx, ny = hf.z.shape
    defined = hf.defined
    vid = np.full((nx, ny), -1, dtype=np.int64)
    idx = np.argwhere(defined)
    vid[defined] = np.arange(len(idx))
    verts = np.empty((len(idx), 3))
    verts[:, 0] = hf.origin_xy[0] + hf.spacing * idx[:, 0]
    verts[:, 1] = hf.origin_xy[1] + hf.spacing * idx[:, 1]
    verts[:, 2] = hf.z[defined] + z_offset
    faces = []
    cell = defined[:-1, :-1] & defined[1:, :-1] & defined[1:, 1:] & defined[:-1, 1:]
    for i, j in np.argwhere(cell):
        v00, v10 = vid[i, j], vid[i + 1, j]
        v11, v01 = vid[i + 1, j + 1], vid[i, j + 1]
        if hf.kind == "closing":
            faces.append((v00, v10, v11))
            faces.append((v00, v11, v01))
        else:
            faces.append((v00, v11, v10))
            faces.append((v00, v01, v11))
    name = f"{hf.kind}_{hf.scale:g}"
    return TriangleMesh(verts, np.array(faces, dtype=np.int64).reshape(-1, 3),
                        name=name)


def label_source_seeds(source: VoxelGrid) -> tuple[np.ndarray, np.ndarray]:
    """Per-column top and bottom voxel indices of the source solid
    (-1 where the column is empty)."""
    any_col, top, bot = _column_extrema(source)
    return (np.where(any_col, top, -1), np.where(any_col, bot, -1))


def column_reliability(closed: VoxelGrid, source: VoxelGrid,
                       prov: ProvenanceMap, kind: str) -> np.ndarray:
    """True per column iff the extremal voxel of the closed solid traces
    (via the source solid's provenance map) to a seed voxel on the top
    copy (closing) or bottom copy (opening) of the source."""
    if kind not in ("closing", "opening"):
        raise ValueError("kind must be 'closing' or 'opening'")
    closed.require_same_geometry(source)
    nx, ny, _ = closed.dims
    any_col, top, bot = _column_extrema(closed)
    extremal = top if kind == "closing" else bot
    src_top, src_bot = label_source_seeds(source)
    want = src_top if kind == "closing" else src_bot

    xi, yi = np.nonzero(any_col)
    flat = prov.indices[xi, yi, extremal[xi, yi]]
    ok = flat >= 0
    fx = np.where(ok, flat % nx, 0)
    fy = np.where(ok, (flat // nx) % ny, 0)
    fz = flat // (nx * ny)
    reliable = np.zeros((nx, ny), dtype=bool)
    reliable[xi, yi] = ok & (fz == want[fx, fy])
    return reliable


def write_mask_pgm(mask: np.ndarray, path) -> None:
    """8-bit binary PGM, 255 = reliable; rows run along y, columns along x."""
    nx, ny = mask.shape
    img = np.where(mask.T, 255, 0).astype(np.uint8)  # row j = y index
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
