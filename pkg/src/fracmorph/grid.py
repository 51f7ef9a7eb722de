"""Axis-aligned binary occupancy grids and mesh voxelization.

Grid geometry: `origin` is the world position of the *center* of voxel
(0, 0, 0) and voxel (i, j, k) has center ``origin + spacing * (i, j, k)``.
Occupancy is a bool array indexed [x, y, z]; the flattened voxel order
used by provenance indices and by the container formats is x-fastest,
``flat = x + nx * (y + ny * z)``.

Container format VGRID1 (bit-exact):
    b"VGRID1\\n"
    "dims nx ny nz\\n"
    "origin ox oy oz\\n"    (shortest round-trip float repr)
    "spacing g\\n"
    "\\n"
    payload: x-fastest bit-packed occupancy, little-endian 64-bit words,
    final word zero-padded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ColumnConvexityError, GeometryMismatchError, MeshParseError, ResourceCapError
from .mesh import TriangleMesh, is_watertight

DEFAULT_VOXEL_CAP = 2_000_000_000

# relative slack when converting mm radii to integer squared-voxel
# thresholds; absorbs one-ulp errors in quotients like 0.3 / 0.1
_SNAP = 1e-9


@dataclass(frozen=True)
class VoxelGrid:
    """Binary occupancy lattice with origin (mm), spacing (mm) and dims."""

    origin: np.ndarray  # (3,) float64, center of voxel (0, 0, 0)
    spacing: float
    occupancy: np.ndarray  # (nx, ny, nz) bool

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64).reshape(3).copy()
        occ = np.ascontiguousarray(np.asarray(self.occupancy, dtype=bool))
        if occ.ndim != 3 or min(occ.shape) < 1:
            raise ValueError(f"occupancy must be 3-D with dims >= 1, got {occ.shape}")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        origin.flags.writeable = False
        occ.flags.writeable = False
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "occupancy", occ)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.occupancy.shape

    @property
    def n_voxels(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def count(self) -> int:
        return int(np.count_nonzero(self.occupancy))

    def index_to_world(self, idx) -> np.ndarray:
        return self.origin + self.spacing * np.asarray(idx, dtype=np.float64)

    def world_to_index(self, point) -> np.ndarray:
        return np.rint((np.asarray(point, dtype=np.float64) - self.origin)
                       / self.spacing).astype(np.int64)

    def same_geometry(self, other: "VoxelGrid") -> bool:
        return (self.dims == other.dims
                and self.spacing == other.spacing
                and bool(np.all(self.origin == other.origin)))

    def require_same_geometry(self, other: "VoxelGrid") -> None:
        if not self.same_geometry(other):
            raise GeometryMismatchError(
                f"grids disagree: dims {self.dims} vs {other.dims}, "
                f"spacing {self.spacing} vs {other.spacing}, "
                f"origin {self.origin} vs {other.origin}")

    def with_occupancy(self, occ: np.ndarray) -> "VoxelGrid":
        return VoxelGrid(self.origin, self.spacing, occ)

    def complement(self) -> "VoxelGrid":
        return self.with_occupancy(~self.occupancy)

    def shell_occupied(self) -> bool:
        """True if any voxel on the outermost shell is occupied."""
        occ = self.occupancy
        return bool(occ[0].any() or occ[-1].any()
                    or occ[:, 0].any() or occ[:, -1].any()
                    or occ[:, :, 0].any() or occ[:, :, -1].any())

    def column_runs_ok(self) -> bool:
        """True if every z-column's occupied voxels form one contiguous run."""
        occ = self.occupancy
        transitions = np.count_nonzero(np.diff(occ.astype(np.int8), axis=2), axis=2)
        edge = occ[:, :, 0].astype(np.int8) + occ[:, :, -1].astype(np.int8)
        return bool(np.all(transitions + edge <= 2))


def required_padding(rho_max_mm: float, g_mm: float) -> int:
    """Empty voxels per side needed so a dilation by rho_max stays in-grid."""
    if rho_max_mm < 0 or g_mm <= 0:
        raise ValueError("rho_max must be >= 0 and g > 0")
    q = rho_max_mm / g_mm
    nearest = round(q)
    if abs(q - nearest) <= _SNAP * max(1.0, abs(q)):
        return int(nearest) + 1
    return int(math.ceil(q)) + 1


def discretization_bound(g_mm: float) -> float:
    """Maximum displacement between a surface and its voxelization."""
    if g_mm <= 0:
        raise ValueError("g must be positive")
    return math.sqrt(3.0) * g_mm / 2.0


def pad_grid(grid: VoxelGrid, pad: int) -> VoxelGrid:
    """Surround the grid with `pad` empty voxels on all six sides."""
    if pad < 0:
        raise ValueError("pad must be >= 0")
    if pad == 0:
        return grid
    occ = np.zeros(tuple(d + 2 * pad for d in grid.dims), dtype=bool)
    occ[pad:-pad, pad:-pad, pad:-pad] = grid.occupancy
    return VoxelGrid(grid.origin - grid.spacing * pad, grid.spacing, occ)


def voxelize(mesh: TriangleMesh, g: float, pad: int = 0,
             max_voxels: int = DEFAULT_VOXEL_CAP) -> VoxelGrid:
    """Rasterize a watertight mesh: a voxel is occupied iff its center lies
    inside the solid, decided by +z ray parity.

    Vertex/edge grazing is avoided by offsetting every ray by g*1e-4 in x
    and y, which keeps the result deterministic. The grid tightly bounds
    the mesh, then `pad` empty voxels are added per side.
    """
    if g <= 0:
        raise ValueError("spacing must be positive")
    if pad < 0:
        raise ValueError("pad must be >= 0")
    if mesh.n_faces == 0:
        raise MeshParseError("cannot voxelize an empty mesh")
    if not is_watertight(mesh):
        raise MeshParseError("mesh is not watertight")

    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    dims = np.maximum(np.ceil((hi - lo) / g - _SNAP).astype(np.int64), 1)
    origin = lo + 0.5 * g  # center of voxel (0,0,0) of the tight grid
    nx, ny, nz = (int(d) for d in dims)
    total = (nx + 2 * pad) * (ny + 2 * pad) * (nz + 2 * pad)
    if total > max_voxels:
        raise ResourceCapError(
            f"{total} voxels exceeds cap of {max_voxels}")

    occ = np.zeros((nx, ny, nz), dtype=bool)
    # sub-voxel ray offsets break vertex/edge grazing; distinct irrational
    # ratio in y so rays also miss projected diagonal edges (y = x + c)
    eps_x = g * 1e-4
    eps_y = g * 1e-4 * 1.6180339887498949
    zs = origin[2] + g * np.arange(nz)

    tri = mesh.vertices[mesh.faces]
    # per-column crossing z values, collected triangle by triangle
    crossings: dict[tuple[int, int], list[float]] = {}
    for t in range(mesh.n_faces):
        a, b, c = tri[t]
        xy_cross = ((b[0] - a[0]) * (c[1] - a[1])
                    - (b[1] - a[1]) * (c[0] - a[0]))
        if xy_cross == 0.0:
            continue  # vertical triangle: +z rays run parallel to it
        txmin = min(a[0], b[0], c[0])
        txmax = max(a[0], b[0], c[0])
        tymin = min(a[1], b[1], c[1])
        tymax = max(a[1], b[1], c[1])
        i0 = max(0, int(math.ceil((txmin - eps_x - origin[0]) / g)))
        i1 = min(nx - 1, int(math.floor((txmax - eps_x - origin[0]) / g)))
        j0 = max(0, int(math.ceil((tymin - eps_y - origin[1]) / g)))
        j1 = min(ny - 1, int(math.floor((tymax - eps_y - origin[1]) / g)))
        if i0 > i1 or j0 > j1:
            continue
        px = origin[0] + eps_x + g * np.arange(i0, i1 + 1)
        py = origin[1] + eps_y + g * np.arange(j0, j1 + 1)
        qx = px[:, None] - a[0]
        qy = py[None, :] - a[1]
        # barycentric coordinates of the offset ray in the xy projection
        w1 = ((c[1] - a[1]) * qx - (c[0] - a[0]) * qy) / xy_cross
        w2 = (-(b[1] - a[1]) * qx + (b[0] - a[0]) * qy) / xy_cross
        inside = (w1 > 0) & (w2 > 0) & (w1 + w2 < 1)
        if not inside.any():
            continue
        zhit = a[2] + w1 * (b[2] - a[2]) + w2 * (c[2] - a[2])
        ii, jj = np.nonzero(inside)
        for k in range(len(ii)):
            crossings.setdefault((i0 + int(ii[k]), j0 + int(jj[k])),
                                 []).append(float(zhit[ii[k], jj[k]]))

    for (i, j), zc in crossings.items():
        zc.sort()
        if len(zc) % 2:
            raise MeshParseError(
                f"odd crossing count in column ({i},{j}); mesh not watertight "
                "along the ray direction")
        for lo_z, hi_z in zip(zc[0::2], zc[1::2]):
            # center inside iff an odd number of crossings lie strictly above
            k0 = int(np.searchsorted(zs, lo_z, side="left"))
            k1 = int(np.searchsorted(zs, hi_z, side="left"))
            occ[i, j, k0:k1] = True

    tight = VoxelGrid(origin, g, occ)
    return pad_grid(tight, pad)


def check_column_convex(grid: VoxelGrid) -> None:
    if not grid.column_runs_ok():
        raise ColumnConvexityError(
            "a z-column has multiple occupied runs; solid is not a valid "
            "heightfield extrusion at this resolution")


# -- VGRID1 container ---------------------------------------------------------

_VGRID_MAGIC = b"VGRID1\n"


def _pack_bits(flat_bool: np.ndarray) -> bytes:
    n = len(flat_bool)
    padded = np.zeros((n + 63) // 64 * 64, dtype=bool)
    padded[:n] = flat_bool
    return np.packbits(padded, bitorder="little").tobytes()


def _unpack_bits(payload: bytes, n: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8),
                         bitorder="little")
    return bits[:n].astype(bool)


def write_vgrid(grid: VoxelGrid, path) -> None:
    ox, oy, oz = (float(c) for c in grid.origin)
    header = (f"dims {grid.dims[0]} {grid.dims[1]} {grid.dims[2]}\n"
              f"origin {ox!r} {oy!r} {oz!r}\n"
              f"spacing {float(grid.spacing)!r}\n\n")
    flat = grid.occupancy.ravel(order="F")  # x fastest
    with open(path, "wb") as fh:
        fh.write(_VGRID_MAGIC)
        fh.write(header.encode("ascii"))
        fh.write(_pack_bits(flat))


def _read_header(fh, magic: bytes, path) -> tuple[tuple[int, int, int], np.ndarray, float]:
    if fh.readline() != magic:
        raise MeshParseError(f"{path}: bad magic, expected {magic!r}")
    fields: dict[str, list[str]] = {}
    while True:
        line = fh.readline().decode("ascii")
        if line == "\n":
            break
        if not line:
            raise MeshParseError(f"{path}: truncated header")
        key, *vals = line.split()
        fields[key] = vals
    try:
        dims = tuple(int(v) for v in fields["dims"])
        origin = np.array([float(v) for v in fields["origin"]])
        spacing = float(fields["spacing"][0])
    except (KeyError, ValueError, IndexError) as exc:
        raise MeshParseError(f"{path}: malformed header: {exc}") from exc
    if len(dims) != 3 or len(origin) != 3:
        raise MeshParseError(f"{path}: malformed header dims/origin")
    return dims, origin, spacing


def read_vgrid(path) -> VoxelGrid:
    path = Path(path)
    with open(path, "rb") as fh:
        dims, origin, spacing = _read_header(fh, _VGRID_MAGIC, path)
        n = dims[0] * dims[1] * dims[2]
        payload = fh.read((n + 63) // 64 * 8)
        if len(payload) != (n + 63) // 64 * 8:
            raise MeshParseError(f"{path}: truncated payload")
    flat = _unpack_bits(payload, n)
    occ = flat.reshape(dims, order="F")
    return VoxelGrid(origin, spacing, occ)
