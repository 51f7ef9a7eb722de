"""Exact squared Euclidean distance transform with nearest-feature tracking.

The transform is separable: an axis scan along x produces per-row nearest
feature distances, then lower-envelope-of-parabolas passes along y and z
reduce the remaining dimensions. All arithmetic is integer, so results are
exact squared distances in voxel units; physical radii are converted once,
at threshold time.

Ties between equidistant features are broken toward the smallest flattened
voxel index (x-fastest order). This falls out of per-pass tie-breaking:
each pass prefers the smaller coordinate along its own axis, and the pass
order x, y, z makes the combined choice lexicographically smallest in
(z, y, x), which is exactly the flat-index order. Deterministic provenance
matters downstream: the reliability masks derived from it must reproduce.

Voxels with no feature anywhere get the sentinel ``max representable
squared distance + 1`` (and provenance -1), which keeps the field integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .errors import MeshParseError
from .grid import VoxelGrid, _read_header, _SNAP

_NEG = -(1 << 61)


@dataclass(frozen=True)
class DistanceField:
    """Per-voxel exact squared distance (voxel units) to the nearest feature."""

    origin: np.ndarray
    spacing: float
    d2: np.ndarray  # (nx, ny, nz) int64
    sentinel: int  # value used where the grid has no feature at all

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.d2.shape


@dataclass(frozen=True)
class ProvenanceMap:
    """Flattened index (x-fastest) of one nearest feature voxel, -1 if none."""

    origin: np.ndarray
    spacing: float
    indices: np.ndarray  # (nx, ny, nz) int64

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.indices.shape

    def unravel(self, flat: int) -> tuple[int, int, int]:
        nx, ny, _ = self.dims
        x = flat % nx
        y = (flat // nx) % ny
        z = flat // (nx * ny)
        return int(x), int(y), int(z)


def distance_sentinel(dims) -> int:
    nx, ny, nz = dims
    return (nx - 1) ** 2 + (ny - 1) ** 2 + (nz - 1) ** 2 + 1


@njit(cache=True)
def _pass_x(occ, d2, prov, inf):
    # scan state is carried per z so the inner loop runs along the
    # contiguous axis
    nx, ny, nz = occ.shape
    last = np.empty(nz, np.int64)
    for y in range(ny):
        last[:] = -1
        for x in range(nx):
            for z in range(nz):
                if occ[x, y, z]:
                    last[z] = x
                lf = last[z]
                if lf < 0:
                    d2[x, y, z] = inf
                    prov[x, y, z] = -1
                else:
                    d2[x, y, z] = (x - lf) * (x - lf)
                    prov[x, y, z] = lf + nx * (y + ny * z)
        last[:] = -1
        for x in range(nx - 1, -1, -1):
            for z in range(nz):
                if occ[x, y, z]:
                    last[z] = x
                rf = last[z]
                if rf >= 0:
                    dr = (rf - x) * (rf - x)
                    # strict <: on ties keep the left (smaller-x) feature
                    if dr < d2[x, y, z]:
                        d2[x, y, z] = dr
                        prov[x, y, z] = rf + nx * (y + ny * z)


@njit(cache=True)
def _envelope(g, pr, n, inf, v, s, out_d2, out_pr):
    """Lower envelope of parabolas y -> (y - q)^2 + g[q] at integer queries.

    Boundaries are exact: site r strictly beats site q (q < r) from
    y = floor(T / D) + 1 with T = r^2 - q^2 + g[r] - g[q], D = 2 (r - q),
    so equal-valued queries resolve to the smaller site.
    """
    k = -1
    for q in range(n):
        gq = g[q]
        if gq >= inf:
            continue
        ys = _NEG
        while k >= 0:
            vq = v[k]
            t = q * q - vq * vq + gq - g[vq]
            ys = t // (2 * (q - vq)) + 1
            if ys <= s[k]:
                k -= 1
            else:
                break
        k += 1
        v[k] = q
        s[k] = _NEG if k == 0 else ys
    if k < 0:
        for y in range(n):
            out_d2[y] = inf
            out_pr[y] = -1
        return
    j = 0
    for y in range(n):
        while j < k and s[j + 1] <= y:
            j += 1
        q = v[j]
        out_d2[y] = (y - q) * (y - q) + g[q]
        out_pr[y] = pr[q]


@njit(cache=True)
def _pass_y(d2, prov, inf):
    # outer loop on x keeps one (ny, nz) plane hot while its nz lines
    # are enveloped
    nx, ny, nz = d2.shape
    g = np.empty(ny, np.int64)
    pr = np.empty(ny, np.int64)
    od = np.empty(ny, np.int64)
    op = np.empty(ny, np.int64)
    v = np.empty(ny + 1, np.int64)
    s = np.empty(ny + 1, np.int64)
    for x in range(nx):
        for z in range(nz):
            for q in range(ny):
                g[q] = d2[x, q, z]
                pr[q] = prov[x, q, z]
            _envelope(g, pr, ny, inf, v, s, od, op)
            for y in range(ny):
                d2[x, y, z] = od[y]
                prov[x, y, z] = op[y]


@njit(cache=True)
def _pass_z(d2, prov, inf):
    nx, ny, nz = d2.shape
    g = np.empty(nz, np.int64)
    pr = np.empty(nz, np.int64)
    od = np.empty(nz, np.int64)
    op = np.empty(nz, np.int64)
    v = np.empty(nz + 1, np.int64)
    s = np.empty(nz + 1, np.int64)
    for y in range(ny):
        for x in range(nx):
            for q in range(nz):
                g[q] = d2[x, y, q]
                pr[q] = prov[x, y, q]
            _envelope(g, pr, nz, inf, v, s, od, op)
            for z in range(nz):
                d2[x, y, z] = od[z]
                prov[x, y, z] = op[z]


def edt(grid: VoxelGrid, features: str = "occupied") -> tuple[DistanceField, ProvenanceMap]:
    """Exact squared EDT of the grid, O(n) in the voxel count.

    `features` selects the feature polarity: distances to occupied or to
    empty voxels. Feature voxels get d2 = 0 and provenance = themselves.
    """
    if features == "occupied":
        occ = grid.occupancy
    elif features == "empty":
        occ = ~grid.occupancy
    else:
        raise ValueError("features must be 'occupied' or 'empty'")
    return _edt_bool(occ, grid.origin, grid.spacing)


def _edt_bool(occ: np.ndarray, origin, spacing) -> tuple[DistanceField, ProvenanceMap]:
    occ = np.ascontiguousarray(occ, dtype=bool)
    inf = distance_sentinel(occ.shape)
    d2 = np.empty(occ.shape, np.int64)
    prov = np.empty(occ.shape, np.int64)
    _pass_x(occ, d2, prov, inf)
    _pass_y(d2, prov, inf)
    _pass_z(d2, prov, inf)
    d2.flags.writeable = False
    prov.flags.writeable = False
    return (DistanceField(origin, spacing, d2, inf),
            ProvenanceMap(origin, spacing, prov))


def squared_radius_threshold(rho_mm: float, g_mm: float) -> int:
    """Integer threshold t so the digital ball is {v : |v|^2 <= t} in voxel
    units. Quotients within 1e-9 of an integer snap up, so radii expressed
    as k*g survive float division."""
    if rho_mm < 0:
        raise ValueError("radius must be >= 0")
    if g_mm <= 0:
        raise ValueError("spacing must be positive")
    q = (rho_mm / g_mm) ** 2
    t = math.floor(q)
    if q - t > 1.0 - _SNAP * max(1.0, q):
        t += 1
    return int(t)


def level_set(field: DistanceField, rho_mm: float, sense: str = "leq") -> VoxelGrid:
    """Threshold the field at physical radius rho: sense 'leq' keeps
    {v : d2 * g^2 <= rho^2}, 'gt' keeps the complement."""
    t = squared_radius_threshold(rho_mm, field.spacing)
    if sense == "leq":
        occ = field.d2 <= t
    elif sense == "gt":
        occ = field.d2 > t
    else:
        raise ValueError("sense must be 'leq' or 'gt'")
    return VoxelGrid(field.origin, field.spacing, occ)


# -- DFLD1 / PROV1 containers -------------------------------------------------

_DFLD_MAGIC = b"DFLD1\n"
_PROV_MAGIC = b"PROV1\n"


def _write_u64_volume(path, magic: bytes, origin, spacing, data: np.ndarray) -> None:
    ox, oy, oz = (float(c) for c in origin)
    header = (f"dims {data.shape[0]} {data.shape[1]} {data.shape[2]}\n"
              f"origin {ox!r} {oy!r} {oz!r}\n"
              f"spacing {float(spacing)!r}\n\n")
    flat = np.ascontiguousarray(data.ravel(order="F")).astype(np.uint64)
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(header.encode("ascii"))
        fh.write(flat.astype("<u8").tobytes())


def _read_u64_volume(path, magic: bytes):
    path = Path(path)
    with open(path, "rb") as fh:
        dims, origin, spacing = _read_header(fh, magic, path)
        n = dims[0] * dims[1] * dims[2]
        payload = fh.read(8 * n)
        if len(payload) != 8 * n:
            raise MeshParseError(f"{path}: truncated payload")
    data = np.frombuffer(payload, dtype="<u8").reshape(dims, order="F")
    return origin, spacing, data


def write_dfld(field: DistanceField, path) -> None:
    _write_u64_volume(path, _DFLD_MAGIC, field.origin, field.spacing, field.d2)


def read_dfld(path) -> DistanceField:
    origin, spacing, data = _read_u64_volume(path, _DFLD_MAGIC)
    d2 = data.astype(np.int64)
    return DistanceField(origin, spacing, d2, distance_sentinel(d2.shape))


def write_prov(prov: ProvenanceMap, path) -> None:
    _write_u64_volume(path, _PROV_MAGIC, prov.origin, prov.spacing,
                      prov.indices)


def read_prov(path) -> ProvenanceMap:
    origin, spacing, data = _read_u64_volume(path, _PROV_MAGIC)
    return ProvenanceMap(origin, spacing, data.astype(np.int64))
