"""Ball-structuring-element morphology on voxel grids via distance fields.

The digital ball at radius rho is {v : |v|^2 <= t} with the integer
threshold t from `squared_radius_threshold`; every operation reduces to
exact integer comparisons against a distance field, so the algebraic
identities (adjunction, duality, idempotence) hold bit-for-bit.

Outside-the-grid convention: a plain grid is background outside its
bounds; its complement is therefore foreground outside. Operations take
`outside_full` to declare which case applies to their *input*. The
out-of-grid contribution to a distance field is analytic (distance to
the nearest face of the index box), so no extra transform is needed.
Results are exact for in-grid voxels; a dilation whose front would leave
the grid (input outside empty, result reaching the outermost shell)
raises InsufficientPaddingError instead of silently clipping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .edt import _edt_bool, squared_radius_threshold
from .errors import ConfigError, InsufficientPaddingError
from .grid import VoxelGrid


@dataclass(frozen=True)
class ScaleLadder:
    """Strictly increasing morphological scales in mm."""

    scales: tuple[float, ...]

    def __post_init__(self):
        sc = tuple(float(s) for s in self.scales)
        if any(s <= 0 for s in sc):
            raise ConfigError("scales must be positive")
        if any(b <= a for a, b in zip(sc, sc[1:])):
            raise ConfigError("scales must be strictly increasing")
        object.__setattr__(self, "scales", sc)

    def __iter__(self):
        return iter(self.scales)

    def __len__(self):
        return len(self.scales)

    @property
    def max(self) -> float:
        return self.scales[-1]


@dataclass(frozen=True)
class ScaleSpace:
    """Closed (and optionally opened) grids at each scale of a ladder."""

    source: VoxelGrid
    scales: tuple[float, ...]
    closed: tuple[VoxelGrid, ...]
    opened: Optional[tuple[VoxelGrid, ...]] = None

    def __len__(self):
        return len(self.scales)


def _shell_mask(dims, width: int) -> np.ndarray:
    """Voxels whose nearest out-of-grid voxel is within `width` steps."""
    mask = np.zeros(dims, dtype=bool)
    if width <= 0:
        return mask
    w = width
    mask[:w] = True
    mask[-w:] = True
    mask[:, :w] = True
    mask[:, -w:] = True
    mask[:, :, :w] = True
    mask[:, :, -w:] = True
    return mask


def _reach(occ: np.ndarray, t: int, outside_full: bool) -> np.ndarray:
    """{v : some feature of (occ [+ outside]) lies within squared distance t}."""
    field, _ = _edt_bool(occ, np.zeros(3), 1.0)
    hit = field.d2 <= t
    if outside_full:
        hit |= _shell_mask(occ.shape, math.isqrt(t))
    return hit


def dilate(grid: VoxelGrid, rho: float, *, outside_full: bool = False) -> VoxelGrid:
    t = squared_radius_threshold(rho, grid.spacing)
    out = grid.with_occupancy(_reach(grid.occupancy, t, outside_full))
    if not outside_full and out.shell_occupied():
        raise InsufficientPaddingError(
            f"dilation by {rho} reaches the grid boundary; re-voxelize with "
            "more padding")
    return out


def erode(grid: VoxelGrid, rho: float, *, outside_full: bool = False) -> VoxelGrid:
    # erosion = complement of dilating the complement; the complement's
    # outside polarity is the opposite of the input's
    t = squared_radius_threshold(rho, grid.spacing)
    return grid.with_occupancy(~_reach(~grid.occupancy, t, not outside_full))


def close(grid: VoxelGrid, rho: float, *, outside_full: bool = False) -> VoxelGrid:
    return erode(dilate(grid, rho, outside_full=outside_full), rho,
                 outside_full=outside_full)


def open_(grid: VoxelGrid, rho: float, *, outside_full: bool = False) -> VoxelGrid:
    return dilate(erode(grid, rho, outside_full=outside_full), rho,
                  outside_full=outside_full)


def scale_space(grid: VoxelGrid, ladder: ScaleLadder | Sequence[float],
                compute_opening: bool = True) -> ScaleSpace:
    """Closings (and openings) of the grid over a whole ladder.

    The distance field of the source (and of its complement) is shared
    across scales, so each additional scale costs two transforms for
    closing + opening, or one for closing only.
    """
    if not isinstance(ladder, ScaleLadder):
        ladder = ScaleLadder(tuple(ladder))
    g = grid.spacing
    occ = grid.occupancy
    fld_occ, _ = _edt_bool(occ, grid.origin, g)
    fld_emp = None
    if compute_opening:
        fld_emp, _ = _edt_bool(~occ, grid.origin, g)

    closed = []
    opened = [] if compute_opening else None
    for rho in ladder:
        t = squared_radius_threshold(rho, g)
        dil = fld_occ.d2 <= t
        shell = _shell_mask(grid.dims, math.isqrt(t))
        if bool((dil & _shell_mask(grid.dims, 1)).any()):
            raise InsufficientPaddingError(
                f"scale {rho} reaches the grid boundary")
        closed.append(grid.with_occupancy(~_reach(~dil, t, True)))
        if compute_opening:
            ero = ~((fld_emp.d2 <= t) | shell)
            opened.append(grid.with_occupancy(_reach(ero, t, False)))
    return ScaleSpace(grid, ladder.scales, tuple(closed),
                      tuple(opened) if compute_opening else None)


def verify_scale_space(ss: ScaleSpace) -> None:
    """Assert the containment schema gamma_R <= gamma_rho <= X <= phi_rho
    <= phi_R; raises AssertionError on the first violation."""
    x = ss.source.occupancy
    for i, rho in enumerate(ss.scales):
        pc = ss.closed[i].occupancy
        assert bool(np.all(x <= pc)), f"closing at {rho} is not extensive"
        if i:
            assert bool(np.all(ss.closed[i - 1].occupancy <= pc)), \
                f"closings not nested at {rho}"
        if ss.opened is not None:
            po = ss.opened[i].occupancy
            assert bool(np.all(po <= x)), f"opening at {rho} is not anti-extensive"
            if i:
                assert bool(np.all(po <= ss.opened[i - 1].occupancy)), \
                    f"openings not nested at {rho}"


# -- brute-force oracle -------------------------------------------------------

BRUTE_MAX_DIM = 32


def ball_offsets(t: int) -> np.ndarray:
    """All integer offsets with squared norm <= t, shape (k, 3)."""
    r = math.isqrt(t)
    rng = np.arange(-r, r + 1)
    ox, oy, oz = np.meshgrid(rng, rng, rng, indexing="ij")
    keep = ox * ox + oy * oy + oz * oz <= t
    return np.stack([ox[keep], oy[keep], oz[keep]], axis=1)


def _shift(occ: np.ndarray, off, fill: bool) -> np.ndarray:
    out = np.full_like(occ, fill)
    src = []
    dst = []
    for axis, d in enumerate(off):
        n = occ.shape[axis]
        d = int(d)
        if abs(d) >= n:
            return out
        if d >= 0:
            dst.append(slice(d, n))
            src.append(slice(0, n - d))
        else:
            dst.append(slice(0, n + d))
            src.append(slice(-d, n))
    out[tuple(dst)] = occ[tuple(src)]
    return out


def brute_morphology(grid: VoxelGrid, rho: float, op: str,
                     *, outside_full: bool = False) -> VoxelGrid:
    """Direct set-definition morphology for verification; grids <= 32^3.

    Dilation is the literal Minkowski sum with the digital ball; erosion
    the literal ball-fits test, with out-of-grid voxels following the
    input's outside polarity.
    """
    if max(grid.dims) > BRUTE_MAX_DIM:
        raise ValueError(f"brute morphology limited to {BRUTE_MAX_DIM}^3 grids")
    t = squared_radius_threshold(rho, grid.spacing)
    offs = ball_offsets(t)

    def dil(occ, fill):
        out = np.zeros_like(occ)
        for off in offs:
            out |= _shift(occ, off, fill)
        return out

    def ero(occ, fill):
        out = np.ones_like(occ)
        for off in offs:
            out &= _shift(occ, off, fill)
        return out

    occ = grid.occupancy
    if op == "dilate":
        res = dil(occ, outside_full)
    elif op == "erode":
        res = ero(occ, outside_full)
    elif op == "close":
        res = ero(dil(occ, outside_full), outside_full)
    elif op == "open":
        res = dil(ero(occ, outside_full), outside_full)
    else:
        raise ValueError(f"unknown op {op!r}")
    return grid.with_occupancy(res)


def boundary_voxel_count(grid: VoxelGrid) -> int:
    """Occupied voxels with at least one empty 6-neighbor (or on the shell)."""
    occ = grid.occupancy
    interior = np.ones_like(occ)
    interior[1:] &= occ[:-1]
    interior[:-1] &= occ[1:]
    interior[:, 1:] &= occ[:, :-1]
    interior[:, :-1] &= occ[:, 1:]
    interior[:, :, 1:] &= occ[:, :, :-1]
    interior[:, :, :-1] &= occ[:, :, 1:]
    interior[0] = interior[-1] = False
    interior[:, 0] = interior[:, -1] = False
    interior[:, :, 0] = interior[:, :, -1] = False
    return int(np.count_nonzero(occ & ~interior))
