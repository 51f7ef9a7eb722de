"""Deterministic generator of slope-bounded fracture facets and exactly
complementary fragment pairs.

Surfaces are band-limited cosine sums: z(x, y) = sum_i a_i cos(k_i . (x, y)
+ phi_i). The per-component gradient magnitude is a_i |k_i|, so rescaling
the amplitudes by s_max / sum_i(a_i |k_i|) certifies max |grad z| <= s_max
analytically; a fractal model would be rougher but admits no such exact
slope certificate. All randomness comes from the splitmix64 stream in
`rand`, so outputs are bit-deterministic in (seed, parameters).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import VoxelGrid
from .mesh import TriangleMesh, validate_mesh
from .rand import SplitMix64


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic facet; see module docstring for the model."""

    seed: int
    extent: tuple[float, float] = (16.0, 16.0)  # mm
    s_max: float = 0.5  # slope cap; nesting of digital-ball scale spaces
    #                      degrades above ~0.6 (see README notes)
    n_components: int = 4
    wavelengths: tuple[float, float] = (3.0, 9.0)  # mm band
    step: float = 0.25  # mm sampling step of the triangulated facet

    def __post_init__(self):
        if self.s_max <= 0:
            raise ConfigError("s_max must be positive")
        if self.step <= 0 or min(self.extent) <= 0:
            raise ConfigError("extent and step must be positive")
        if self.n_components < 0:
            raise ConfigError("n_components must be >= 0")
        if self.n_components and self.wavelengths[0] < 2.0 * self.step:
            raise ConfigError(
                f"shortest wavelength {self.wavelengths[0]} aliases at "
                f"step {self.step}; need >= 2*step")


def _components(spec: SynthSpec):
    """Draw (amplitude, wave vector, phase) triples and rescale amplitudes
    so the analytic slope bound sum(a_i |k_i|) equals s_max."""
    rng = SplitMix64(spec.seed)
    amps, kvecs, phases = [], [], []
    for _ in range(spec.n_components):
        a = rng.uniform(0.5, 1.0)
        wl = rng.uniform(*spec.wavelengths)
        theta = rng.uniform(0.0, 2.0 * math.pi)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        k = 2.0 * math.pi / wl
        amps.append(a)
        kvecs.append((k * math.cos(theta), k * math.sin(theta)))
        phases.append(phase)
    if not amps:
        return np.zeros(0), np.zeros((0, 2)), np.zeros(0)
    amps = np.array(amps)
    kvecs = np.array(kvecs)
    phases = np.array(phases)
    bound = float(np.sum(amps * np.hypot(kvecs[:, 0], kvecs[:, 1])))
    amps *= spec.s_max / bound
    return amps, kvecs, phases


def heightfield(spec: SynthSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate the facet height at broadcastable x, y (mm)."""
    amps, kvecs, phases = _components(spec)
    z = np.zeros(np.broadcast(x, y).shape)
    for a, (kx, ky), ph in zip(amps, kvecs, phases):
        z += a * np.cos(kx * x + ky * y + ph)
    return z


def analytic_slope_bound(spec: SynthSpec) -> float:
    """sum_i a_i |k_i| after rescaling (equals s_max unless flat)."""
    amps, kvecs, _ = _components(spec)
    if len(amps) == 0:
        return 0.0
    return float(np.sum(amps * np.hypot(kvecs[:, 0], kvecs[:, 1])))


def gen_facet(spec: SynthSpec) -> TriangleMesh:
    """Triangulated facet on a regular grid over the extent."""
    lx, ly = spec.extent
    nx = max(1, int(round(lx / spec.step)))
    ny = max(1, int(round(ly / spec.step)))
    xs = spec.step * np.arange(nx + 1)
    ys = spec.step * np.arange(ny + 1)
    z = heightfield(spec, xs[:, None], ys[None, :])
    verts = np.empty(((nx + 1) * (ny + 1), 3))
    verts[:, 0] = np.repeat(xs, ny + 1)
    verts[:, 1] = np.tile(ys, nx + 1)
    verts[:, 2] = z.ravel()
    i = np.repeat(np.arange(nx), ny)
    j = np.tile(np.arange(ny), nx)
    v00 = i * (ny + 1) + j
    v10 = (i + 1) * (ny + 1) + j
    v11 = (i + 1) * (ny + 1) + j + 1
    v01 = i * (ny + 1) + j + 1
    faces = np.empty((2 * nx * ny, 3), dtype=np.int64)
    faces[0::2] = np.stack([v00, v10, v11], axis=1)
    faces[1::2] = np.stack([v00, v11, v01], axis=1)
    mesh = TriangleMesh(verts, faces, name=f"synth{spec.seed}")
    validate_mesh(mesh)
    return mesh


def gen_pair(spec: SynthSpec, thickness: float, g: float,
             pad: int = 12) -> tuple[VoxelGrid, VoxelGrid, VoxelGrid]:
    """Complementary fragment pair (X, Y) and mask M on a voxelized slab.

    The slab footprint is the facet extent, the mask is the slab eroded by
    one voxel, and the crack is the facet heightfield centered mid-slab:
    X takes the voxels with center z <= crack (the closed side of the
    ambiguous layer), Y = M minus X. `pad` empty voxels surround the slab
    so that morphology up to roughly (pad - 1) * g stays in-grid.
    """
    if thickness <= 0 or g <= 0:
        raise ConfigError("thickness and g must be positive")
    if pad < 1:
        raise ConfigError("pad must be >= 1")
    lx, ly = spec.extent
    nx = max(3, int(round(lx / g)))
    ny = max(3, int(round(ly / g)))
    nz = max(3, int(round(thickness / g)))
    xs = g * (np.arange(nx) + 0.5)
    ys = g * (np.arange(ny) + 0.5)
    crack = heightfield(spec, xs[:, None], ys[None, :]) + thickness / 2.0
    span = float(crack.max() - crack.min())
    if span + 2.0 * g > thickness:
        raise ConfigError(
            f"heightfield range {span:.3f} mm + 2 voxels exceeds slab "
            f"thickness {thickness} mm")

    dims = (nx + 2 * pad, ny + 2 * pad, nz + 2 * pad)
    origin = np.array([(0.5 - pad) * g, (0.5 - pad) * g, (0.5 - pad) * g])
    mask = np.zeros(dims, dtype=bool)
    mask[pad + 1:pad + nx - 1, pad + 1:pad + ny - 1, pad + 1:pad + nz - 1] = True

    zc = g * (np.arange(nz) + 0.5)
    below = zc[None, None, :] <= crack[:, :, None]
    xocc = np.zeros(dims, dtype=bool)
    xocc[pad:pad + nx, pad:pad + ny, pad:pad + nz] = below
    xocc &= mask
    yocc = mask & ~xocc

    m = VoxelGrid(origin, g, mask)
    return m.with_occupancy(xocc), m.with_occupancy(yocc), m
