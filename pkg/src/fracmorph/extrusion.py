"""Watertight extrusion of an aligned facet along -z.

The solid carries two copies of the facet: the top keeps the original
orientation, the bottom is translated down by the depth and has reversed
winding, and a wall of triangulated quads stitches the boundary loop to
its translate. Propagating a morphological front from the whole solid
therefore expands the top copy and the orientation-reversed bottom copy
at once, which is what lets a single volumetric closing deliver both the
closing (top) and the opening (bottom) of the facet surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ExtrusionError
from .mesh import TriangleMesh, boundary_loops


@dataclass(frozen=True)
class ExtrudedSolid:
    mesh: TriangleMesh
    top_face_ids: range
    bottom_face_ids: range
    wall_face_ids: range
    depth: float


def choose_depth(z_extent: float, rho_max: float, g: float) -> float:
    """Extrusion depth: facet relief + 2 rho_max + 4 voxels of margin.

    Twice the maximum scale keeps the top and bottom closing fronts from
    interacting through the solid; the margin absorbs discretization.
    """
    if z_extent < 0 or rho_max <= 0 or g <= 0:
        raise ExtrusionError("z_extent must be >= 0, rho_max and g positive")
    return z_extent + 2.0 * rho_max + 4.0 * g


def extrude(facet: TriangleMesh, depth: float) -> ExtrudedSolid:
    """Sweep an aligned facet down by `depth` into a watertight solid.

    The facet must have exactly one boundary loop (no holes) and be
    aligned so its visibility axis is +z; then the sweep cannot
    self-intersect.
    """
    if depth <= 0:
        raise ExtrusionError(f"depth must be positive, got {depth}")
    loops = boundary_loops(facet)
    if len(loops) == 0:
        raise ExtrusionError("facet is closed; nothing to extrude")
    if len(loops) > 1:
        raise ExtrusionError(
            f"facet has {len(loops)} boundary loops; facets with interior "
            "holes are not supported")
    loop = loops[0].vertex_indices

    n = facet.n_vertices
    m = facet.n_faces
    verts = np.vstack([facet.vertices,
                       facet.vertices - np.array([0.0, 0.0, depth])])
    top = facet.faces
    bottom = facet.faces[:, ::-1] + n
    wall = np.empty((2 * len(loop), 3), dtype=np.int64)
    for e in range(len(loop)):
        a = loop[e]
        b = loop[(e + 1) % len(loop)]
        wall[2 * e] = (a, a + n, b + n)
        wall[2 * e + 1] = (a, b + n, b)
    mesh = TriangleMesh(verts, np.vstack([top, bottom, wall]),
                        name=f"{facet.name}_solid")
    if boundary_loops(mesh):
        raise ExtrusionError("extrusion failed to close the solid")
    return ExtrudedSolid(mesh,
                         top_face_ids=range(0, m),
                         bottom_face_ids=range(m, 2 * m),
                         wall_face_ids=range(2 * m, 2 * m + 2 * len(loop)),
                         depth=depth)
