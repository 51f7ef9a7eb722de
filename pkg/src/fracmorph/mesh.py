"""Triangle mesh data model, ASCII OBJ I/O, normals and boundary topology.

Meshes are immutable after construction (vertex/face arrays are marked
read-only), so they can be shared freely between parallel workers.
Coordinates are millimeters. The only interchange format is ASCII OBJ
(`v` and `f` records, 1-based indices); coordinates are serialized with
9 significant digits, which round-trips below scanner noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateFaceError, MeshParseError, MeshTopologyError

DEGENERATE_AREA_MM2 = 1e-12


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle surface with consistently wound faces."""

    vertices: np.ndarray  # (n, 3) float64, mm
    faces: np.ndarray  # (m, 3) int64
    name: str = ""

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshParseError(f"vertex array must be (n, 3), got {v.shape}")
        f = f.reshape(-1, 3)
        v.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def translated(self, offset) -> "TriangleMesh":
        return TriangleMesh(self.vertices + np.asarray(offset, dtype=np.float64),
                            self.faces, self.name)


@dataclass(frozen=True)
class BoundaryLoop:
    """Closed cycle of vertex indices along edges used by exactly one face."""

    vertex_indices: tuple[int, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.vertex_indices)


def validate_mesh(mesh: TriangleMesh) -> None:
    """Check index range, degeneracy and winding consistency; raise on failure."""
    if mesh.n_faces and mesh.faces.max() >= mesh.n_vertices:
        raise MeshParseError(
            f"face references vertex {int(mesh.faces.max())} "
            f"but mesh has {mesh.n_vertices} vertices")
    if mesh.n_faces and mesh.faces.min() < 0:
        raise MeshParseError("negative vertex index")
    areas = _face_areas(mesh)
    if np.any(areas < DEGENERATE_AREA_MM2):
        bad = int(np.argmin(areas))
        raise DegenerateFaceError(f"face {bad} has area {areas[bad]:.3e} mm^2")
    _check_edge_manifold(mesh)


def _face_areas(mesh: TriangleMesh) -> np.ndarray:
    tri = mesh.vertices[mesh.faces]
    cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    return 0.5 * np.linalg.norm(cross, axis=1)


def _directed_edges(faces: np.ndarray) -> np.ndarray:
    """All directed edges (tail, head) in face winding order, shape (3m, 2)."""
    e = np.empty((len(faces), 3, 2), dtype=np.int64)
    e[:, 0] = faces[:, [0, 1]]
    e[:, 1] = faces[:, [1, 2]]
    e[:, 2] = faces[:, [2, 0]]
    return e.reshape(-1, 2)


def _check_edge_manifold(mesh: TriangleMesh) -> None:
    """Every undirected edge in <= 2 faces; shared edges run in opposite
    directions (consistent winding); no directed edge repeats."""
    de = _directed_edges(mesh.faces)
    und = np.sort(de, axis=1)
    _, inverse, counts = np.unique(und, axis=0, return_inverse=True,
                                   return_counts=True)
    if np.any(counts > 2):
        raise MeshTopologyError("non-manifold edge shared by more than 2 faces")
    # a directed edge appearing twice means two faces traverse it the same
    # way -> inconsistent winding
    _, dcounts = np.unique(de, axis=0, return_counts=True)
    if np.any(dcounts > 1):
        raise MeshTopologyError("inconsistent winding: directed edge reused")


def load_mesh(path) -> TriangleMesh:
    """Parse an ASCII OBJ file (v/f records, other records ignored)."""
    path = Path(path)
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshParseError(f"{path}:{lineno}: short vertex record")
                try:
                    vertices.append((float(parts[1]), float(parts[2]),
                                     float(parts[3])))
                except ValueError as exc:
                    raise MeshParseError(f"{path}:{lineno}: {exc}") from exc
            elif tag == "f":
                if len(parts) != 4:
                    raise MeshParseError(
                        f"{path}:{lineno}: only triangular faces supported")
                try:
                    idx = tuple(int(p.split("/")[0]) - 1 for p in parts[1:])
                except ValueError as exc:
                    raise MeshParseError(f"{path}:{lineno}: {exc}") from exc
                faces.append(idx)
    mesh = TriangleMesh(np.array(vertices, dtype=np.float64).reshape(-1, 3),
                        np.array(faces, dtype=np.int64).reshape(-1, 3),
                        name=path.stem)
    validate_mesh(mesh)
    return mesh


def save_mesh(mesh: TriangleMesh, path) -> None:
    """Write ASCII OBJ with 9-significant-digit coordinates."""
    path = Path(path)
    lines = [f"# {mesh.name}\n" if mesh.name else "# mesh\n"]
    for x, y, z in mesh.vertices:
        lines.append(f"v {x:.9g} {y:.9g} {z:.9g}\n")
    for a, b, c in mesh.faces:
        lines.append(f"f {a + 1} {b + 1} {c + 1}\n")
    with open(path, "w") as fh:
        fh.writelines(lines)


def face_normals(mesh: TriangleMesh) -> np.ndarray:
    """Unit normal per face, right-hand rule from the winding order."""
    tri = mesh.vertices[mesh.faces]
    cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    norms = np.linalg.norm(cross, axis=1)
    return cross / norms[:, None]


def face_areas(mesh: TriangleMesh) -> np.ndarray:
    return _face_areas(mesh)


def boundary_loops(mesh: TriangleMesh) -> list[BoundaryLoop]:
    """Closed cycles of boundary edges, in face winding direction.

    A watertight mesh returns []. Raises if a boundary vertex has more
    than one outgoing boundary edge (would make the cycle ambiguous).
    """
    de = _directed_edges(mesh.faces)
    und = np.sort(de, axis=1)
    uniq, inverse, counts = np.unique(und, axis=0, return_inverse=True,
                                      return_counts=True)
    boundary = de[counts[inverse] == 1]
    if len(boundary) == 0:
        return []
    nxt: dict[int, int] = {}
    for tail, head in boundary:
        if int(tail) in nxt:
            raise MeshTopologyError(
                f"boundary vertex {int(tail)} has more than 2 boundary edges")
        nxt[int(tail)] = int(head)
    loops: list[BoundaryLoop] = []
    remaining = set(nxt)
    while remaining:
        start = min(remaining)
        cycle = [start]
        remaining.discard(start)
        cur = nxt[start]
        while cur != start:
            if cur not in remaining:
                raise MeshTopologyError("boundary edges do not close into cycles")
            cycle.append(cur)
            remaining.discard(cur)
            cur = nxt[cur]
        loops.append(BoundaryLoop(tuple(cycle)))
    return loops


def is_watertight(mesh: TriangleMesh) -> bool:
    return len(boundary_loops(mesh)) == 0


def signed_volume(mesh: TriangleMesh) -> float:
    """Enclosed volume by the divergence theorem (valid for watertight meshes)."""
    tri = mesh.vertices[mesh.faces]
    return float(np.einsum("ij,ij->", tri[:, 0],
                           np.cross(tri[:, 1], tri[:, 2])) / 6.0)
