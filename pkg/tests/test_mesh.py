import numpy as np
import pytest

from fracmorph.errors import DegenerateFaceError, MeshParseError, MeshTopologyError
from fracmorph.mesh import (TriangleMesh, boundary_loops, face_areas,
                            face_normals, is_watertight, load_mesh, save_mesh,
                            signed_volume, validate_mesh)


def write_obj(path, text):
    path.write_text(text)
    return path


def grid_patch(n, height=None):
    """(n x n)-quad triangulated patch on [0, n]^2, optional z = f(x, y)."""
    xs = np.arange(n + 1, dtype=np.float64)
    vx, vy = np.meshgrid(xs, xs, indexing="ij")
    vz = height(vx, vy) if height else np.zeros_like(vx)
    verts = np.stack([vx.ravel(), vy.ravel(), vz.ravel()], axis=1)
    faces = []
    for i in range(n):
        for j in range(n):
            v00 = i * (n + 1) + j
            v10 = (i + 1) * (n + 1) + j
            v11 = (i + 1) * (n + 1) + j + 1
            v01 = i * (n + 1) + j + 1
            faces.append((v00, v10, v11))
            faces.append((v00, v11, v01))
    return TriangleMesh(verts, np.array(faces), name="patch")


def tetrahedron():
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    faces = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    return TriangleMesh(verts, faces, name="tet")


def test_load_smallest_valid_mesh(tmp_path):
    p = write_obj(tmp_path / "tri.obj",
                  "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    mesh = load_mesh(p)
    assert mesh.n_vertices == 3
    assert mesh.n_faces == 1
    assert mesh.name == "tri"


def test_load_rejects_out_of_range_index(tmp_path):
    p = write_obj(tmp_path / "bad.obj",
                  "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n")
    with pytest.raises(MeshParseError):
        load_mesh(p)


def test_load_rejects_degenerate_face(tmp_path):
    p = write_obj(tmp_path / "degen.obj",
                  "v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n")
    with pytest.raises(DegenerateFaceError):
        load_mesh(p)


def test_load_rejects_nonmanifold_edge(tmp_path):
    # three faces share the edge 1-2
    p = write_obj(tmp_path / "nm.obj",
                  "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\n"
                  "f 1 2 3\nf 2 1 4\nf 1 2 5\n")
    with pytest.raises(MeshTopologyError):
        load_mesh(p)


def test_load_rejects_inconsistent_winding(tmp_path):
    # second face traverses the shared edge in the same direction
    p = write_obj(tmp_path / "wind.obj",
                  "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\n"
                  "f 1 2 3\nf 1 2 4\n")
    with pytest.raises(MeshTopologyError):
        load_mesh(p)


def test_load_parse_error(tmp_path):
    p = write_obj(tmp_path / "junk.obj", "v 0 zero 0\n")
    with pytest.raises(MeshParseError):
        load_mesh(p)


def test_synthetic_facet_at_paper_scan_size(tmp_path):
    # a facet in the size class of real scans loads through the same
    # validation path: ~5.8K vertices / ~11K faces
    from fracmorph.synth import SynthSpec, gen_facet
    mesh = gen_facet(SynthSpec(seed=11, extent=(17.6, 12.8), step=0.2))
    assert 5500 <= mesh.n_vertices <= 6100
    assert 10500 <= mesh.n_faces <= 11500
    p = tmp_path / "big.obj"
    save_mesh(mesh, p)
    validate_mesh(load_mesh(p))


def test_roundtrip_is_idempotent(tmp_path, small_facet):
    # one save/load cycle pins the coordinates at serialized precision
    p1 = tmp_path / "a.obj"
    save_mesh(small_facet, p1)
    m1 = load_mesh(p1)
    p2 = tmp_path / "a2.obj"
    save_mesh(m1, p2)
    m2 = load_mesh(p2)
    assert np.array_equal(m1.vertices, m2.vertices)
    assert np.array_equal(m1.faces, m2.faces)


def test_face_normal_axis_aligned():
    mesh = TriangleMesh(np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]),
                        np.array([[0, 1, 2]]))
    np.testing.assert_allclose(face_normals(mesh)[0], [0, 0, 1], atol=1e-15)


def test_face_normal_flips_with_winding():
    mesh = TriangleMesh(np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]),
                        np.array([[0, 2, 1]]))
    np.testing.assert_allclose(face_normals(mesh)[0], [0, 0, -1], atol=1e-15)


def test_planar_heightfield_normals_match_gradient():
    mesh = grid_patch(8, height=lambda x, y: x / 2.0)
    n = face_normals(mesh)
    expected = np.array([-1.0, 0.0, 2.0]) / np.sqrt(5.0)
    np.testing.assert_allclose(n, np.tile(expected, (mesh.n_faces, 1)),
                               atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(n, axis=1), 1.0, atol=1e-12)


def test_boundary_loops_closed_mesh_empty():
    assert boundary_loops(tetrahedron()) == []
    assert is_watertight(tetrahedron())


def test_boundary_loop_single_triangle():
    mesh = TriangleMesh(np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]),
                        np.array([[0, 1, 2]]))
    loops = boundary_loops(mesh)
    assert len(loops) == 1
    assert len(loops[0]) == 3


def test_boundary_loop_grid_patch():
    loops = boundary_loops(grid_patch(10))
    assert len(loops) == 1
    assert len(loops[0]) == 40  # 4 sides x 10 edges


def test_boundary_loop_follows_winding():
    # loop vertices chain tail->head of the directed boundary edges
    mesh = grid_patch(2)
    (loop,) = boundary_loops(mesh)
    verts = mesh.vertices[list(loop.vertex_indices)][:, :2]
    # signed area of the polygon must be positive (counter-clockwise
    # seen from +z, matching upward normals)
    x, y = verts[:, 0], verts[:, 1]
    area2 = np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    assert area2 > 0


def test_watertight_normal_area_sum_is_zero():
    mesh = tetrahedron()
    n = face_normals(mesh)
    a = face_areas(mesh)
    total = (n * a[:, None]).sum(axis=0)
    assert np.linalg.norm(total) <= 1e-9 * a.sum()


def test_signed_volume_of_tetrahedron():
    assert signed_volume(tetrahedron()) == pytest.approx(1.0 / 6.0, rel=1e-12)
