import math

import numpy as np
import pytest

from fracmorph.errors import MeshParseError, ResourceCapError
from fracmorph.grid import (VoxelGrid, discretization_bound, pad_grid,
                            read_vgrid, required_padding, voxelize,
                            write_vgrid)
from fracmorph.mesh import TriangleMesh


def box_mesh(lo, hi):
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    corners = np.array([[lo[0], lo[1], lo[2]], [hi[0], lo[1], lo[2]],
                        [hi[0], hi[1], lo[2]], [lo[0], hi[1], lo[2]],
                        [lo[0], lo[1], hi[2]], [hi[0], lo[1], hi[2]],
                        [hi[0], hi[1], hi[2]], [lo[0], hi[1], hi[2]]])
    quads = [(0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4),
             (2, 3, 7, 6), (1, 2, 6, 5), (3, 0, 4, 7)]
    faces = []
    for a, b, c, d in quads:
        faces.append((a, b, c))
        faces.append((a, c, d))
    return TriangleMesh(corners, np.array(faces), name="box")


def uv_sphere(radius, center=(0.0, 0.0, 0.0), n_theta=48, n_phi=96):
    center = np.asarray(center, float)
    verts = [center + (0, 0, radius), center + (0, 0, -radius)]
    rows = []
    for i in range(1, n_theta):
        th = np.pi * i / n_theta
        row = []
        for j in range(n_phi):
            ph = 2 * np.pi * j / n_phi
            row.append(len(verts))
            verts.append(center + radius * np.array([
                np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]))
        rows.append(row)
    faces = []
    for j in range(n_phi):
        faces.append((0, rows[0][j], rows[0][(j + 1) % n_phi]))
        faces.append((1, rows[-1][(j + 1) % n_phi], rows[-1][j]))
    for i in range(len(rows) - 1):
        for j in range(n_phi):
            a, b = rows[i][j], rows[i][(j + 1) % n_phi]
            c, d = rows[i + 1][j], rows[i + 1][(j + 1) % n_phi]
            faces.append((a, c, d))
            faces.append((a, d, b))
    return TriangleMesh(np.array(verts), np.array(faces), name="sphere")


def test_voxelize_unit_box_half_spacing():
    grid = voxelize(box_mesh((0, 0, 0), (1, 1, 1)), g=0.5)
    assert grid.dims == (2, 2, 2)
    assert grid.count() == 8
    np.testing.assert_allclose(grid.origin, [0.25, 0.25, 0.25])


def test_voxelize_box_against_analytic_inside_test():
    lo, hi = np.array([0.3, -0.2, 0.1]), np.array([2.1, 1.3, 1.9])
    g = 0.25
    grid = voxelize(box_mesh(lo, hi), g=g, pad=2)
    nx, ny, nz = grid.dims
    ii = np.stack(np.meshgrid(*(np.arange(n) for n in (nx, ny, nz)),
                              indexing="ij"), axis=-1)
    centers = grid.origin + g * ii
    inside = np.all((centers > lo) & (centers < hi), axis=-1)
    assert np.array_equal(grid.occupancy, inside)


def test_voxelize_sphere_count_within_surface_bound():
    g = 0.1
    r = 10 * g
    grid = voxelize(uv_sphere(r), g=g, pad=1)
    vol = grid.count() * g ** 3
    true_vol = 4.0 / 3.0 * np.pi * r ** 3
    area = 4.0 * np.pi * r ** 2
    slack = area * discretization_bound(g)
    assert abs(vol - true_vol) <= slack


def test_voxelize_requires_watertight():
    tri = TriangleMesh(np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]),
                       np.array([[0, 1, 2]]))
    with pytest.raises(MeshParseError):
        voxelize(tri, g=0.5)


def test_voxelize_memory_cap():
    with pytest.raises(ResourceCapError):
        voxelize(box_mesh((0, 0, 0), (1, 1, 1)), g=0.001, max_voxels=10_000)


def test_voxelize_translation_consistency():
    g = 0.25
    mesh = box_mesh((0, 0, 0), (1.1, 0.9, 0.7))
    a = voxelize(mesh, g=g, pad=1)
    b = voxelize(mesh.translated((3 * g, -2 * g, 5 * g)), g=g, pad=1)
    assert a.dims == b.dims
    assert np.array_equal(a.occupancy, b.occupancy)
    np.testing.assert_allclose(b.origin - a.origin, [3 * g, -2 * g, 5 * g],
                               atol=1e-12)


def test_column_convexity_of_lipschitz_extrusion(small_facet):
    from fracmorph.extrusion import extrude
    from fracmorph.lipschitz import align_to_axis, fit_cone
    from fracmorph.mesh import face_normals
    cone = fit_cone(face_normals(small_facet))
    solid = extrude(align_to_axis(small_facet, cone), 2.0)
    grid = voxelize(solid.mesh, g=0.2, pad=2)
    assert grid.column_runs_ok()


def test_required_padding_paper_resolution():
    assert required_padding(30.0, 0.2) == 151


def test_required_padding_small_cases():
    assert required_padding(1.0, 1.0) == 2
    assert required_padding(0.5, 0.2) == 4  # ceil(2.5) + 1


def test_padding_arithmetic_reproduces_paper_grid():
    tight = (119, 323, 29)
    pad = required_padding(30.0, 0.2)
    padded = tuple(d + 2 * pad for d in tight)
    assert padded == (421, 625, 331)


def test_pad_grid_dims_and_origin():
    g = VoxelGrid(np.zeros(3), 0.2, np.ones((3, 4, 5), dtype=bool))
    p = pad_grid(g, 151)
    assert p.dims == (305, 306, 307)
    np.testing.assert_allclose(p.origin, -0.2 * 151)
    assert p.count() == g.count()


def test_discretization_bound_values():
    assert discretization_bound(0.2) == pytest.approx(0.17320508, abs=1e-8)
    assert discretization_bound(1.0) == pytest.approx(math.sqrt(3) / 2)


def test_heightfield_voxelization_within_displacement_bound():
    # vertical distance between the input surface and the voxel top faces
    # stays below the discretization bound (+ half-voxel face offset)
    from fracmorph.extrusion import extrude
    from fracmorph.synth import SynthSpec, gen_facet, heightfield
    spec = SynthSpec(seed=9, extent=(5.0, 5.0), step=0.25)
    facet = gen_facet(spec)
    g = 0.2
    solid = extrude(facet, 2.0)
    grid = voxelize(solid.mesh, g=g, pad=1)
    nx, ny, nz = grid.dims
    occ = grid.occupancy
    any_col = occ.any(axis=2)
    top = nz - 1 - np.argmax(occ[:, :, ::-1], axis=2)
    xs = grid.origin[0] + g * np.arange(nx)
    ys = grid.origin[1] + g * np.arange(ny)
    f = heightfield(spec, xs[:, None], ys[None, :])
    top_z = grid.origin[2] + g * top + g / 2.0
    err = np.abs(np.where(any_col, top_z, np.nan) - f)
    interior = np.zeros_like(any_col)
    interior[2:-2, 2:-2] = True  # skip wall columns at the footprint rim
    assert np.nanmax(err[interior & any_col]) <= discretization_bound(g) + g / 2


def test_vgrid_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    occ = rng.random((7, 9, 11)) < 0.4
    g = VoxelGrid(np.array([0.05, -1.75, 2.0]), 0.2, occ)
    p1 = tmp_path / "a.vgrid"
    p2 = tmp_path / "b.vgrid"
    write_vgrid(g, p1)
    back = read_vgrid(p1)
    assert back.same_geometry(g)
    assert np.array_equal(back.occupancy, g.occupancy)
    write_vgrid(back, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_vgrid_payload_is_x_fastest_little_endian(tmp_path):
    occ = np.zeros((3, 2, 1), dtype=bool)
    occ[0, 0, 0] = True  # flat index 0 -> bit 0
    occ[2, 1, 0] = True  # flat index 2 + 3*1 = 5 -> bit 5
    p = tmp_path / "t.vgrid"
    write_vgrid(VoxelGrid(np.zeros(3), 1.0, occ), p)
    payload = p.read_bytes().split(b"\n\n", 1)[1]
    assert len(payload) == 8  # one zero-padded 64-bit word
    word = int.from_bytes(payload, "little")
    assert word == (1 << 0) | (1 << 5)


def test_vgrid_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.vgrid"
    p.write_bytes(b"NOPE42\ndims 1 1 1\n\n" + b"\0" * 8)
    with pytest.raises(MeshParseError):
        read_vgrid(p)
