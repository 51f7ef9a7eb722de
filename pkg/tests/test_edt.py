import numpy as np
import pytest

from oracles import brute_edt_d2, brute_nearest_flat_lexmin

from fracmorph.edt import (DistanceField, distance_sentinel, edt, level_set,
                           read_dfld, read_prov, squared_radius_threshold,
                           write_dfld, write_prov)
from fracmorph.grid import VoxelGrid


def make_grid(occ):
    return VoxelGrid(np.zeros(3), 1.0, occ)


def provenance_d2(prov_idx, dims):
    nx, ny, nz = dims
    vx = np.arange(nx)[:, None, None]
    vy = np.arange(ny)[None, :, None]
    vz = np.arange(nz)[None, None, :]
    gx = prov_idx % nx
    gy = (prov_idx // nx) % ny
    gz = prov_idx // (nx * ny)
    return (vx - gx) ** 2 + (vy - gy) ** 2 + (vz - gz) ** 2


def test_single_feature_distances_are_exact():
    occ = np.zeros((9, 7, 8), dtype=bool)
    occ[2, 5, 3] = True
    fld, prov = edt(make_grid(occ))
    expected = provenance_d2(np.full(occ.shape,
                                     2 + 9 * (5 + 7 * 3), dtype=np.int64),
                             occ.shape)
    assert np.array_equal(fld.d2, expected)
    assert fld.d2[2, 5, 3] == 0
    assert prov.indices[2, 5, 3] == 2 + 9 * (5 + 7 * 3)


def test_all_features_zero():
    occ = np.ones((5, 5, 5), dtype=bool)
    fld, prov = edt(make_grid(occ))
    assert not fld.d2.any()
    # every feature voxel is its own nearest feature
    assert np.array_equal(provenance_d2(prov.indices, occ.shape), fld.d2)


def test_no_features_sentinel():
    occ = np.zeros((4, 5, 6), dtype=bool)
    fld, prov = edt(make_grid(occ))
    assert np.all(fld.d2 == distance_sentinel(occ.shape))
    assert np.all(prov.indices == -1)


def test_feature_polarity_empty():
    occ = np.zeros((5, 5, 5), dtype=bool)
    occ[2, 2, 2] = True
    fld, _ = edt(make_grid(occ), features="empty")
    assert fld.d2[2, 2, 2] == 1
    assert fld.d2[0, 0, 0] == 0


def test_matches_brute_force_on_random_grids():
    rng = np.random.default_rng(7)
    for _ in range(50):
        density = rng.uniform(0.05, 0.95)
        occ = rng.random((16, 16, 16)) < density
        fld, prov = edt(make_grid(occ))
        assert np.array_equal(fld.d2, brute_edt_d2(occ))
        assert np.array_equal(provenance_d2(prov.indices, occ.shape), fld.d2)


def test_non_cubic_grids():
    rng = np.random.default_rng(11)
    for dims in [(1, 1, 1), (1, 17, 3), (31, 1, 2), (5, 4, 23)]:
        occ = rng.random(dims) < 0.2
        fld, prov = edt(VoxelGrid(np.zeros(3), 0.5, occ))
        assert np.array_equal(fld.d2, brute_edt_d2(occ))
        if occ.any():
            assert np.array_equal(provenance_d2(prov.indices, dims), fld.d2)


def test_ties_break_to_smallest_flat_index():
    rng = np.random.default_rng(13)
    for _ in range(10):
        occ = rng.random((6, 5, 4)) < 0.15
        if not occ.any():
            occ[3, 2, 1] = True
        _, prov = edt(make_grid(occ))
        assert np.array_equal(prov.indices, brute_nearest_flat_lexmin(occ))


def test_central_symmetry():
    rng = np.random.default_rng(17)
    occ = rng.random((10, 9, 11)) < 0.1
    occ |= occ[::-1, ::-1, ::-1]  # make it centrally symmetric
    fld, _ = edt(make_grid(occ))
    assert np.array_equal(fld.d2, fld.d2[::-1, ::-1, ::-1])


def test_runtime_scales_linearly():
    import time
    rng = np.random.default_rng(0)
    rates = []
    for n in (64, 128, 256):
        occ = rng.random((n, n, n)) < 0.02
        g = make_grid(occ)
        t0 = time.perf_counter()
        edt(g)
        rates.append((time.perf_counter() - t0) / n ** 3)
    # seconds per voxel may not grow more than ~30% across a 64x size range
    assert max(rates) <= 1.3 * max(min(rates), 1e-12)


def test_squared_radius_threshold_snapping():
    assert squared_radius_threshold(0.4, 0.2) == 4
    assert squared_radius_threshold(0.3, 0.1) == 9  # 2.9999... snaps up
    assert squared_radius_threshold(0.5, 0.2) == 6  # 6.25 floors
    assert squared_radius_threshold(0.0, 0.2) == 0
    assert squared_radius_threshold(30.0, 0.2) == 22500


def test_level_set_single_feature_ball():
    occ = np.zeros((9, 9, 9), dtype=bool)
    occ[4, 4, 4] = True
    fld, _ = edt(make_grid(occ))
    ball = level_set(fld, 1.0)
    assert ball.count() == 7  # the 6-neighborhood plus the center
    assert level_set(fld, 0.0).count() == 1
    # complement sense partitions the grid
    outside = level_set(fld, 1.0, sense="gt")
    assert not (ball.occupancy & outside.occupancy).any()
    assert (ball.occupancy | outside.occupancy).all()


def test_level_sets_nest():
    rng = np.random.default_rng(23)
    occ = rng.random((12, 12, 12)) < 0.05
    occ[6, 6, 6] = True
    fld, _ = edt(make_grid(occ))
    inner = level_set(fld, 1.5)
    outer = level_set(fld, 2.5)
    assert np.all(inner.occupancy <= outer.occupancy)


def test_dfld_prov_roundtrip(tmp_path):
    rng = np.random.default_rng(29)
    occ = rng.random((6, 7, 8)) < 0.3
    grid = VoxelGrid(np.array([1.0, -2.0, 0.25]), 0.2, occ)
    fld, prov = edt(grid)
    fp = tmp_path / "d.dfld"
    pp = tmp_path / "p.prov"
    write_dfld(fld, fp)
    write_prov(prov, pp)
    fld2 = read_dfld(fp)
    prov2 = read_prov(pp)
    assert np.array_equal(fld2.d2, fld.d2)
    assert np.array_equal(prov2.indices, prov.indices)
    assert fld2.spacing == fld.spacing
    np.testing.assert_array_equal(fld2.origin, fld.origin)


def test_provenance_unravel_matches_flat_order():
    occ = np.zeros((4, 3, 2), dtype=bool)
    occ[1, 2, 1] = True
    _, prov = edt(make_grid(occ))
    flat = int(prov.indices[0, 0, 0])
    assert prov.unravel(flat) == (1, 2, 1)
    assert flat == 1 + 4 * (2 + 3 * 1)
