"""Throwaway experiments for the risky discrete-morphology properties."""
import time

import numpy as np

from fracmorph.edt import _edt_bool, squared_radius_threshold
from fracmorph.grid import VoxelGrid
from fracmorph.morphology import (ball_offsets, brute_morphology, close, dilate,
                                  erode, open_, scale_space, verify_scale_space)


def brute_edt_d2(occ):
    """O(n^2) nearest-feature via the matmul identity (exact for small ints)."""
    dims = occ.shape
    idx = np.argwhere(occ).astype(np.float64)
    grid_pts = np.argwhere(np.ones(dims, bool)).astype(np.float64)
    if len(idx) == 0:
        return np.full(dims, (dims[0]-1)**2+(dims[1]-1)**2+(dims[2]-1)**2+1, np.int64)
    d2 = (np.sum(grid_pts**2, axis=1)[:, None] + np.sum(idx**2, axis=1)[None, :]
          - 2.0 * grid_pts @ idx.T)
    out = d2.min(axis=1)
    return np.rint(out).astype(np.int64).reshape(dims)


def check_edt():
    rng = np.random.default_rng(0)
    t0 = time.time()
    for trial in range(20):
        dens = rng.uniform(0.05, 0.95)
        occ = rng.random((16, 16, 16)) < dens
        fld, prov = _edt_bool(occ, np.zeros(3), 1.0)
        ref = brute_edt_d2(occ)
        assert np.array_equal(fld.d2, ref), f"EDT mismatch at trial {trial}"
        # provenance validity
        nz = np.argwhere(np.ones(occ.shape, bool))
        pi = prov.indices.ravel(order="F")
        d2f = fld.d2.ravel(order="F")
        nx, ny, nzz = occ.shape
        flat = nz[:, 0] + nx * (nz[:, 1] + ny * nz[:, 2])
        # recompute coordinates of recorded features
        fx = pi % nx
        fy = (pi // nx) % ny
        fz = pi // (nx * ny)
        order = np.argsort(flat)
        # map flat back: d2f is F-ravelled = x fastest = flat order already
        vx = np.arange(nx)[:, None, None]
        vy = np.arange(ny)[None, :, None]
        vz = np.arange(nzz)[None, None, :]
        pf = prov.indices
        gx = pf % nx
        gy = (pf // nx) % ny
        gz = pf // (nx * ny)
        dd = (vx - gx)**2 + (vy - gy)**2 + (vz - gz)**2
        assert np.array_equal(dd, fld.d2), "provenance distance mismatch"
    print(f"EDT exact on 20 random 16^3 grids ({time.time()-t0:.2f}s)")


def check_absorption():
    # gamma_alpha(B_rho) == B_rho ? on digital balls
    for a, r in [(1, 2), (1, 4), (2, 4), (1, 8), (2, 8), (4, 8), (5, 10), (2, 10)]:
        tr = squared_radius_threshold(float(r), 1.0)
        ta = squared_radius_threshold(float(a), 1.0)
        n = 2 * (r + a) + 5
        occ = np.zeros((n, n, n), bool)
        c = n // 2
        offs = ball_offsets(tr)
        occ[offs[:, 0] + c, offs[:, 1] + c, offs[:, 2] + c] = True
        g = VoxelGrid(np.zeros(3), 1.0, occ)
        go = brute_morphology(g, float(a), "open")
        ok = np.array_equal(go.occupancy, occ)
        print(f"absorption alpha={a} rho={r}: {'PASS' if ok else 'FAIL'}"
              f" (lost {int(occ.sum() - (go.occupancy & occ).sum())} voxels)")


def synth_slab(seed, nx=72, ny=72, nz=40, pad=10, smax=1.0, ncomp=4):
    """Quick cosine-sum slab fragment, mimicking the synth generator."""
    rng = np.random.default_rng(seed)
    amps = rng.uniform(0.5, 1.0, ncomp)
    wl = rng.uniform(10.0, 30.0, ncomp)  # in voxels
    ph = rng.uniform(0, 2 * np.pi, ncomp)
    th = rng.uniform(0, 2 * np.pi, ncomp)
    k = 2 * np.pi / wl
    scale = smax / np.sum(amps * k)
    amps *= scale
    x = np.arange(nx)[:, None]
    y = np.arange(ny)[None, :]
    f = np.zeros((nx, ny))
    for i in range(ncomp):
        f += amps[i] * np.cos(k[i] * (np.cos(th[i]) * x + np.sin(th[i]) * y) + ph[i])
    f = f + nz / 2.0
    X = np.zeros((nx + 2 * pad, ny + 2 * pad, nz + 2 * pad), bool)
    zc = np.arange(nz)[None, None, :]
    inside = zc <= f[:, :, None]
    X[pad:pad + nx, pad:pad + ny, pad:pad + nz] = inside
    return VoxelGrid(np.zeros(3), 1.0, X)


def check_ordering():
    bad = 0
    t0 = time.time()
    for seed in range(20):
        g = synth_slab(seed)
        ss = scale_space(g, [1.0, 2.0, 4.0, 8.0])
        try:
            verify_scale_space(ss)
        except AssertionError as e:
            bad += 1
            print(f"seed {seed}: ORDERING VIOLATION: {e}")
    print(f"ordering: {20 - bad}/20 seeds clean ({time.time()-t0:.1f}s)")


def check_ops_vs_brute():
    rng = np.random.default_rng(1)
    for trial in range(10):
        occ = np.zeros((24, 24, 24), bool)
        inner = rng.random((12, 12, 12)) < 0.4
        occ[6:18, 6:18, 6:18] = inner
        g = VoxelGrid(np.zeros(3), 1.0, occ)
        for rho in (1.0, 2.0, 2.5):
            for op, fn in [("dilate", dilate), ("erode", erode),
                           ("close", close), ("open", open_)]:
                a = fn(g, rho)
                b = brute_morphology(g, rho, op)
                assert np.array_equal(a.occupancy, b.occupancy), (trial, rho, op)
    print("dilate/erode/close/open match brute force on 10 random grids")


def check_boundary_monotone():
    from fracmorph.morphology import boundary_voxel_count
    for seed in range(6):
        g = synth_slab(seed, smax=1.0)
        ss = scale_space(g, [1.0, 2.0, 4.0, 8.0], compute_opening=False)
        counts = [boundary_voxel_count(c) for c in ss.closed]
        print(f"seed {seed}: closed-boundary counts {counts} "
              f"{'monotone' if all(b <= a for a, b in zip(counts, counts[1:])) else 'NOT monotone'}")


if __name__ == "__main__":
    check_edt()
    check_ops_vs_brute()
    check_absorption()
    check_ordering()
    check_boundary_monotone()
