"""Pipeline driver: facet -> cone fit -> align -> extrude -> voxelize ->
distance transforms -> scale space -> surfaces, plus standalone
subcommands for each stage and a benchmark harness.

Exit codes: 0 success, 2 configuration error, 3 data error (mesh,
topology, visibility, padding), 4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .complementarity import check_at_scale, check_exact
from .edt import edt, write_dfld, write_prov
from .errors import ConfigError, FracmorphError, ResourceCapError
from .extrusion import choose_depth, extrude
from .grid import (DEFAULT_VOXEL_CAP, VoxelGrid, discretization_bound,
                   read_vgrid, required_padding, voxelize, write_vgrid)
from .lipschitz import align_to_axis, cone_report, fit_cone, verify_lipschitz
from .mesh import face_normals, load_mesh, save_mesh
from .morphology import ScaleLadder, scale_space
from .surfaces import (column_reliability, extract_surfaces, to_mesh,
                       write_mask_pgm)
from .synth import SynthSpec, gen_facet, gen_pair


@dataclass
class PipelineConfig:
    facet_path: str
    out_dir: str
    g: float = 0.2
    scales: tuple[float, ...] = (1.0, 2.0, 5.0, 10.0, 20.0, 30.0)
    depth: float | None = None  # None = auto from choose_depth
    voxel_cap: int = DEFAULT_VOXEL_CAP
    threads: int = 1  # recorded for provenance; stages are deterministic
    #                   and produce identical output at any thread count

    def validate(self) -> None:
        ScaleLadder(self.scales)  # raises ConfigError on bad ladders
        if self.g <= 0:
            raise ConfigError("spacing g must be positive")
        if self.depth is not None and self.depth <= 0:
            raise ConfigError("depth must be positive")

    def to_dict(self) -> dict:
        return {"facet_path": str(self.facet_path), "out_dir": str(self.out_dir),
                "g": self.g, "scales": list(self.scales), "depth": self.depth,
                "voxel_cap": self.voxel_cap, "threads": self.threads}

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        return cls(facet_path=d["facet_path"], out_dir=d["out_dir"],
                   g=float(d["g"]), scales=tuple(d["scales"]),
                   depth=d.get("depth"), voxel_cap=int(d.get("voxel_cap",
                                                             DEFAULT_VOXEL_CAP)),
                   threads=int(d.get("threads", 1)))


def run_pipeline(config: PipelineConfig) -> dict:
    """Execute all stages, write artifacts + manifest, return the manifest.

    Partial outputs are removed if any stage fails.
    """
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    timings: dict[str, float] = {}
    manifest: dict = {"tool": "fracmorph", "version": __version__,
                      "config": config.to_dict()}

    def emit(path: Path, writer) -> str:
        writer(path)
        written.append(path)
        return path.name

    try:
        t0 = time.perf_counter()
        facet = load_mesh(config.facet_path)
        timings["load"] = time.perf_counter() - t0
        manifest["facet"] = {"name": facet.name, "vertices": facet.n_vertices,
                             "faces": facet.n_faces}

        t0 = time.perf_counter()
        cone = fit_cone(face_normals(facet))
        aligned = align_to_axis(facet, cone)
        timings["lipschitz_align"] = time.perf_counter() - t0
        manifest["cone"] = cone_report(cone)

        rho_max = max(config.scales)
        z_extent = float(aligned.vertices[:, 2].max()
                         - aligned.vertices[:, 2].min())
        depth = config.depth if config.depth is not None else choose_depth(
            z_extent, rho_max, config.g)
        manifest["depth"] = {"mm": depth, "auto": config.depth is None,
                             "note": "auto depth = relief + 2*rho_max + 4*g "
                                     "(declared convention)"}

        t0 = time.perf_counter()
        solid = extrude(aligned, depth)
        timings["extrude"] = time.perf_counter() - t0

        pad = required_padding(rho_max, config.g)
        t0 = time.perf_counter()
        grid = voxelize(solid.mesh, config.g, pad=pad,
                        max_voxels=config.voxel_cap)
        timings["voxelize"] = time.perf_counter() - t0
        tight = tuple(d - 2 * pad for d in grid.dims)
        manifest["grid"] = {"spacing": config.g, "padding": pad,
                            "tight_dims": list(tight),
                            "padded_dims": list(grid.dims),
                            "origin": [float(c) for c in grid.origin],
                            "discretization_bound_mm":
                                discretization_bound(config.g)}

        name = facet.name
        manifest["outputs"] = {
            "aligned_facet": emit(out_dir / f"{name}_aligned.obj",
                                  lambda p: save_mesh(aligned, p)),
            "solid": emit(out_dir / f"{name}_solid.obj",
                          lambda p: save_mesh(solid.mesh, p)),
            "voxels": emit(out_dir / f"{name}.vgrid",
                           lambda p: write_vgrid(grid, p)),
            "scales": [],
        }

        t0 = time.perf_counter()
        _, prov = edt(grid, features="occupied")
        timings["edt"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        ss = scale_space(grid, config.scales, compute_opening=False)
        timings["scale_space"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        for rho, closed in zip(ss.scales, ss.closed):
            hf_close, hf_open = extract_surfaces(closed, rho)
            rel_c = column_reliability(closed, grid, prov, "closing")
            rel_o = column_reliability(closed, grid, prov, "opening")
            tag = f"{rho:g}"
            entry = {
                "scale": rho,
                "closed_voxels": emit(out_dir / f"{name}_closed_{tag}.vgrid",
                                      lambda p, c=closed: write_vgrid(c, p)),
                "close_obj": emit(out_dir / f"{name}_close_{tag}.obj",
                                  lambda p, h=hf_close: save_mesh(to_mesh(h), p)),
                # opening surfaces are lifted by the depth back into the
                # facet frame so the OBJ overlays the input facet
                "open_obj": emit(out_dir / f"{name}_open_{tag}.obj",
                                 lambda p, h=hf_open: save_mesh(
                                     to_mesh(h, z_offset=depth), p)),
                "close_mask": emit(out_dir / f"{name}_close_{tag}.pgm",
                                   lambda p, m=rel_c: write_mask_pgm(m, p)),
                "open_mask": emit(out_dir / f"{name}_open_{tag}.pgm",
                                  lambda p, m=rel_o: write_mask_pgm(m, p)),
                "reliable_columns": {"closing": int(rel_c.sum()),
                                     "opening": int(rel_o.sum())},
            }
            manifest["outputs"]["scales"].append(entry)
        timings["surfaces"] = time.perf_counter() - t0

        manifest["timings_s"] = {k: round(v, 6) for k, v in timings.items()}
        mpath = out_dir / f"{name}_manifest.json"
        with open(mpath, "w") as fh:
            json.dump(manifest, fh, indent=2)
        return manifest
    except BaseException:
        for p in written:
            try:
                p.unlink()
            except OSError:
                pass
        raise


# -- subcommands --------------------------------------------------------------

def _parse_scales(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(s) for s in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad scale list {text!r}: {exc}") from exc


def _cmd_synth(args) -> int:
    spec = SynthSpec(seed=args.seed, extent=(args.extent[0], args.extent[1]),
                     s_max=args.smax, n_components=args.components,
                     wavelengths=(args.wavelengths[0], args.wavelengths[1]),
                     step=args.step)
    if args.pair:
        x, y, m = gen_pair(spec, args.thickness, args.g, pad=args.pad)
        out = Path(args.out)
        write_vgrid(x, out.with_suffix(".x.vgrid"))
        write_vgrid(y, out.with_suffix(".y.vgrid"))
        write_vgrid(m, out.with_suffix(".mask.vgrid"))
        print(f"wrote {out.with_suffix('.x.vgrid')} (+ .y/.mask)")
    else:
        facet = gen_facet(spec)
        save_mesh(facet, args.out)
        print(f"wrote {args.out} ({facet.n_vertices} vertices, "
              f"{facet.n_faces} faces)")
    return 0


def _cmd_lipschitz(args) -> int:
    mesh = load_mesh(args.mesh)
    cone = fit_cone(face_normals(mesh))
    report = cone_report(cone)
    if args.verify:
        aligned = align_to_axis(mesh, cone)
        ok, worst = verify_lipschitz(aligned, cone.slope)
        report["verified"] = bool(ok)
        report["worst_pair"] = {"i": worst[0], "j": worst[1],
                                "excess_mm": worst[2]}
    text = json.dumps(report, indent=2)
    if args.json:
        Path(args.json).write_text(text + "\n")
    print(text)
    return 0


def _cmd_extrude(args) -> int:
    mesh = load_mesh(args.mesh)
    cone = fit_cone(face_normals(mesh))
    aligned = align_to_axis(mesh, cone)
    if args.depth == "auto":
        extent = float(aligned.vertices[:, 2].max() - aligned.vertices[:, 2].min())
        depth = choose_depth(extent, args.rho_max, args.g)
    else:
        depth = float(args.depth)
    solid = extrude(aligned, depth)
    save_mesh(solid.mesh, args.out)
    print(f"wrote {args.out} (depth {depth:g} mm, "
          f"{solid.mesh.n_faces} faces)")
    return 0


def _cmd_voxelize(args) -> int:
    mesh = load_mesh(args.mesh)
    pad = args.pad if args.pad is not None else required_padding(args.rho_max,
                                                                 args.g)
    grid = voxelize(mesh, args.g, pad=pad, max_voxels=args.cap)
    write_vgrid(grid, args.out)
    print(f"wrote {args.out} dims {grid.dims} pad {pad}")
    return 0


def _cmd_edt(args) -> int:
    grid = read_vgrid(args.grid)
    field, prov = edt(grid, features=args.features)
    write_dfld(field, args.out)
    print(f"wrote {args.out}")
    if args.prov:
        write_prov(prov, args.prov)
        print(f"wrote {args.prov}")
    return 0


def _cmd_scalespace(args) -> int:
    grid = read_vgrid(args.grid)
    scales = _parse_scales(args.scales)
    ss = scale_space(grid, scales, compute_opening=not args.closing_only)
    out_dir = Path(args.outdir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.grid).stem
    entries = []
    for i, rho in enumerate(ss.scales):
        tag = f"{rho:g}"
        cpath = out_dir / f"{stem}_closed_{tag}.vgrid"
        write_vgrid(ss.closed[i], cpath)
        entry = {"scale": rho, "closed": cpath.name}
        if ss.opened is not None:
            opath = out_dir / f"{stem}_opened_{tag}.vgrid"
            write_vgrid(ss.opened[i], opath)
            entry["opened"] = opath.name
        entries.append(entry)
    manifest = {"tool": "fracmorph", "version": __version__,
                "source": str(args.grid), "spacing": grid.spacing,
                "dims": list(grid.dims), "scales": entries}
    mpath = out_dir / f"{stem}_scalespace.json"
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=2)
    print(f"wrote {mpath}")
    return 0


def _cmd_surfaces(args) -> int:
    grid = read_vgrid(args.grid)
    hf_close, hf_open = extract_surfaces(grid, args.scale)
    out_dir = Path(args.outdir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.grid).stem
    tag = f"{args.scale:g}"
    save_mesh(to_mesh(hf_close), out_dir / f"{stem}_close_{tag}.obj")
    save_mesh(to_mesh(hf_open, z_offset=args.lift),
              out_dir / f"{stem}_open_{tag}.obj")
    print(f"wrote {out_dir}/{stem}_close_{tag}.obj and _open_{tag}.obj")
    return 0


def _cmd_check(args) -> int:
    x = read_vgrid(args.x)
    y = read_vgrid(args.y)
    mask = read_vgrid(args.mask)
    reports = [check_exact(x, y, mask).to_dict()]
    for rho in _parse_scales(args.scales) if args.scales else ():
        a, b = check_at_scale(x, y, mask, rho)
        reports.append({"scale": rho, "close_x_vs_open_y": a.to_dict(),
                        "open_x_vs_close_y": b.to_dict()})
    text = json.dumps(reports, indent=2)
    if args.json:
        Path(args.json).write_text(text + "\n")
    print(text)
    return 0


def _cmd_pipeline(args) -> int:
    if args.manifest:
        with open(args.manifest) as fh:
            old = json.load(fh)
        config = PipelineConfig.from_dict(old["config"])
        if args.outdir:
            config.out_dir = args.outdir
    else:
        if not args.facet or not args.outdir:
            raise ConfigError("pipeline needs --facet and --outdir "
                              "(or --manifest)")
        config = PipelineConfig(
            facet_path=args.facet, out_dir=args.outdir, g=args.g,
            scales=_parse_scales(args.scales),
            depth=None if args.depth == "auto" else float(args.depth),
            voxel_cap=args.cap, threads=args.threads)
    manifest = run_pipeline(config)
    print(json.dumps({"outputs": manifest["outputs"],
                      "timings_s": manifest["timings_s"]}, indent=2))
    return 0


def _available_memory_bytes() -> int:
    try:
        return os_sysconf_mem()
    except (ValueError, OSError, AttributeError):
        return 1 << 62


def os_sysconf_mem() -> int:
    import os
    return os.sysconf("SC_AVPHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")


def _cmd_bench(args) -> int:
    rows = []

    def record(stage, size, seconds, budget=None, note=""):
        rows.append({"stage": stage, "size": size,
                     "seconds": round(seconds, 3),
                     "budget_s": budget if budget is not None else "",
                     "note": note})
        print(f"{stage:24s} {size:>14s} {seconds:8.3f}s"
              f"{'  (budget ' + str(budget) + 's)' if budget else ''} {note}")

    # mesh-side: cone fit + extrusion + voxel embedding of a ~10K-face facet
    spec = SynthSpec(seed=7, extent=(14.0, 14.0), step=0.2)
    facet = gen_facet(spec)
    t0 = time.perf_counter()
    cone = fit_cone(face_normals(facet))
    aligned = align_to_axis(facet, cone)
    z = aligned.vertices[:, 2]
    solid = extrude(aligned, choose_depth(float(z.max() - z.min()), 2.0, 0.2))
    grid = voxelize(solid.mesh, 0.2, pad=11)
    record("lipschitz+extrude+embed", f"{facet.n_faces} faces",
           time.perf_counter() - t0, budget=2)

    sizes = [int(s) for s in args.sizes.split(",")]
    if args.with_500:
        sizes.append(500)
    rng = np.random.default_rng(0)
    for n in sizes:
        need = n ** 3 * 8 * 3  # occ + d2 + prov, with slack
        if need > _available_memory_bytes():
            record("edt", f"{n}^3", float("nan"),
                   note="skipped: exceeds available memory")
            continue
        occ = rng.random((n, n, n)) < 0.02
        g = VoxelGrid(np.zeros(3), 1.0, occ)
        t0 = time.perf_counter()
        edt(g, features="occupied")
        dt = time.perf_counter() - t0
        record("edt", f"{n}^3", dt, budget=60 if n >= 500 else None)
        del g, occ

    out = Path(args.out)
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["stage", "size", "seconds",
                                                "budget_s", "note"])
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracmorph",
                                 description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic facet or pair")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--extent", type=float, nargs=2, default=(16.0, 16.0))
    p.add_argument("--smax", type=float, default=0.5)
    p.add_argument("--components", type=int, default=4)
    p.add_argument("--wavelengths", type=float, nargs=2, default=(3.0, 9.0))
    p.add_argument("--step", type=float, default=0.25)
    p.add_argument("--pair", action="store_true",
                   help="emit complementary X/Y/mask voxel grids instead")
    p.add_argument("--thickness", type=float, default=8.0)
    p.add_argument("--g", type=float, default=0.2)
    p.add_argument("--pad", type=int, default=12)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("lipschitz", help="fit the visibility cone of a facet")
    p.add_argument("--mesh", required=True)
    p.add_argument("--json", help="also write the report to this path")
    p.add_argument("--verify", action="store_true",
                   help="check the slope over vertex pairs after aligning")
    p.set_defaults(func=_cmd_lipschitz)

    p = sub.add_parser("extrude", help="align and extrude a facet")
    p.add_argument("--mesh", required=True)
    p.add_argument("--depth", default="auto")
    p.add_argument("--rho-max", type=float, default=2.0,
                   help="largest planned scale (for auto depth)")
    p.add_argument("--g", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_extrude)

    p = sub.add_parser("voxelize", help="rasterize a watertight mesh")
    p.add_argument("--mesh", required=True)
    p.add_argument("--g", type=float, default=0.2)
    p.add_argument("--pad", type=int, default=None)
    p.add_argument("--rho-max", type=float, default=2.0,
                   help="pad = required padding for this scale if --pad unset")
    p.add_argument("--cap", type=int, default=DEFAULT_VOXEL_CAP)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_voxelize)

    p = sub.add_parser("edt", help="exact distance transform of a grid")
    p.add_argument("--grid", required=True)
    p.add_argument("--features", choices=("occupied", "empty"),
                   default="occupied")
    p.add_argument("--out", required=True, help="output .dfld path")
    p.add_argument("--prov", help="optional provenance .prov path")
    p.set_defaults(func=_cmd_edt)

    p = sub.add_parser("scalespace", help="closings/openings over a ladder")
    p.add_argument("--grid", required=True)
    p.add_argument("--scales", required=True, help="comma list, mm")
    p.add_argument("--closing-only", action="store_true")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_scalespace)

    p = sub.add_parser("surfaces", help="extract top/bottom heightfields")
    p.add_argument("--grid", required=True, help="closed solid .vgrid")
    p.add_argument("--scale", type=float, required=True)
    p.add_argument("--lift", type=float, default=0.0,
                   help="z offset applied to the opening surface (the "
                        "extrusion depth puts it back in the facet frame)")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=_cmd_surfaces)

    p = sub.add_parser("check", help="complementarity reports for a pair")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--scales", default="", help="comma list, mm")
    p.add_argument("--json", help="also write the reports to this path")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("pipeline", help="run every stage on one facet")
    p.add_argument("--facet")
    p.add_argument("--g", type=float, default=0.2)
    p.add_argument("--scales", default="1,2,5,10,20,30")
    p.add_argument("--depth", default="auto")
    p.add_argument("--cap", type=int, default=DEFAULT_VOXEL_CAP)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--outdir")
    p.add_argument("--manifest", help="re-run the run recorded in this "
                                      "manifest (bit-identical artifacts)")
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("bench", help="time the pipeline's hot stages")
    p.add_argument("--sizes", default="64,128,256", help="EDT grid edges")
    p.add_argument("--with-500", action="store_true",
                   help="include the 500^3 transform if memory allows")
    p.add_argument("--out", default="bench.csv")
    p.set_defaults(func=_cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 4
    except FracmorphError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
