"""Command line entry point: ``hobsim <verb> [--config cfg.json] [--feed F] [--interval-deg A] [--out DIR]``."""

from __future__ import annotations

import argparse
import json
import os
import sys

from hobsim.cutting import transverse_slice
from hobsim.harness import (
    ConfigError,
    check_trends,
    config_hash,
    export_stl,
    load_config,
    provenance_line,
    run_sweep,
    write_slice_csv,
    write_slice_svg,
)
from hobsim.kinematics import build_schedule
from hobsim.metrology import align_clocking, error_map, export_error_surface


def _config(args):
    cfg = load_config(args.config)
    changes = {}
    if args.feed is not None:
        changes["feed_per_rev"] = args.feed
    if args.interval_deg is not None:
        changes["interval_angle"] = args.interval_deg
    if changes:
        cfg = type(cfg)(**{**cfg.__dict__, "setup": cfg.setup.replace(**changes)})
    return cfg


def _out(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _aligned(cfg):
    setup = cfg.setup
    schedule = build_schedule(setup)
    grid = setup.grid(cfg.rows, cfg.cols, cfg.profile_margin, cfg.axial_margin)
    gamma = align_clocking(grid, schedule)
    return setup, schedule, error_map(grid, schedule, clocking_offset=gamma)


def cmd_simulate(args, cfg, prov):
    setup, schedule, emap = _aligned(cfg)
    emap.field.to_csv(_out(args, "deviations.csv"), prov)
    csv_path, json_path = export_error_surface(emap, _out(args, "error_map.csv"), prov)
    print(f"feed {setup.feed_per_rev:g} mm/r, interval {setup.interval_angle:g} deg, {len(schedule)} poses")
    print(f"clocking offset {emap.clocking_offset:.6e} rad")
    print(f"max |error| over {emap.sample_rows}x{emap.sample_cols} samples: {emap.max_abs_error:.5f} um")
    print(f"wrote {_out(args, 'deviations.csv')}, {csv_path}, {json_path}")


def cmd_sweep(args, cfg, prov):
    path = _out(args, "sweep.csv")
    cfg = type(cfg)(**{**cfg.__dict__, "table_path": path})

    def progress(res):
        status = res.error or f"{res.max_abs_error:.5f} um"
        print(f"  feed {res.feed:g}, interval {res.interval:g}: {status} ({res.runtime_s:.2f} s)",
              flush=True)

    table = run_sweep(cfg, progress)
    print(table.format())
    print("\n".join(check_trends(table).lines()))
    print(f"wrote {path}")


def cmd_slice(args, cfg, prov):
    setup = cfg.setup
    z = setup.gear.face_width / 2 if args.z is None else args.z
    slc = transverse_slice(setup, build_schedule(setup), z, args.resolution)
    write_slice_csv(slc, _out(args, "slice.csv"), prov)
    write_slice_svg(slc, _out(args, "slice.svg"), prov)
    print(f"slice at z = {z:g} mm: {len(slc.radii)} samples, {slc.facet_count} facets")
    print(f"wrote {_out(args, 'slice.csv')}, {_out(args, 'slice.svg')}")


def cmd_export_stl(args, cfg, prov):
    _, _, emap = _aligned(cfg)
    path = _out(args, "flank.stl")
    n = export_stl(emap.field, path, prov)
    print(f"wrote {path} ({n} triangles)")


def cmd_check_hob(args, cfg, prov):
    report = cfg.setup.derived_hob().consistency_report()
    print(json.dumps(report, indent=2))


VERBS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "slice": cmd_slice,
    "export-stl": cmd_export_stl,
    "check-hob": cmd_check_hob,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config with gear/hob/machine/sweep sections")
    common.add_argument("--feed", type=float, help="hob feed per workpiece revolution, mm")
    common.add_argument("--interval-deg", type=float, help="workpiece rotation per step, deg")
    common.add_argument("--out", default="out", help="output directory")
    parser = argparse.ArgumentParser(prog="hobsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in VERBS:
        p = sub.add_parser(verb, parents=[common])
        if verb == "slice":
            p.add_argument("--z", type=float, help="transverse plane, mm (default mid-face)")
            p.add_argument("--resolution", type=int, default=720, help="samples per tooth pitch")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    prov = provenance_line(cfg)
    print(prov)
    VERBS[args.verb](args, cfg, prov)
    return 0


if __name__ == "__main__":
    sys.exit(main())
