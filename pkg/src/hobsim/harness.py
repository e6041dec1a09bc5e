"""Feed x interval sweeps, trend checks, configuration loading and file exports."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from hobsim import __version__
from hobsim.cutting import DeviationField, TransverseSlice
from hobsim.gear import GearSpec
from hobsim.hob import HobSpec
from hobsim.kinematics import MachineSetup, build_schedule
from hobsim.metrology import align_clocking, error_map

DEFAULT_FEEDS = (5.0, 4.0, 3.0, 2.0, 1.0)
DEFAULT_INTERVALS = (8.0, 4.0, 2.0)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    setup: MachineSetup = field(default_factory=MachineSetup)
    feeds: tuple[float, ...] = DEFAULT_FEEDS
    intervals: tuple[float, ...] = DEFAULT_INTERVALS
    rows: int = 25
    cols: int = 25
    profile_margin: float = 0.05
    axial_margin: float = 0.05
    table_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "feeds", tuple(float(f) for f in self.feeds))
        object.__setattr__(self, "intervals", tuple(float(i) for i in self.intervals))
        if not self.feeds or not self.intervals:
            raise ConfigError("feeds and intervals must be non-empty")
        if any(v <= 0 for v in self.feeds + self.intervals):
            raise ConfigError("feeds and intervals must be positive")

    def to_dict(self) -> dict:
        return {
            "machine": self.setup.to_dict(),
            "sweep": {
                "feeds": list(self.feeds),
                "intervals": list(self.intervals),
                "rows": self.rows,
                "cols": self.cols,
                "profile_margin": self.profile_margin,
                "axial_margin": self.axial_margin,
                "table_path": self.table_path,
            },
        }


def config_hash(obj) -> str:
    """Short stable digest of a config object (anything with ``to_dict``) or a plain dict."""
    data = obj.to_dict() if hasattr(obj, "to_dict") else obj
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def provenance_line(obj) -> str:
    return f"# config-hash={config_hash(obj)}, version={__version__}"


def load_config(path=None, data: dict | None = None) -> SweepConfig:
    """Build a SweepConfig from a JSON file with optional gear/hob/machine/sweep sections."""
    if data is None:
        data = {}
        if path is not None:
            with open(path) as fh:
                data = json.load(fh)
    unknown = set(data) - {"gear", "hob", "machine", "sweep"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    machine = dict(data.get("machine", {}))
    gear = GearSpec.from_dict({**machine.pop("gear", {}), **data.get("gear", {})})
    hob = HobSpec.from_dict({**machine.pop("hob", {}), **data.get("hob", {})})
    setup = MachineSetup(gear=gear, hob=hob, **machine)
    sweep = dict(data.get("sweep", {}))
    bad = set(sweep) - set(SweepConfig.__dataclass_fields__)
    if bad:
        raise ConfigError(f"unknown sweep fields: {sorted(bad)}")
    return SweepConfig(setup=setup, **sweep)


@dataclass(frozen=True)
class CellResult:
    feed: float
    interval: float
    max_abs_error: float  # um, nan on failure
    clocking_offset: float
    runtime_s: float
    error: str | None = None


def run_cell(cfg: SweepConfig, feed: float, interval: float) -> CellResult:
    t0 = time.perf_counter()
    try:
        setup = cfg.setup.replace(feed_per_rev=feed, interval_angle=interval)
        schedule = build_schedule(setup)
        grid = setup.grid(cfg.rows, cfg.cols, cfg.profile_margin, cfg.axial_margin)
        gamma = align_clocking(grid, schedule)
        emap = error_map(grid, schedule, clocking_offset=gamma)
        return CellResult(feed, interval, emap.max_abs_error, gamma, time.perf_counter() - t0)
    except Exception as exc:  # recorded per cell, the sweep carries on
        return CellResult(feed, interval, math.nan, math.nan, time.perf_counter() - t0,
                          f"{type(exc).__name__}: {exc}")


@dataclass(frozen=True)
class SweepTable:
    feeds: tuple[float, ...]
    intervals: tuple[float, ...]
    max_error: np.ndarray = field(repr=False)  # (feeds, intervals) um
    runtime_s: np.ndarray = field(repr=False)
    clocking_offset: np.ndarray = field(repr=False)
    failures: dict = field(default_factory=dict)
    config_hash: str = ""
    version: str = __version__

    @property
    def complete(self) -> bool:
        return not self.failures

    def cell(self, feed: float, interval: float) -> float:
        return float(self.max_error[self.feeds.index(feed), self.intervals.index(interval)])

    def provenance(self) -> str:
        return f"# config-hash={self.config_hash}, version={self.version}"

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.provenance() + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["feed_mm_per_rev"] + [f"interval_{i:g}deg_um" for i in self.intervals])
            for a, feed in enumerate(self.feeds):
                w.writerow([f"{feed:g}"] + [f"{v:.12g}" for v in self.max_error[a]])

    def format(self) -> str:
        head = "feed \\ interval " + "".join(f"{i:>12g}" for i in self.intervals)
        lines = [head]
        for a, feed in enumerate(self.feeds):
            lines.append(f"{feed:>15g} " + "".join(f"{v:12.5f}" for v in self.max_error[a]))
        return "\n".join(lines)


def run_sweep(cfg: SweepConfig, progress=None) -> SweepTable:
    shape = (len(cfg.feeds), len(cfg.intervals))
    err, rt, clk = np.full(shape, np.nan), np.zeros(shape), np.full(shape, np.nan)
    failures = {}
    for a, feed in enumerate(cfg.feeds):
        for c, interval in enumerate(cfg.intervals):
            res = run_cell(cfg, feed, interval)
            err[a, c], rt[a, c], clk[a, c] = res.max_abs_error, res.runtime_s, res.clocking_offset
            if res.error:
                failures[(feed, interval)] = res.error
            if progress:
                progress(res)
    table = SweepTable(cfg.feeds, cfg.intervals, err, rt, clk, failures, config_hash(cfg))
    if cfg.table_path:
        table.to_csv(cfg.table_path)
    return table


@dataclass(frozen=True)
class TrendReport:
    columns_monotone: tuple[bool, ...]
    rows_monotone: tuple[bool, ...]
    row_exceptions: tuple[tuple[float, float, float], ...]  # (feed, coarser, finer interval)
    ratio: float
    passed: bool

    def lines(self) -> list[str]:
        n_c, n_r = len(self.columns_monotone), len(self.rows_monotone)
        out = [
            f"columns monotone in feed: {sum(self.columns_monotone)}/{n_c}",
            f"rows monotone in interval: {sum(self.rows_monotone)}/{n_r}, "
            f"{len(self.row_exceptions)} exception(s)",
        ]
        out += [f"  exception: feed {f:g}, {a:g} deg -> {b:g} deg" for f, a, b in self.row_exceptions]
        out.append(f"coarsest/finest ratio: {self.ratio:.3f}")
        out.append("PASS" if self.passed else "FAIL")
        return out


def check_trends(table: SweepTable | None = None, *, matrix=None, feeds=None, intervals=None,
                 max_row_exceptions: int = 1) -> TrendReport:
    """Monotonicity report: every column must fall with feed, rows may break once table-wide."""
    if table is not None:
        matrix, feeds, intervals = table.max_error, table.feeds, table.intervals
    m = np.asarray(matrix, dtype=float)
    feeds = np.asarray(feeds, dtype=float)
    intervals = np.asarray(intervals, dtype=float)
    # coarse to fine along both axes
    m = m[np.argsort(-feeds, kind="stable")][:, np.argsort(-intervals, kind="stable")]
    feeds, intervals = np.sort(feeds)[::-1], np.sort(intervals)[::-1]
    cols = tuple(bool(np.all(np.diff(m[:, c]) <= 0)) for c in range(m.shape[1]))
    exceptions, rows = [], []
    for a in range(m.shape[0]):
        bad = np.flatnonzero(np.diff(m[a]) > 0)
        rows.append(bad.size == 0)
        exceptions += [(float(feeds[a]), float(intervals[c]), float(intervals[c + 1])) for c in bad]
    ratio = float(m[0, 0] / m[-1, -1])
    passed = bool(all(cols) and len(exceptions) <= max_row_exceptions and np.all(np.isfinite(m)))
    return TrendReport(cols, tuple(rows), tuple(exceptions), ratio, passed)


_STL_RECORD = np.dtype([("normal", "<f4", 3), ("v", "<f4", (3, 3)), ("attr", "<u2")])


def stl_triangles(fld: DeviationField) -> tuple[np.ndarray, np.ndarray]:
    """Triangles ``(n, 3, 3)`` of the offset flank patch and their unit normals.

    Each grid cell gives two triangles, wound so facet normals follow the
    flank's outward normal.
    """
    pts = fld.offset_points()
    nrm = fld.grid.normals
    r, c = fld.grid.rows - 1, fld.grid.cols - 1
    p00, p01, p10, p11 = pts[:-1, :-1], pts[:-1, 1:], pts[1:, :-1], pts[1:, 1:]
    tris = np.concatenate([np.stack([p00, p10, p11], -2).reshape(r * c, 3, 3),
                           np.stack([p00, p11, p01], -2).reshape(r * c, 3, 3)])
    ref = np.concatenate([nrm[:-1, :-1].reshape(-1, 3)] * 2)
    fn = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    flip = np.einsum("ij,ij->i", fn, ref) < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    fn[flip] = -fn[flip]
    fn /= np.linalg.norm(fn, axis=1, keepdims=True)
    return tris, fn


def export_stl(fld: DeviationField, path, header: str = "") -> int:
    """Binary STL of the offset flank patch; returns the triangle count."""
    tris, fn = stl_triangles(fld)
    rec = np.zeros(len(tris), dtype=_STL_RECORD)
    rec["normal"], rec["v"] = fn, tris
    head = header.encode("ascii", "replace")[:80].ljust(80, b" ")
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(struct.pack("<I", len(tris)))
        fh.write(rec.tobytes())
    return len(tris)


def read_stl(path) -> tuple[bytes, np.ndarray]:
    with open(path, "rb") as fh:
        head = fh.read(80)
        (n,) = struct.unpack("<I", fh.read(4))
        rec = np.frombuffer(fh.read(), dtype=_STL_RECORD, count=n)
    return head, rec


def write_slice_csv(slc: TransverseSlice, path, header: str = "") -> None:
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["angle_rad", "radius_mm", "x_mm", "y_mm", "pose_index"])
        for a, r, (x, y), k in zip(slc.angles, slc.radii, slc.points, slc.pose_index):
            w.writerow([f"{a:.12g}", f"{r:.12g}", f"{x:.12g}", f"{y:.12g}", int(k)])


def write_slice_svg(slc: TransverseSlice, path, header: str = "", full: bool = True) -> None:
    """SVG outline of the slice in mm (1 user unit = 1 mm), y axis pointing up."""
    pts = slc.closed_polyline() if full else slc.points
    xy = pts * np.array([1.0, -1.0])
    lo, hi = xy.min(axis=0) - 1.0, xy.max(axis=0) + 1.0
    w, h = hi - lo
    d = "M " + " L ".join(f"{x:.6f},{y:.6f}" for x, y in xy)
    if full:
        d += " Z"
    comment = f"<!-- {header.lstrip('# ')} -->\n" if header else ""
    with open(path, "w") as fh:
        fh.write('<?xml version="1.0" encoding="UTF-8"?>\n')
        fh.write(comment)
        fh.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.3f}mm" height="{h:.3f}mm" '
                 f'viewBox="{lo[0]:.6f} {lo[1]:.6f} {w:.6f} {h:.6f}">\n')
        fh.write(f'  <path d="{d}" fill="none" stroke="black" stroke-width="0.02"/>\n')
        fh.write("</svg>\n")
