"""As-cut flank as the discrete envelope of all cutter poses.

Each theoretical flank point is probed along its outward normal.  For every
pose the ray is intersected with the hob thread solid; the as-cut surface sits
at the smallest such intersection over all poses.  Positive deviations mean
material left above the theoretical flank.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from hobsim import _kernels
from hobsim.gear import FlankGrid, flank_signed_distance_2d
from hobsim.hob import DerivedHob
from hobsim.kinematics import CutterSchedule, MachineSetup

DEFAULT_TOL = 1e-7


class UncutPointError(RuntimeError):
    """No cutter pose reaches the probed point."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


def default_halfwidth(setup: MachineSetup) -> float:
    return 2.0 * setup.gear.normal_module


def _arrays(schedule: CutterSchedule, hob: DerivedHob | None):
    if hob is None:
        hob = schedule.setup.derived_hob()
    A, b = schedule.transforms()
    return A.reshape(-1, 3, 3), b.reshape(-1, 3), hob


def deviation_at(point, normal, schedule: CutterSchedule, hob: DerivedHob | None = None,
                 search_halfwidth: float | None = None, tol: float = DEFAULT_TOL,
                 cull: bool = True) -> tuple[float, int]:
    """Signed material offset along ``normal`` at ``point`` and the limiting pose index."""
    if search_halfwidth is None:
        search_halfwidth = default_halfwidth(schedule.setup)
    if not search_halfwidth > 0 or not tol > 0:
        raise ValueError("search_halfwidth and tol must be positive")
    normal = np.asarray(normal, dtype=float)
    if abs(np.linalg.norm(normal) - 1.0) > 1e-9:
        raise ValueError("normal must be a unit vector")
    if len(schedule) == 0:
        raise UncutPointError("empty schedule: nothing cuts this point")
    A, b, hob = _arrays(schedule, hob)
    p = np.asarray(point, dtype=float)
    t, k = _kernels.ray_deviation(p[0], p[1], p[2], normal[0], normal[1], normal[2],
                                  A, b, hob.profile, search_halfwidth, tol, cull)
    if not math.isfinite(t):
        raise UncutPointError(f"no pose reaches point {p.tolist()}")
    return float(t), int(k)


@dataclass(frozen=True)
class DeviationField:
    grid: FlankGrid = field(repr=False)
    deviations: np.ndarray = field(repr=False)  # (rows, cols) mm
    limiting_pose_index: np.ndarray = field(repr=False)  # (rows, cols)

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.deviations)))

    def offset_points(self) -> np.ndarray:
        """Grid points moved onto the simulated surface."""
        return self.grid.points + self.deviations[..., None] * self.grid.normals

    def to_csv(self, path, header: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(header.rstrip("\n") + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "col", "u", "z_mm", "dev_mm", "pose_index"])
            for i in range(self.grid.rows):
                for j in range(self.grid.cols):
                    w.writerow([i, j, f"{self.grid.profile_params[j]:.12g}",
                                f"{self.grid.axial_params[i]:.12g}",
                                f"{self.deviations[i, j]:.12g}",
                                int(self.limiting_pose_index[i, j])])


def read_deviation_csv(path) -> dict[str, np.ndarray]:
    """Columns of a deviation CSV, skipping ``#`` comment lines."""
    with open(path) as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    return {key: np.array([float(r[key]) for r in rows]) for key in rows[0]}


def _check_same_gear(grid: FlankGrid, setup: MachineSetup) -> None:
    tp = grid.transverse
    ref = setup.transverse()
    same_lead = tp.lead == ref.lead or abs(tp.lead - ref.lead) <= 1e-6
    if tp.tooth_count != ref.tooth_count or abs(tp.base_radius - ref.base_radius) > 1e-9 or not same_lead:
        raise ValueError("grid and schedule describe different gears")


def simulate_flank(grid: FlankGrid, schedule: CutterSchedule, hob: DerivedHob | None = None,
                   search_halfwidth: float | None = None, tol: float = DEFAULT_TOL,
                   cull: bool = True) -> DeviationField:
    _check_same_gear(grid, schedule.setup)
    if search_halfwidth is None:
        search_halfwidth = default_halfwidth(schedule.setup)
    if len(schedule) == 0:
        raise UncutPointError("empty schedule: nothing cuts the grid", 0, 0)
    A, b, hob = _arrays(schedule, hob)
    pts = np.ascontiguousarray(grid.points.reshape(-1, 3))
    nrm = np.ascontiguousarray(grid.normals.reshape(-1, 3))
    dev, idx = _kernels.deviations_many(pts, nrm, A, b, hob.profile, search_halfwidth, tol, cull)
    bad = np.flatnonzero(~np.isfinite(dev))
    if bad.size:
        i, j = divmod(int(bad[0]), grid.cols)
        raise UncutPointError(f"grid point ({i}, {j}) is never reached by the cutter", i, j)
    shape = (grid.rows, grid.cols)
    return DeviationField(grid, dev.reshape(shape), idx.reshape(shape))


def brute_force_field(grid: FlankGrid, schedule: CutterSchedule, hob: DerivedHob | None = None,
                      search_halfwidth: float | None = None, step: float = 1e-5) -> DeviationField:
    """Reference field from a uniform ``step`` scan of every pose; slow, for validation."""
    if search_halfwidth is None:
        search_halfwidth = default_halfwidth(schedule.setup)
    A, b, hob = _arrays(schedule, hob)
    pts = np.ascontiguousarray(grid.points.reshape(-1, 3))
    nrm = np.ascontiguousarray(grid.normals.reshape(-1, 3))
    dev, idx = _kernels.brute_many(pts, nrm, A, b, hob.profile, search_halfwidth, step)
    shape = (grid.rows, grid.cols)
    return DeviationField(grid, dev.reshape(shape), idx.reshape(shape))


@dataclass(frozen=True)
class TransverseSlice:
    """Cut blank profile over one tooth pitch in a transverse plane."""

    z_plane: float
    angles: np.ndarray = field(repr=False)  # polar angles, rad
    radii: np.ndarray = field(repr=False)
    pose_index: np.ndarray = field(repr=False)  # -1 where the blank is untouched
    tooth_count: int = 0

    @property
    def points(self) -> np.ndarray:
        return np.stack([self.radii * np.cos(self.angles), self.radii * np.sin(self.angles)], axis=-1)

    @property
    def facet_count(self) -> int:
        """Number of runs of constant limiting pose among cut samples."""
        cut = self.pose_index[self.pose_index >= 0]
        if cut.size == 0:
            return 0
        return int(1 + np.count_nonzero(np.diff(cut)))

    def closed_polyline(self) -> np.ndarray:
        """The full transverse outline, repeating the computed pitch around the gear."""
        pitch = 2 * math.pi / self.tooth_count
        pts = []
        for k in range(self.tooth_count):
            a = self.angles + k * pitch
            pts.append(np.stack([self.radii * np.cos(a), self.radii * np.sin(a)], axis=-1))
        return np.concatenate(pts + [pts[0][:1]])


def transverse_slice(setup: MachineSetup, schedule: CutterSchedule, z_plane: float,
                     angular_resolution: int = 720, hob: DerivedHob | None = None,
                     tol: float = DEFAULT_TOL) -> TransverseSlice:
    """Profile of the cut blank at ``z_plane`` sampled on one pitch centred on a tooth space."""
    if angular_resolution < 720:
        raise ValueError("angular_resolution must be at least 720 samples per pitch")
    if not 0 <= z_plane <= setup.gear.face_width:
        raise ValueError("z_plane lies outside the blank")
    tp = setup.transverse()
    pitch = tp.angular_pitch
    # tooth 0 is centred on +x at z = 0 and twists with z; the space follows half a pitch on
    centre = z_plane * tp.twist_per_mm - 0.5 * pitch
    angles = centre - 0.5 * pitch + pitch * np.arange(angular_resolution) / angular_resolution
    r_start = max(tp.root_radius - setup.gear.normal_module, 0.5 * tp.root_radius)
    if len(schedule) == 0:
        radii = np.full(angular_resolution, tp.tip_radius)
        who = np.full(angular_resolution, -1, dtype=np.int64)
    else:
        A, b, hob = _arrays(schedule, hob)
        radii, who = _kernels.radial_profile(angles, z_plane, r_start, tp.tip_radius, A, b,
                                             hob.profile, tol)
    return TransverseSlice(z_plane, angles, radii, who, tp.tooth_count)


def slice_involute_error(slc: TransverseSlice, setup: MachineSetup, u_lo: float, u_hi: float):
    """Normal distance of slice samples from the analytic involute, both flanks of the space.

    Only samples whose radius falls in the roll window ``[u_lo, u_hi]`` count.
    Returns ``(u, distance)`` arrays; positive distance means material left.
    """
    tp = setup.transverse()
    rb = tp.base_radius
    u = np.sqrt(np.maximum(slc.radii**2 / rb**2 - 1.0, 0.0))
    keep = (u >= u_lo) & (u <= u_hi) & (slc.radii > rb)
    pts = slc.points
    # the modelled flank (tooth 0, facing -theta) bounds the space on its +theta
    # side; samples below the space centre are mirrored onto it
    centre = slc.z_plane * tp.twist_per_mm - 0.5 * tp.angular_pitch
    upper = np.angle(np.exp(1j * (slc.angles - centre))) >= 0
    mirrored = np.stack([slc.radii * np.cos(2 * centre - slc.angles),
                         slc.radii * np.sin(2 * centre - slc.angles)], axis=-1)
    xy = np.where(upper[:, None], pts, mirrored)
    dist = flank_signed_distance_2d(tp, xy, slc.z_plane)
    return u[keep], dist[keep]
