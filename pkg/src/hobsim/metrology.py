"""Clocking alignment and sampled flank error maps."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from hobsim import _kernels
from hobsim.cutting import DeviationField, default_halfwidth, simulate_flank, UncutPointError
from hobsim.gear import FlankGrid, subsample_indices
from hobsim.hob import DerivedHob
from hobsim.kinematics import CutterSchedule

# evaluation tolerance for alignment and error maps (mm); tighter than the
# field default so a zeroed centre sample stays well below 1e-9 mm
METROLOGY_TOL = 1e-12


class AlignmentError(RuntimeError):
    pass


def _centre_residual(grid: FlankGrid, schedule, hob, halfwidth, tol):
    i, j = grid.center_index
    p0, n0 = grid.points[i, j], grid.normals[i, j]
    A, b = schedule.transforms()
    prof = hob.profile

    def g(gamma):
        c, s = math.cos(gamma), math.sin(gamma)
        p = (c * p0[0] - s * p0[1], s * p0[0] + c * p0[1], p0[2])
        n = (c * n0[0] - s * n0[1], s * n0[0] + c * n0[1], n0[2])
        t, _ = _kernels.ray_deviation(*p, *n, A, b, prof, halfwidth, tol, True)
        return t

    return g


def align_clocking(grid: FlankGrid, schedule: CutterSchedule, hob: DerivedHob | None = None,
                   search_halfwidth: float | None = None, tol: float = METROLOGY_TOL) -> float:
    """Rotation (rad) of the theoretical grid that zeroes the centre sample's deviation.

    Turning the flank by ``+gamma`` pushes it into the tooth, so the deviation
    falls roughly as ``base_radius * cos(base_helix) * gamma``.
    """
    if hob is None:
        hob = schedule.setup.derived_hob()
    if search_halfwidth is None:
        search_halfwidth = default_halfwidth(schedule.setup)
    if len(schedule) == 0:
        raise UncutPointError("empty schedule: centre sample is not cut")
    g = _centre_residual(grid, schedule, hob, search_halfwidth, tol)
    d0 = g(0.0)
    if not math.isfinite(d0):
        raise UncutPointError("centre sample is not cut")
    if d0 == 0.0:
        return 0.0
    tp = grid.transverse
    slope = -tp.base_radius * math.cos(math.radians(tp.base_helix_angle))
    pitch = tp.angular_pitch
    guess = -d0 / slope
    # widen a bracket around the linear estimate until the sign changes
    width = max(abs(guess), 1e-9)
    for _ in range(60):
        lo, hi = guess - width, guess + width
        if abs(lo) > pitch and abs(hi) > pitch:
            break
        lo, hi = max(lo, -pitch), min(hi, pitch)
        glo, ghi = g(lo), g(hi)
        if math.isfinite(glo) and math.isfinite(ghi) and glo * ghi <= 0:
            gamma = optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
            return float(gamma)
        width *= 2
    raise AlignmentError("no clocking angle within one angular pitch zeroes the centre sample")


@dataclass(frozen=True)
class ErrorMap:
    sample_rows: int
    sample_cols: int
    row_indices: np.ndarray = field(repr=False)
    col_indices: np.ndarray = field(repr=False)
    sampled_u: np.ndarray = field(repr=False)
    sampled_z: np.ndarray = field(repr=False)
    errors: np.ndarray = field(repr=False)  # (sample_rows, sample_cols) um
    clocking_offset: float = 0.0
    max_abs_error: float = 0.0  # um
    field: DeviationField | None = field(default=None, repr=False)

    @property
    def corners(self) -> dict[str, tuple[int, int]]:
        """Corner labels in sample indices: A at the first row and column, then around."""
        r, c = self.sample_rows - 1, self.sample_cols - 1
        return {"A": (0, 0), "B": (0, c), "C": (r, c), "D": (r, 0)}


def sample_field(fld: DeviationField, clocking_offset: float = 0.0, sample_rows: int = 5,
                 sample_cols: int = 5, full_grid: bool = False) -> ErrorMap:
    """Equidistant samples of a deviation field, converted to um."""
    grid = fld.grid
    ri = subsample_indices(grid.rows, sample_rows)
    ci = subsample_indices(grid.cols, sample_cols)
    um = fld.deviations * 1e3
    errors = um[np.ix_(ri, ci)]
    pool = um if full_grid else errors
    return ErrorMap(sample_rows, sample_cols, ri, ci, grid.profile_params[ci], grid.axial_params[ri],
                    errors, float(clocking_offset), float(np.max(np.abs(pool))), fld)


def error_map(grid: FlankGrid, schedule: CutterSchedule, hob: DerivedHob | None = None,
              clocking_offset: float = 0.0, sample_rows: int = 5, sample_cols: int = 5,
              full_grid: bool = False, search_halfwidth: float | None = None,
              tol: float = METROLOGY_TOL) -> ErrorMap:
    """Sampled errors (um) of the aligned flank; the max runs over the samples unless ``full_grid``."""
    fld = simulate_flank(grid.rotated(clocking_offset), schedule, hob, search_halfwidth, tol)
    return sample_field(fld, clocking_offset, sample_rows, sample_cols, full_grid)


def export_error_surface(emap: ErrorMap, path, header: str | None = None) -> tuple[str, str]:
    """Write the sampled errors as CSV plus a ``.json`` sidecar; returns both paths."""
    path = str(path)
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header.rstrip("\n") + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "col", "u", "z_mm", "err_um"])
        for i in range(emap.sample_rows):
            for j in range(emap.sample_cols):
                w.writerow([i, j, f"{emap.sampled_u[j]:.12g}", f"{emap.sampled_z[i]:.12g}",
                            f"{emap.errors[i, j]:.12g}"])
    sidecar = (path[:-4] if path.endswith(".csv") else path) + ".json"
    meta = {
        "clocking_offset_rad": emap.clocking_offset,
        "max_abs_error_um": emap.max_abs_error,
        "corners": {k: list(v) for k, v in emap.corners.items()},
        "rows": emap.sample_rows,
        "cols": emap.sample_cols,
    }
    if header:
        meta["provenance"] = header.lstrip("# ").strip()
    with open(sidecar, "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return path, sidecar


def read_error_surface(path) -> np.ndarray:
    with open(path) as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    n_rows = max(int(r["row"]) for r in rows) + 1
    n_cols = max(int(r["col"]) for r in rows) + 1
    out = np.empty((n_rows, n_cols))
    for r in rows:
        out[int(r["row"]), int(r["col"])] = float(r["err_um"])
    return out
