"""One test per acceptance criterion; each prints a PASS/FAIL line before asserting."""

import math
import time

import numpy as np

from conftest import report
from hobsim.cutting import brute_force_field, simulate_flank, slice_involute_error, transverse_slice
from hobsim.gear import flank_normal, flank_point, flank_signed_distance_2d, screw
from hobsim.harness import DEFAULT_FEEDS, DEFAULT_INTERVALS, SweepConfig, check_trends, run_sweep
from hobsim.hob import HobSpec, derive_hob, hob_signed_membership, screw_hob
from hobsim.kinematics import MachineSetup, build_schedule
from hobsim.metrology import align_clocking, error_map
from hobsim.cutting import deviation_at

REFERENCE_TABLE = [
    [11.20932, 8.66371, 7.41972],
    [5.72456, 3.20556, 3.53586],
    [3.16018, 2.42126, 1.52903],
    [2.75746, 1.40773, 1.11871],
    [2.27441, 1.15853, 0.91163],
]


def _line(n, ok, detail):
    report(f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def test_criterion_1_hob_consistency():
    t0 = time.perf_counter()
    h = derive_hob(HobSpec())
    dt = time.perf_counter() - t0
    d_lead = abs(h.derived_lead_angle - (1 + 46 / 60))
    d_prof = abs(h.derived_axial_profile_angle - (20 + 1 / 60))
    d_pitch = abs(h.axial_pitch - 6.286)
    ok = d_lead < 0.02 and d_prof < 0.02 and d_pitch < 0.001 and dt < 1.0
    assert _line(1, ok, f"lead {h.derived_lead_angle:.5f} deg (|d| {d_lead:.4f}), "
                        f"axial profile {h.derived_axial_profile_angle:.5f} deg (|d| {d_prof:.4f}), "
                        f"axial pitch {h.axial_pitch:.6f} mm (|d| {d_pitch:.6f}), {dt:.2f} s")


def test_criterion_2_envelope_convergence():
    t0 = time.perf_counter()
    s = MachineSetup(feed_per_rev=0.5, interval_angle=0.5)
    tp = s.transverse()
    slc = transverse_slice(s, build_schedule(s), s.gear.face_width / 2)
    # working window: the involute part of the flank between the form and tip circles
    u, d = slice_involute_error(slc, s, 1.05 * tp.u_form, 0.95 * tp.u_tip)
    dt = time.perf_counter() - t0
    worst = float(np.max(np.abs(d)))
    ok = worst < 1e-4 and dt < 60 and len(u) > 100
    assert _line(2, ok, f"max |slice - involute| {worst:.3e} mm over {len(u)} samples "
                        f"(tol 1e-4), {dt:.1f} s")


def test_criterion_3_alignment(finest_cell):
    t0 = time.perf_counter()
    setup, sch = finest_cell
    grid = setup.grid()
    gamma = align_clocking(grid, sch)
    g = grid.rotated(gamma)
    centre, _ = deviation_at(g.points[12, 12], g.normals[12, 12], sch, tol=1e-12)
    recovered = align_clocking(grid, sch.rotated(1e-3)) - gamma
    dt = time.perf_counter() - t0
    ok = abs(centre) < 1e-9 and abs(recovered + 1e-3) < 1e-8 and dt < 60
    assert _line(3, ok, f"centre deviation {abs(centre):.2e} mm (tol 1e-9), injected 1e-3 rad "
                        f"recovered with error {abs(recovered + 1e-3):.2e} rad (tol 1e-8), {dt:.1f} s")


def test_criterion_4_sweep_trends():
    t0 = time.perf_counter()
    table = run_sweep(SweepConfig())
    dt = time.perf_counter() - t0
    rep = check_trends(table)
    finest = table.cell(1.0, 2.0)
    ok = (table.complete and table.feeds == DEFAULT_FEEDS and table.intervals == DEFAULT_INTERVALS
          and rep.passed and rep.ratio >= 5 and finest < 2.0 and dt < 1800)
    cols = "".join("y" if c else "n" for c in rep.columns_monotone)
    _line(4, ok, f"columns monotone {cols}, row exceptions {len(rep.row_exceptions)}, "
                 f"ratio {rep.ratio:.2f} (>= 5), finest {finest:.3f} um (< 2), {dt:.1f} s")
    print(table.format())
    assert ok


def test_criterion_5_oracle(toy_setup):
    t0 = time.perf_counter()
    sch = build_schedule(toy_setup)
    grid = toy_setup.grid()
    fast = simulate_flank(grid, sch)
    slow = brute_force_field(grid, sch, step=1e-5)
    dt = time.perf_counter() - t0
    worst = float(np.max(np.abs(fast.deviations - slow.deviations)))
    ok = worst < 2e-5 and dt < 300
    assert _line(5, ok, f"max |bisection - scan| {worst:.2e} mm over {grid.rows * grid.cols} "
                        f"points, {len(sch)} poses (tol 2e-5), {dt:.1f} s")


def test_criterion_6_refinement_superset():
    tol = 1e-7
    pairs = [(1.0, 8.0, 4.0), (1.0, 4.0, 2.0), (5.0, 4.0, 2.0)]
    worst = -math.inf
    for feed, coarse, fine in pairs:
        a = MachineSetup(feed_per_rev=feed, interval_angle=coarse)
        b = a.replace(interval_angle=fine)
        grid = a.grid()
        fa = simulate_flank(grid, build_schedule(a)).deviations
        fb = simulate_flank(grid, build_schedule(b)).deviations
        worst = max(worst, float(np.max(fb - fa)))
    ok = worst <= tol
    assert _line(6, ok, f"largest pointwise increase after doubling pose density {worst:.2e} mm "
                        f"on {len(pairs)} pairs (tol 1e-7)")


def test_criterion_7_geometry_invariants():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20261016)
    n = 1000
    tp = MachineSetup().transverse()
    b = MachineSetup().gear.face_width
    u = rng.uniform(tp.u_form, tp.u_tip, n)
    z = rng.uniform(0.0, b, n)
    p = flank_point(tp, u, z)
    radius_err = np.max(np.abs(np.hypot(p[:, 0], p[:, 1]) - tp.base_radius * np.sqrt(1 + u * u)))

    delta = rng.uniform(-3.0, 3.0, n)
    moved = np.array([screw(tp, q, d) for q, d in zip(p, delta)])
    screw_err = np.max(np.abs(flank_signed_distance_2d(tp, moved[:, :2], moved[:, 2])))

    nrm = flank_normal(tp, u, z)
    h = 1e-6
    du = (flank_point(tp, u + h, z) - flank_point(tp, u - h, z)) / (2 * h)
    dz = (flank_point(tp, u, z + h) - flank_point(tp, u, z - h)) / (2 * h)
    ortho_err = max(np.max(np.abs(np.einsum("ij,ij->i", nrm, du)) / np.linalg.norm(du, axis=1)),
                    np.max(np.abs(np.einsum("ij,ij->i", nrm, dz)) / np.linalg.norm(dz, axis=1)))
    unit_err = np.max(np.abs(np.linalg.norm(nrm, axis=1) - 1))

    hob = derive_hob(HobSpec(), truncate=False)
    q = rng.uniform([-40, -40, -20], [40, 40, 20], (n, 3))
    turns = rng.integers(-3, 4, n).astype(float)
    screwed = np.array([screw_hob(hob, q[i:i + 1], turns[i])[0] for i in range(n)])
    period_err = np.max(np.abs(hob_signed_membership(hob, screwed) - hob_signed_membership(hob, q)))
    dt = time.perf_counter() - t0

    ok = (radius_err < 1e-9 and screw_err < 1e-9 and ortho_err < 1e-6 and unit_err < 1e-12
          and period_err < 1e-9 and dt < 60)
    assert _line(7, ok, f"{n} cases each: radius {radius_err:.1e}, screw {screw_err:.1e}, "
                        f"normal {ortho_err:.1e}/{unit_err:.1e}, hob period {period_err:.1e}, {dt:.1f} s")


def test_criterion_8_reference_table_trends():
    rep = check_trends(matrix=REFERENCE_TABLE, feeds=DEFAULT_FEEDS, intervals=DEFAULT_INTERVALS)
    ok = (rep.passed and all(rep.columns_monotone) and len(rep.columns_monotone) == 3
          and len(rep.row_exceptions) == 1 and rep.row_exceptions[0][0] == 4.0)
    assert _line(8, ok, f"{sum(rep.columns_monotone)} monotone columns, row exceptions "
                        f"{[(f, a, b) for f, a, b in rep.row_exceptions]}, ratio {rep.ratio:.2f}")
