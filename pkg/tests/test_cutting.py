import math

import numpy as np
import pytest

from hobsim.cutting import (
    DeviationField,
    UncutPointError,
    deviation_at,
    read_deviation_csv,
    simulate_flank,
    slice_involute_error,
    transverse_slice,
)
from hobsim.kinematics import MachineSetup, build_schedule

TOL = 1e-7


@pytest.fixture(scope="module")
def coarse():
    s = MachineSetup(feed_per_rev=2.0, interval_angle=4.0)
    sch = build_schedule(s)
    return s, sch, simulate_flank(s.grid(), sch)


def test_empty_schedule_is_uncut(default_setup):
    empty = build_schedule(default_setup).subset(slice(0, 0))
    g = default_setup.grid(5, 5)
    with pytest.raises(UncutPointError):
        deviation_at(g.points[2, 2], g.normals[2, 2], empty)
    with pytest.raises(UncutPointError):
        simulate_flank(g, empty)


def test_unreached_points_carry_grid_indices(default_setup):
    # only the approach: the hob never gets near the far end of the face
    sch = build_schedule(default_setup).subset(slice(0, 200))
    with pytest.raises(UncutPointError) as err:
        simulate_flank(default_setup.grid(), sch)
    assert err.value.row is not None and err.value.col is not None


def test_field_shape_and_bounds(coarse):
    s, _, fld = coarse
    assert fld.deviations.shape == (25, 25) and fld.limiting_pose_index.shape == (25, 25)
    assert np.all(np.isfinite(fld.deviations))
    assert np.all(np.abs(fld.deviations) <= 2 * s.gear.normal_module)
    assert fld.limiting_pose_index.min() >= 0


def test_field_equals_pointwise_deviation(coarse):
    s, sch, fld = coarse
    rng = np.random.default_rng(3)
    for i, j in rng.integers(0, 25, size=(8, 2)):
        t, k = deviation_at(fld.grid.points[i, j], fld.grid.normals[i, j], sch)
        assert t == fld.deviations[i, j] and k == fld.limiting_pose_index[i, j]


def test_deterministic(coarse):
    s, sch, fld = coarse
    again = simulate_flank(s.grid(), build_schedule(s))
    assert np.array_equal(again.deviations, fld.deviations)
    assert np.array_equal(again.limiting_pose_index, fld.limiting_pose_index)


def test_culling_does_not_change_results(coarse):
    s, sch, fld = coarse
    full = simulate_flank(s.grid(), sch, cull=False)
    assert np.max(np.abs(full.deviations - fld.deviations)) <= TOL


def test_refining_interval_never_raises_max_deviation():
    maxima = []
    for interval in (8.0, 4.0, 2.0):
        s = MachineSetup(feed_per_rev=1.0, interval_angle=interval)
        maxima.append(simulate_flank(s.grid(), build_schedule(s)).deviations.max())
    assert maxima[0] >= maxima[1] >= maxima[2]


@pytest.mark.parametrize("feed, interval", [(1.0, 2.0), (1.0, 4.0), (3.0, 4.0)])
def test_no_undercut_on_working_flank(feed, interval):
    s = MachineSetup(feed_per_rev=feed, interval_angle=interval)
    fld = simulate_flank(s.grid(), build_schedule(s))
    assert fld.deviations[1:-1, 1:-1].min() >= -TOL


def test_coarse_schedule_leaves_hundredths():
    s = MachineSetup(feed_per_rev=5.0, interval_angle=8.0)
    fld = simulate_flank(s.grid(), build_schedule(s))
    worst = fld.deviations.max()
    assert worst > 0 and 1e-3 < worst < 1e-1


def test_fine_schedule_converges_to_flank():
    s = MachineSetup(feed_per_rev=0.25, interval_angle=0.25)
    fld = simulate_flank(s.grid(5, 5), build_schedule(s))
    assert np.max(np.abs(fld.deviations)) < 1e-4


def test_superset_never_increases_deviation(coarse):
    s, sch, fld = coarse
    other = build_schedule(s.replace(interval_angle=2.0)).rotated(math.radians(0.7))
    both = simulate_flank(s.grid(), sch.merged(other))
    assert np.all(both.deviations <= fld.deviations + TOL)


def test_csv_round_trip(coarse, tmp_path):
    _, _, fld = coarse
    path = tmp_path / "dev.csv"
    fld.to_csv(path, "# config-hash=abc, version=0")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config-hash=")
    assert lines[1] == "row,col,u,z_mm,dev_mm,pose_index"
    assert len(lines) == 2 + 625
    cols = read_deviation_csv(path)
    assert np.array_equal(cols["dev_mm"], np.array([float(f"{v:.12g}") for v in fld.deviations.ravel()]))
    assert np.array_equal(cols["pose_index"].astype(int), fld.limiting_pose_index.ravel())


def test_offset_points_with_zero_field(coarse):
    _, _, fld = coarse
    zero = DeviationField(fld.grid, np.zeros((25, 25)), fld.limiting_pose_index)
    assert np.array_equal(zero.offset_points(), fld.grid.points)


def test_empty_slice_is_blank_circle(default_setup):
    empty = build_schedule(default_setup).subset(slice(0, 0))
    slc = transverse_slice(default_setup, empty, 15.0)
    assert np.all(slc.radii == default_setup.transverse().tip_radius)
    assert slc.facet_count == 0


def test_slice_preconditions(default_setup):
    sch = build_schedule(default_setup)
    with pytest.raises(ValueError):
        transverse_slice(default_setup, sch, 15.0, angular_resolution=100)
    with pytest.raises(ValueError):
        transverse_slice(default_setup, sch, 31.0)


def test_slice_facets_grow_with_pose_count():
    counts = []
    for interval in (8.0, 4.0, 2.0):
        s = MachineSetup(feed_per_rev=2.0, interval_angle=interval)
        counts.append(transverse_slice(s, build_schedule(s), 15.0).facet_count)
    assert counts[0] < counts[1] < counts[2]


def test_slice_polyline_is_closed(coarse):
    s, sch, _ = coarse
    slc = transverse_slice(s, sch, 10.0)
    poly = slc.closed_polyline()
    assert len(poly) == 720 * 30 + 1 and np.array_equal(poly[0], poly[-1])
    tp = s.transverse()
    assert np.all(slc.radii <= tp.tip_radius) and slc.radii.min() < tp.root_radius + 0.01


def test_fine_slice_matches_involute():
    s = MachineSetup(feed_per_rev=0.25, interval_angle=0.25)
    slc = transverse_slice(s, build_schedule(s), 15.0)
    tp = s.transverse()
    u, d = slice_involute_error(slc, s, 1.05 * tp.u_form, 0.95 * tp.u_tip)
    assert len(u) > 200
    assert np.max(np.abs(d)) < 1e-4
