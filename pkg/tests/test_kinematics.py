import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hobsim.gear import GearSpec, derive_transverse
from hobsim.hob import HobSpec, derive_hob
from hobsim.kinematics import (
    CutterPose,
    MachineSetup,
    ScheduleError,
    build_schedule,
    hob_angle_for,
    hob_to_workpiece,
    installation_angle,
    pose_transforms,
    workpiece_to_hob,
)


def test_installation_angle_examples():
    assert installation_angle(GearSpec(), HobSpec()) == pytest.approx(13.238, abs=1e-3)
    assert installation_angle(GearSpec(helix_angle=0.0), HobSpec()) == pytest.approx(-1.7616, abs=1e-4)
    assert installation_angle(GearSpec(), HobSpec(thread_hand="left")) == pytest.approx(16.762, abs=1e-3)


def test_pose_count_example():
    s = MachineSetup(feed_per_rev=1.0, interval_angle=2.0)
    assert (s.approach, s.overrun) == (6.0, 6.0)
    assert s.revolutions == 42
    assert s.pose_count == 7560 == len(build_schedule(s))


def test_consecutive_poses():
    sch = build_schedule(MachineSetup())
    assert np.allclose(np.diff(sch.gear_angle), math.radians(2.0), atol=1e-12, rtol=0)
    assert np.allclose(np.diff(sch.hob_axial_position), 2 / 360, atol=1e-14, rtol=0)
    assert sch.hob_axial_position[0] == -6.0
    # travel covers [-approach, face_width + overrun]
    assert sch.hob_axial_position[-1] + 2 / 360 == pytest.approx(36.0, abs=1e-9)
    assert [p.index for p in sch.poses[:3]] == [0, 1, 2]


def test_interval_must_divide_full_turn():
    with pytest.raises(ScheduleError):
        MachineSetup(interval_angle=7.0)


def test_pose_cap():
    with pytest.raises(ScheduleError):
        build_schedule(MachineSetup(), max_poses=1000)


@pytest.mark.parametrize("kwargs", [{"feed_per_rev": 0.0}, {"center_distance": -1.0}])
def test_setup_validation(kwargs):
    with pytest.raises(ScheduleError):
        MachineSetup(**kwargs)


def test_spur_has_no_differential():
    s = MachineSetup(gear=GearSpec(helix_angle=0.0))
    sch = build_schedule(s)
    ratio = sch.hob_angle / np.where(sch.gear_angle == 0, np.nan, sch.gear_angle)
    assert np.allclose(ratio[1:], 30.0, rtol=0, atol=1e-12)


def test_left_hand_hob_turns_the_other_way():
    right = hob_angle_for(MachineSetup(), 0.1, 2.0)
    left = hob_angle_for(MachineSetup(hob=HobSpec(thread_hand="left")), 0.1, 2.0)
    assert left == pytest.approx(-right)


def test_schedule_is_deterministic():
    a, b = build_schedule(MachineSetup()), build_schedule(MachineSetup())
    for name in ("gear_angle", "hob_angle", "hob_axial_position"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_json_round_trip():
    s = MachineSetup(feed_per_rev=3.0, interval_angle=4.0, gear=GearSpec(tooth_count=40))
    assert MachineSetup.from_json(s.to_json()) == s


pose_st = st.builds(CutterPose, st.just(0), st.floats(-7, 7), st.floats(-200, 200), st.floats(-10, 40))


@settings(max_examples=300, deadline=None)
@given(pose_st, st.tuples(*[st.floats(-50, 50)] * 3))
def test_round_trip(pose, p):
    s = MachineSetup()
    q = hob_to_workpiece(pose, s, workpiece_to_hob(pose, s, p))
    assert np.max(np.abs(q - np.array(p))) < 1e-12


def test_identity_pose_frame_layout():
    s = MachineSetup()
    q = workpiece_to_hob(CutterPose(0, 0.0, 0.0, 0.0), s, [0.0, 0.0, 0.0])
    assert math.hypot(q[0], q[1]) == pytest.approx(s.center_distance, abs=1e-12)


def test_gear_rotation_composes():
    # moving only the gear angle is the same as pre-rotating the workpiece point
    s = MachineSetup()
    p = np.array([30.0, 4.0, 12.0])
    d = 0.3
    a = workpiece_to_hob(CutterPose(0, 0.2 + d, 1.1, 5.0), s, p)
    c, sn = math.cos(d), math.sin(d)
    b = workpiece_to_hob(CutterPose(0, 0.2, 1.1, 5.0), s, [c * p[0] - sn * p[1], sn * p[0] + c * p[1], p[2]])
    assert np.max(np.abs(a - b)) < 1e-12


def _reduced(h, q):
    rho = math.hypot(q[0], q[1])
    w = q[2] - h.lead_per_radian * math.atan2(q[1], q[0])
    return rho, w


@pytest.mark.parametrize("gear, hob", [
    (GearSpec(), HobSpec()),
    (GearSpec(helix_angle=0.0), HobSpec()),
    (GearSpec(helix_angle=-10.0), HobSpec()),
    (GearSpec(), HobSpec(thread_hand="left")),
])
def test_conjugate_rolling_at_pitch_point(gear, hob):
    """The gear pitch point keeps its thread-section coordinates: no sliding across the thread."""
    s = MachineSetup(gear=gear, hob=hob, feed_per_rev=1.0)
    h = derive_hob(hob)
    tp = derive_transverse(gear)
    step = 1e-4  # rad of gear rotation; sliding would show up at first order
    for phi0, za in [(0.0, 0.0), (0.7, 12.0), (-2.0, 25.0)]:
        phis = np.array([phi0, phi0 + step])
        axial = za + s.feed_per_rev * (phis - phi0) / (2 * math.pi)
        A, b = pose_transforms(s, phis, hob_angle_for(s, phis, axial), axial)
        # material point of the gear that sits at the pitch point at the first pose
        c, sn = math.cos(phi0), math.sin(phi0)
        pitch_pt = np.array([tp.pitch_radius, 0.0, za])
        p = np.array([c * pitch_pt[0] + sn * pitch_pt[1], -sn * pitch_pt[0] + c * pitch_pt[1], za])
        r0, w0 = _reduced(h, A[0] @ p + b[0])
        r1, w1 = _reduced(h, A[1] @ p + b[1])
        assert abs(r1 - r0) < 1e-6 and abs(math.remainder(w1 - w0, h.axial_pitch)) < 1e-6
        # control: freezing the hob for the step slides the thread by roughly r * step
        frozen = pose_transforms(s, phis, np.full(2, hob_angle_for(s, phi0, za)), axial)
        _, w3 = _reduced(h, frozen[0][1] @ p + frozen[1][1])
        assert abs(math.remainder(w3 - w0, h.axial_pitch)) > 1e-4
        # and the pitch point really is on the hob pitch cylinder
        assert r0 == pytest.approx(h.pitch_radius, abs=1e-9)
